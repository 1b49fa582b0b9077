#include "hrcn/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hrcn {

using nlohmann::json;

std::string_view to_string(RadarKind kind) {
    switch (kind) {
        case RadarKind::kMMR: return "MMR";
        case RadarKind::kPAR: return "PAR";
        case RadarKind::kMSR: return "MSR";
    }
    return "?";
}

RadarKind radar_kind_from_string(std::string_view s) {
    if (s == "MMR") return RadarKind::kMMR;
    if (s == "PAR") return RadarKind::kPAR;
    if (s == "MSR") return RadarKind::kMSR;
    throw ParseError("unknown radar kind '" + std::string(s) + "'");
}

double CommSystem::floor(std::size_t link, std::size_t interval) const {
    const auto& row = throughput_floor.size() == 1 ? throughput_floor.front() : throughput_floor.at(interval);
    return row.at(link);
}

std::size_t Scenario::count(RadarKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(radars.begin(), radars.end(), [kind](const RadarNode& r) { return r.kind == kind; }));
}

// ---------------------------------------------------------------------------
// Validation

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

void require_positive(double v, const std::string& name) {
    if (!(std::isfinite(v) && v > 0.0)) fail(name + " must be finite and > 0");
}

void require_positive(const std::optional<double>& v, const std::string& name, const std::string& why) {
    if (!v) fail(name + " is required (" + why + ")");
    require_positive(*v, name);
}

bool all_equal(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

void validate(const Scenario& s) {
    require_positive(s.grid.interval, "grid.T0");
    if (s.grid.num_intervals < 1) fail("grid.num_intervals must be >= 1");
    if (!std::isfinite(s.grid.start_time)) fail("grid.start_time must be finite");

    if (s.targets.empty()) fail("at least one target is required");
    const std::size_t n = s.radars.size();
    const std::size_t q_count = s.targets.size();

    for (std::size_t i = 0; i < n; ++i) {
        const RadarNode& r = s.radars[i];
        const std::string p = "radars[" + std::to_string(i) + "]";
        if (!r.position.allFinite()) fail(p + ".position must be finite");
        require_positive(r.bandwidth, p + ".bandwidth");
        require_positive(r.beamwidth, p + ".beamwidth");
        require_positive(r.noise_var, p + ".noise_var");
        require_positive(r.range_const, p + ".range_const");
        require_positive(r.bearing_const, p + ".bearing_const");
        switch (r.kind) {
            case RadarKind::kMMR:
                require_positive(r.fixed_dwell, p + ".fixed_dwell", "MMR dwell is not optimized");
                require_positive(r.power_budget, p + ".power_budget", "MMR power budget");
                break;
            case RadarKind::kPAR:
                require_positive(r.fixed_power, p + ".fixed_power", "PAR power is not optimized");
                require_positive(r.time_budget, p + ".time_budget", "PAR dwell-time budget");
                break;
            case RadarKind::kMSR:
                require_positive(r.fixed_power, p + ".fixed_power", "MSR power is not optimized");
                require_positive(r.fixed_dwell, p + ".fixed_dwell", "MSR dwell is not optimized");
                break;
        }
        if (r.initial_time.size() != q_count) fail(p + ".initial_time must have one entry per target");
        if (r.revisit_interval.size() != q_count) fail(p + ".revisit_interval must have one entry per target");
        for (std::size_t q = 0; q < q_count; ++q) {
            if (!std::isfinite(r.initial_time[q])) fail(p + ".initial_time must be finite");
            require_positive(r.revisit_interval[q], p + ".revisit_interval[" + std::to_string(q) + "]");
        }
        if (r.kind != RadarKind::kPAR && !all_equal(r.revisit_interval)) {
            fail(p + ".revisit_interval must be identical across targets for " + std::string(to_string(r.kind)));
        }
    }

    const CommSystem& c = s.comm;
    if (c.num_links < 1) fail("comm.num_links must be >= 1");
    require_positive(c.noise_var, "comm.noise_var");
    require_positive(c.bs_power_budget, "comm.bs_power_budget");
    if (c.radar_to_comm.size() != c.num_links) fail("comm.radar_to_comm_gain must have num_links rows");
    for (const auto& row : c.radar_to_comm) {
        if (row.size() != n) fail("comm.radar_to_comm_gain rows must have one entry per radar");
        for (const auto& g : row) {
            if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) fail("comm.radar_to_comm_gain must be finite");
        }
    }
    if (c.comm_to_radar.size() != n) fail("comm.comm_to_radar_gain must have one row per radar");
    for (const auto& row : c.comm_to_radar) {
        if (row.size() != c.num_links) fail("comm.comm_to_radar_gain rows must have num_links entries");
        for (const auto& g : row) {
            if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) fail("comm.comm_to_radar_gain must be finite");
        }
    }
    if (c.throughput_floor.empty()) fail("comm.throughput_floor is required");
    if (c.throughput_floor.size() != 1 && c.throughput_floor.size() != s.grid.num_intervals) {
        fail("comm.throughput_floor must have one row or one row per interval");
    }
    for (const auto& row : c.throughput_floor) {
        if (row.size() != c.num_links) fail("comm.throughput_floor rows must have num_links entries");
        for (double e : row) {
            if (!(std::isfinite(e) && e >= 0.0)) fail("comm.throughput_floor entries must be finite and >= 0");
        }
    }

    for (std::size_t q = 0; q < q_count; ++q) {
        const TargetTruth& t = s.targets[q];
        const std::string p = "targets[" + std::to_string(q) + "]";
        if (!t.initial_state.allFinite()) fail(p + ".initial_state must be finite");
        if (!(std::isfinite(t.process_noise_intensity) && t.process_noise_intensity >= 0.0)) {
            fail(p + ".process_noise_intensity must be finite and >= 0");
        }
        if (t.rcs.size() != n) fail(p + ".rcs must have one entry per radar");
        for (double eta : t.rcs) require_positive(eta, p + ".rcs");
        if (!t.init_offset.allFinite()) fail(p + ".init_offset must be finite");
        for (int d = 0; d < 4; ++d) require_positive(t.init_std[d], p + ".init_std");
    }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

double get_number(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key)) throw ValidationError(ctx + "." + key + " is required");
    if (!j.at(key).is_number()) throw ParseError(ctx + "." + key + " must be a number");
    return j.at(key).get<double>();
}

std::optional<double> get_optional(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number()) throw ParseError(ctx + "." + key + " must be a number");
    return j.at(key).get<double>();
}

std::vector<double> get_vector(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key)) throw ValidationError(ctx + "." + key + " is required");
    const json& a = j.at(key);
    if (!a.is_array()) throw ParseError(ctx + "." + key + " must be an array");
    std::vector<double> out;
    for (const json& v : a) {
        if (!v.is_number()) throw ParseError(ctx + "." + key + " must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Vec4 to_vec4(const std::vector<double>& v, const std::string& name) {
    if (v.size() != 4) throw ParseError(name + " must have 4 entries");
    return Vec4(v[0], v[1], v[2], v[3]);
}

std::complex<double> to_complex(const json& v, const std::string& ctx) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ParseError(ctx + " gains must be [re, im] pairs");
}

std::vector<std::vector<std::complex<double>>> get_gain_matrix(const json& j, const char* key,
                                                               const std::string& ctx) {
    if (!j.contains(key)) throw ValidationError(ctx + "." + key + " is required");
    const json& rows = j.at(key);
    if (!rows.is_array()) throw ParseError(ctx + "." + key + " must be an array of rows");
    std::vector<std::vector<std::complex<double>>> out;
    for (const json& row : rows) {
        if (!row.is_array()) throw ParseError(ctx + "." + key + " must be an array of rows");
        auto& dst = out.emplace_back();
        for (const json& v : row) dst.push_back(to_complex(v, ctx + "." + key));
    }
    return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("scenario root must be an object");
    for (const char* section : {"grid", "radars", "comm", "targets"}) {
        if (!doc.contains(section)) throw ValidationError(std::string("missing section '") + section + "'");
    }

    Scenario s;
    const json& g = doc.at("grid");
    s.grid.interval = get_number(g, "T0", "grid");
    const double k = get_number(g, "num_intervals", "grid");
    if (k < 0 || k != std::floor(k)) throw ValidationError("grid.num_intervals must be a non-negative integer");
    s.grid.num_intervals = static_cast<std::size_t>(k);
    s.grid.start_time = get_optional(g, "start_time", "grid").value_or(0.0);

    if (!doc.at("radars").is_array()) throw ParseError("radars must be an array");
    std::size_t idx = 0;
    for (const json& r : doc.at("radars")) {
        const std::string ctx = "radars[" + std::to_string(idx) + "]";
        RadarNode node;
        node.id = r.contains("id") ? r.at("id").get<int>() : static_cast<int>(idx + 1);
        if (!r.contains("kind") || !r.at("kind").is_string()) throw ValidationError(ctx + ".kind is required");
        node.kind = radar_kind_from_string(r.at("kind").get<std::string>());
        const auto pos = get_vector(r, "position", ctx);
        if (pos.size() != 2) throw ParseError(ctx + ".position must be [x, y]");
        node.position = Vec2(pos[0], pos[1]);
        node.bandwidth = get_number(r, "bandwidth", ctx);
        node.beamwidth = get_number(r, "beamwidth", ctx);
        node.noise_var = get_number(r, "noise_var", ctx);
        node.fixed_dwell = get_optional(r, "fixed_dwell", ctx);
        node.fixed_power = get_optional(r, "fixed_power", ctx);
        node.power_budget = get_optional(r, "power_budget", ctx);
        node.time_budget = get_optional(r, "time_budget", ctx);
        node.range_const = get_optional(r, "range_const", ctx).value_or(1.0);
        node.bearing_const = get_optional(r, "bearing_const", ctx).value_or(1.0);
        node.initial_time = get_vector(r, "initial_time", ctx);
        node.revisit_interval = get_vector(r, "revisit_interval", ctx);
        s.radars.push_back(std::move(node));
        ++idx;
    }

    const json& c = doc.at("comm");
    const double links = get_number(c, "num_links", "comm");
    if (links < 0 || links != std::floor(links)) throw ValidationError("comm.num_links must be a non-negative integer");
    s.comm.num_links = static_cast<std::size_t>(links);
    s.comm.noise_var = get_number(c, "noise_var", "comm");
    s.comm.bs_power_budget = get_number(c, "bs_power_budget", "comm");
    s.comm.radar_to_comm = get_gain_matrix(c, "radar_to_comm_gain", "comm");
    s.comm.comm_to_radar = get_gain_matrix(c, "comm_to_radar_gain", "comm");
    if (!c.contains("throughput_floor")) throw ValidationError("comm.throughput_floor is required");
    const json& floor = c.at("throughput_floor");
    if (!floor.is_array()) throw ParseError("comm.throughput_floor must be an array");
    if (!floor.empty() && floor.front().is_array()) {
        for (const json& row : floor) s.comm.throughput_floor.push_back(row.get<std::vector<double>>());
    } else {
        s.comm.throughput_floor.push_back(floor.get<std::vector<double>>());
    }

    if (!doc.at("targets").is_array()) throw ParseError("targets must be an array");
    idx = 0;
    for (const json& t : doc.at("targets")) {
        const std::string ctx = "targets[" + std::to_string(idx) + "]";
        TargetTruth target;
        target.id = t.contains("id") ? t.at("id").get<int>() : static_cast<int>(idx + 1);
        target.initial_state = to_vec4(get_vector(t, "initial_state", ctx), ctx + ".initial_state");
        target.process_noise_intensity = get_optional(t, "process_noise_intensity", ctx).value_or(0.0);
        target.rcs = get_vector(t, "rcs", ctx);
        if (t.contains("init_offset")) target.init_offset = to_vec4(get_vector(t, "init_offset", ctx), ctx);
        if (t.contains("init_std")) target.init_std = to_vec4(get_vector(t, "init_std", ctx), ctx);
        s.targets.push_back(std::move(target));
        ++idx;
    }

    validate(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string dump_scenario(const Scenario& s) {
    json doc;
    doc["grid"] = {{"T0", s.grid.interval}, {"num_intervals", s.grid.num_intervals}, {"start_time", s.grid.start_time}};
    json radars = json::array();
    for (const RadarNode& r : s.radars) {
        json j = {{"id", r.id},
                  {"kind", std::string(to_string(r.kind))},
                  {"position", {r.position.x(), r.position.y()}},
                  {"bandwidth", r.bandwidth},
                  {"beamwidth", r.beamwidth},
                  {"noise_var", r.noise_var},
                  {"range_const", r.range_const},
                  {"bearing_const", r.bearing_const},
                  {"initial_time", r.initial_time},
                  {"revisit_interval", r.revisit_interval}};
        if (r.fixed_dwell) j["fixed_dwell"] = *r.fixed_dwell;
        if (r.fixed_power) j["fixed_power"] = *r.fixed_power;
        if (r.power_budget) j["power_budget"] = *r.power_budget;
        if (r.time_budget) j["time_budget"] = *r.time_budget;
        radars.push_back(std::move(j));
    }
    doc["radars"] = std::move(radars);

    auto gains = [](const std::vector<std::vector<std::complex<double>>>& m) {
        json rows = json::array();
        for (const auto& row : m) {
            json r = json::array();
            for (const auto& g : row) r.push_back({g.real(), g.imag()});
            rows.push_back(std::move(r));
        }
        return rows;
    };
    doc["comm"] = {{"num_links", s.comm.num_links},
                   {"noise_var", s.comm.noise_var},
                   {"bs_power_budget", s.comm.bs_power_budget},
                   {"radar_to_comm_gain", gains(s.comm.radar_to_comm)},
                   {"comm_to_radar_gain", gains(s.comm.comm_to_radar)},
                   {"throughput_floor", s.comm.throughput_floor}};

    json targets = json::array();
    for (const TargetTruth& t : s.targets) {
        auto v4 = [](const Vec4& v) { return std::vector<double>{v[0], v[1], v[2], v[3]}; };
        targets.push_back({{"id", t.id},
                           {"initial_state", v4(t.initial_state)},
                           {"process_noise_intensity", t.process_noise_intensity},
                           {"rcs", t.rcs},
                           {"init_offset", v4(t.init_offset)},
                           {"init_std", v4(t.init_std)}});
    }
    doc["targets"] = std::move(targets);
    return doc.dump(2);
}

std::uint64_t scenario_hash(const Scenario& scenario) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump_scenario(scenario)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Schedule

MeasurementSchedule::MeasurementSchedule(std::size_t radars, std::size_t targets, std::size_t intervals)
    : radars_(radars), targets_(targets), intervals_(intervals), times_(radars * targets * intervals) {}

std::vector<double> progression_in_window(double first, double stride, double lo, double hi) {
    std::vector<double> out;
    if (!(stride > 0.0) || hi <= lo) return out;
    // Boundary points go to the window they close; the slack absorbs the
    // rounding of first + n*stride landing exactly on a grid boundary.
    const double tol = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
    const double start = std::floor((lo - first) / stride) - 1.0;
    for (auto n = static_cast<long long>(std::max(0.0, start));; ++n) {
        const double t = first + static_cast<double>(n) * stride;
        if (t > hi + tol) break;
        if (t > lo + tol) out.push_back(t);
    }
    return out;
}

MeasurementSchedule build_schedule(const Scenario& scenario) {
    const std::size_t n = scenario.num_radars();
    const std::size_t q_count = scenario.num_targets();
    const std::size_t k_count = scenario.grid.num_intervals;
    MeasurementSchedule schedule(n, q_count, k_count);
    for (std::size_t i = 0; i < n; ++i) {
        const RadarNode& r = scenario.radars[i];
        for (std::size_t q = 0; q < q_count; ++q) {
            for (std::size_t k = 0; k < k_count; ++k) {
                schedule.times(i, q, k) = progression_in_window(r.initial_time[q], r.revisit_interval[q],
                                                                scenario.grid.boundary(k),
                                                                scenario.grid.boundary(k + 1));
            }
        }
    }
    return schedule;
}

}  // namespace hrcn
