#include "hrcn/harness.hpp"

#include "hrcn/fusion.hpp"
#include "hrcn/kinematics.hpp"
#include "hrcn/rng.hpp"
#include "hrcn/tracker.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace hrcn {

using nlohmann::json;

double rmse(const std::vector<std::vector<Vec4>>& errors, const Mat4& lambda) {
    if (errors.empty()) throw std::invalid_argument("rmse: no targets");
    double total = 0.0;
    for (const auto& trials : errors) {
        if (trials.empty()) throw std::invalid_argument("rmse: empty trial set");
        double sq = 0.0;
        for (const Vec4& e : trials) sq += (lambda * e).squaredNorm();
        total += std::sqrt(sq / static_cast<double>(trials.size()));
    }
    return total;
}

std::string_view to_string(Policy p) {
    switch (p) {
        case Policy::kOptimized: return "optimized";
        case Policy::kUniform: return "uniform";
        case Policy::kRandom: return "random";
    }
    return "?";
}

Policy policy_from_string(std::string_view s) {
    if (s == "optimized") return Policy::kOptimized;
    if (s == "uniform") return Policy::kUniform;
    if (s == "random") return Policy::kRandom;
    throw ParseError("unknown policy '" + std::string(s) + "'");
}

const PolicySeries& ExperimentResult::at(Policy p) const {
    for (const auto& s : series) {
        if (s.policy == p) return s;
    }
    throw std::out_of_range("ExperimentResult: policy not present");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

struct TrialOutcome {
    std::vector<std::vector<Vec4>> errors;  // [k][q]
    std::vector<double> g;                  // [k]
    std::vector<std::vector<double>> throughput;
    std::vector<double> cov_trace;
    std::string trace;
};

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t n = next++; n < count; n = next++) {
            try {
                fn(n);
            } catch (...) {
                errors[n] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

AllocationPolicy make_policy(Policy policy, const ExperimentConfig& config, std::string* trace) {
    switch (policy) {
        case Policy::kOptimized:
            return [cfg = config.allocator, trace](const AllocationProblem& p) {
                AllocationResult r = adam_solve(p, cfg);
                if (trace) {
                    json head = {{"interval", p.model().interval() + 1}, {"iterations", r.iterations},
                                 {"converged", r.converged}, {"g", r.g}};
                    *trace += head.dump() + "\n" + trace_to_jsonl(r.trace);
                }
                return r.z;
            };
        case Policy::kUniform:
            return [](const AllocationProblem& p) { return baseline_uniform(p.model()); };
        case Policy::kRandom:
            return [seed = config.master_seed, projected = config.random_projected](const AllocationProblem& p) {
                const auto k = static_cast<std::uint64_t>(p.model().interval());
                return baseline_random(p.model(),
                                       derive_seed(seed, {static_cast<std::uint64_t>(Stream::kRandomAllocation), k}),
                                       projected);
            };
    }
    throw std::logic_error("make_policy: unknown policy");
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

std::uint64_t parse_hex64(const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (res.ec != std::errc()) throw ParseError("bad hex value '" + s + "'");
    return v;
}

}  // namespace

ExperimentResult compare_allocations(const Scenario& scenario, const ExperimentConfig& config) {
    if (config.trials < 1) throw std::invalid_argument("compare_allocations: at least one trial required");
    if (config.policies.empty()) throw std::invalid_argument("compare_allocations: no policies");

    const MeasurementSchedule schedule = build_schedule(scenario);
    const std::size_t intervals = scenario.grid.num_intervals;
    const std::size_t targets = scenario.num_targets();
    const std::size_t links = scenario.comm.num_links;
    const Mat4 lambda = weight_matrix(scenario.grid.interval);

    ExperimentResult result;
    result.scenario_hash = scenario_hash(scenario);
    result.master_seed = config.master_seed;
    result.trials = config.trials;
    result.closed_loop = config.closed_loop;
    result.random_projected = config.random_projected;
    result.num_links = links;
    result.scenario_json = dump_scenario(scenario);

    std::uint64_t policy_mask = 0;
    for (Policy p : config.policies) policy_mask = policy_mask * 4 + static_cast<std::uint64_t>(p) + 1;
    result.run_id = hex64(derive_seed(result.scenario_hash, {config.master_seed, config.trials, policy_mask,
                                                             config.closed_loop ? 1u : 0u,
                                                             config.random_projected ? 1u : 0u}));

    for (Policy policy : config.policies) {
        std::vector<TrialOutcome> outcomes(config.trials);
        parallel_for(config.trials, config.threads, [&](std::size_t n) {
            TrackingOptions opts;
            opts.master_seed = config.master_seed;
            opts.trial = n;
            opts.closed_loop = config.closed_loop;
            opts.jitter = config.allocator.jitter;
            TrialOutcome& out = outcomes[n];
            std::string* trace = (n == 0 && policy == Policy::kOptimized) ? &out.trace : nullptr;
            const TrackingRun run = run_tracking(scenario, schedule, make_policy(policy, config, trace), opts);
            for (const IntervalStep& step : run.steps) {
                auto& errs = out.errors.emplace_back();
                double tr = 0.0;
                for (const TargetStep& ts : step.targets) {
                    errs.push_back(ts.filtered.mean - ts.truth);
                    tr += ts.filtered.cov.trace();
                }
                out.g.push_back(step.g);
                out.throughput.push_back(step.throughput);
                out.cov_trace.push_back(tr);
            }
        });

        // Reduce in trial order so the result does not depend on scheduling.
        PolicySeries series;
        series.policy = policy;
        const auto nt = static_cast<double>(config.trials);
        for (std::size_t k = 0; k < intervals; ++k) {
            std::vector<std::vector<Vec4>> errors(targets);
            double g = 0.0;
            double tr = 0.0;
            std::vector<double> thr(links, 0.0);
            for (const TrialOutcome& out : outcomes) {
                for (std::size_t q = 0; q < targets; ++q) errors[q].push_back(out.errors[k][q]);
                g += out.g[k];
                tr += out.cov_trace[k];
                for (std::size_t j = 0; j < links; ++j) thr[j] += out.throughput[k][j];
            }
            for (double& t : thr) t /= nt;
            series.g.push_back(g / nt);
            series.rmse.push_back(rmse(errors, lambda));
            series.cov_trace.push_back(tr / nt);
            series.throughput.push_back(std::move(thr));
        }
        double sum = 0.0;
        for (double r : series.rmse) sum += r;
        series.average_rmse = sum / static_cast<double>(intervals);
        result.series.push_back(std::move(series));
        if (policy == Policy::kOptimized) result.solver_trace = outcomes.front().trace;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Result files

std::string result_csv(const ExperimentResult& result) {
    std::ostringstream os;
    os << "run_id,policy,k,g_value,rmse";
    for (std::size_t j = 0; j < result.num_links; ++j) os << ",throughput_j" << (j + 1);
    os << '\n';
    for (const PolicySeries& s : result.series) {
        for (std::size_t k = 0; k < s.g.size(); ++k) {
            os << result.run_id << ',' << to_string(s.policy) << ',' << (k + 1) << ',' << format_double(s.g[k]) << ','
               << format_double(s.rmse[k]);
            for (double t : s.throughput[k]) os << ',' << format_double(t);
            os << '\n';
        }
    }
    return os.str();
}

namespace {

json manifest_json(const ExperimentResult& r) {
    json policies = json::array();
    for (const PolicySeries& s : r.series) {
        std::vector<std::string> cov;
        for (double c : s.cov_trace) cov.push_back(format_double(c));
        policies.push_back({{"policy", std::string(to_string(s.policy))},
                            {"average_rmse", format_double(s.average_rmse)},
                            {"cov_trace", cov}});
    }
    return {{"run_id", r.run_id},
            {"scenario_hash", hex64(r.scenario_hash)},
            {"master_seed", r.master_seed},
            {"trials", r.trials},
            {"closed_loop", r.closed_loop},
            {"random_projected", r.random_projected},
            {"num_links", r.num_links},
            {"policies", policies},
            {"scenario", json::parse(r.scenario_json)}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

}  // namespace

void write_result(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "results.csv", result_csv(result));
    write_file(dir / "manifest.json", manifest_json(result).dump(2) + "\n");
    write_file(dir / "trace.jsonl", result.solver_trace);
}

ExperimentResult read_result(const std::filesystem::path& dir) {
    ExperimentResult r;
    json m;
    try {
        m = json::parse(read_file(dir / "manifest.json"));
        r.run_id = m.at("run_id").get<std::string>();
        r.scenario_hash = parse_hex64(m.at("scenario_hash").get<std::string>());
        r.master_seed = m.at("master_seed").get<std::uint64_t>();
        r.trials = m.at("trials").get<std::size_t>();
        r.closed_loop = m.at("closed_loop").get<bool>();
        r.random_projected = m.at("random_projected").get<bool>();
        r.num_links = m.at("num_links").get<std::size_t>();
        r.scenario_json = m.at("scenario").dump(2);
        for (const json& p : m.at("policies")) {
            PolicySeries s;
            s.policy = policy_from_string(p.at("policy").get<std::string>());
            s.average_rmse = parse_double(p.at("average_rmse").get<std::string>());
            for (const json& c : p.at("cov_trace")) s.cov_trace.push_back(parse_double(c.get<std::string>()));
            r.series.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest.json: ") + e.what());
    }

    std::istringstream csv(read_file(dir / "results.csv"));
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 5 + r.num_links) throw ParseError("results.csv: wrong column count");
        const Policy p = policy_from_string(cells[1]);
        auto it = std::find_if(r.series.begin(), r.series.end(), [p](const PolicySeries& s) { return s.policy == p; });
        if (it == r.series.end()) throw ParseError("results.csv: policy missing from manifest");
        it->g.push_back(parse_double(cells[3]));
        it->rmse.push_back(parse_double(cells[4]));
        auto& thr = it->throughput.emplace_back();
        for (std::size_t j = 0; j < r.num_links; ++j) thr.push_back(parse_double(cells[5 + j]));
    }
    if (std::filesystem::exists(dir / "trace.jsonl")) r.solver_trace = read_file(dir / "trace.jsonl");
    return r;
}

// ---------------------------------------------------------------------------
// Sweep

std::string_view to_string(SweepParam p) {
    switch (p) {
        case SweepParam::kThroughputFloor: return "epsilon";
        case SweepParam::kMmrBudget: return "mmr-budget";
        case SweepParam::kParBudget: return "par-budget";
        case SweepParam::kBsBudget: return "bs-budget";
    }
    return "?";
}

SweepParam sweep_param_from_string(std::string_view s) {
    for (SweepParam p : {SweepParam::kThroughputFloor, SweepParam::kMmrBudget, SweepParam::kParBudget,
                         SweepParam::kBsBudget}) {
        if (to_string(p) == s) return p;
    }
    throw ParseError("unknown sweep parameter '" + std::string(s) + "'");
}

Scenario with_parameter(const Scenario& scenario, SweepParam param, double value) {
    Scenario s = scenario;
    switch (param) {
        case SweepParam::kThroughputFloor:
            for (auto& row : s.comm.throughput_floor) std::fill(row.begin(), row.end(), value);
            break;
        case SweepParam::kMmrBudget:
            for (auto& r : s.radars) {
                if (r.kind == RadarKind::kMMR) r.power_budget = value;
            }
            break;
        case SweepParam::kParBudget:
            for (auto& r : s.radars) {
                if (r.kind == RadarKind::kPAR) r.time_budget = value;
            }
            break;
        case SweepParam::kBsBudget: s.comm.bs_power_budget = value; break;
    }
    validate(s);
    return s;
}

std::vector<TargetPrior> initial_priors(const Scenario& scenario, std::size_t interval) {
    const double t0 = scenario.grid.interval;
    const Mat4 f = transition_matrix(t0);
    std::vector<TargetPrior> priors;
    for (const TargetTruth& target : scenario.targets) {
        const TrackState track = initial_track(target);
        const Mat4 gamma = process_noise_cov(t0, target.process_noise_intensity);
        TargetPrior p;
        p.info = spd_inverse(track.cov, 0.0);
        p.predicted_state = f * track.mean;
        for (std::size_t k = 0; k < interval; ++k) {
            p.info = prior_information(p.info, f, gamma);
            p.predicted_state = f * p.predicted_state;
        }
        priors.push_back(p);
    }
    return priors;
}

std::vector<SweepPoint> sweep(const Scenario& scenario, SweepParam param, const std::vector<double>& values,
                              std::size_t interval, const AllocatorConfig& config) {
    std::vector<SweepPoint> points;
    for (double v : values) {
        SweepPoint pt;
        pt.value = v;
        const Scenario s = with_parameter(scenario, param, v);
        const MeasurementSchedule schedule = build_schedule(s);
        const std::vector<TargetPrior> priors = initial_priors(s, interval);
        try {
            const AllocationProblem problem(IntervalModel(s, schedule, interval), priors, config.jitter);
            const AllocationResult r = adam_solve(problem, config);
            pt.g_optimized = r.g;
            try {
                pt.g_uniform = objective_g(problem, baseline_uniform(problem.model()));
            } catch (const InfeasibleError&) {
                pt.g_uniform = std::numeric_limits<double>::quiet_NaN();
            }
            for (std::size_t j = 0; j < s.comm.num_links; ++j) {
                pt.throughput.push_back(throughput_r(problem.model(), j, r.z));
            }
            pt.feasible = true;
        } catch (const InfeasibleError& e) {
            pt.diagnostic = std::string(e.what()) + ": " + e.certificate();
        }
        points.push_back(std::move(pt));
    }
    return points;
}

std::string sweep_csv(SweepParam param, const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    std::size_t links = 0;
    for (const auto& p : points) links = std::max(links, p.throughput.size());
    os << to_string(param) << ",feasible,g_optimized,g_uniform";
    for (std::size_t j = 0; j < links; ++j) os << ",throughput_j" << (j + 1);
    os << '\n';
    for (const auto& p : points) {
        os << format_double(p.value) << ',' << (p.feasible ? 1 : 0) << ',' << format_double(p.g_optimized) << ','
           << format_double(p.g_uniform);
        for (std::size_t j = 0; j < links; ++j) {
            os << ',' << (j < p.throughput.size() ? format_double(p.throughput[j]) : std::string());
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace hrcn
