#pragma once

#include "hrcn/common.hpp"

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hrcn {

/// MMR: co-located MIMO radar, per-target power is allocated, dwell fixed.
/// PAR: phased array, per-target dwell is allocated, power fixed.
/// MSR: mechanically scanned, power and dwell both fixed.
enum class RadarKind { kMMR, kPAR, kMSR };

std::string_view to_string(RadarKind kind);
RadarKind radar_kind_from_string(std::string_view s);

struct RadarNode {
    int id = 0;
    RadarKind kind = RadarKind::kMSR;
    Vec2 position = Vec2::Zero();         // m
    double bandwidth = 0.0;               // Hz
    double beamwidth = 0.0;               // rad, 3 dB receive beamwidth
    double noise_var = 0.0;               // W
    std::optional<double> fixed_dwell;    // s, MMR and MSR
    std::optional<double> fixed_power;    // W, PAR and MSR
    std::optional<double> power_budget;   // W, MMR only
    std::optional<double> time_budget;    // s, PAR only
    double range_const = 1.0;
    double bearing_const = 1.0;
    std::vector<double> initial_time;      // s, per target
    std::vector<double> revisit_interval;  // s, per target
};

struct CommSystem {
    std::size_t num_links = 0;
    // radar_to_comm[j][i]: interference from radar i onto downlink j.
    std::vector<std::vector<std::complex<double>>> radar_to_comm;
    // comm_to_radar[i][j]: interference from downlink j onto radar i.
    std::vector<std::vector<std::complex<double>>> comm_to_radar;
    double noise_var = 0.0;         // W
    double bs_power_budget = 0.0;   // W
    // throughput_floor[k][j] in nats. A single row applies to every interval.
    std::vector<std::vector<double>> throughput_floor;

    double floor(std::size_t link, std::size_t interval) const;
};

struct TargetTruth {
    int id = 0;
    Vec4 initial_state = Vec4::Zero();      // [x, vx, y, vy]
    double process_noise_intensity = 0.0;   // m^2/s^3
    std::vector<double> rcs;                // m^2, per radar
    Vec4 init_offset = Vec4::Zero();        // track mean = truth + offset
    Vec4 init_std = Vec4::Constant(1.0);    // track covariance = diag(std^2)
};

struct FusionGrid {
    double interval = 0.0;        // T0, s
    std::size_t num_intervals = 0;
    double start_time = 0.0;

    double boundary(std::size_t k) const { return start_time + static_cast<double>(k) * interval; }
};

struct Scenario {
    FusionGrid grid;
    std::vector<RadarNode> radars;
    CommSystem comm;
    std::vector<TargetTruth> targets;

    std::size_t num_radars() const { return radars.size(); }
    std::size_t num_targets() const { return targets.size(); }
    std::size_t count(RadarKind kind) const;
};

/// Throws ValidationError naming the first violated invariant.
void validate(const Scenario& scenario);

/// Parses a JSON scenario document. Throws ParseError or ValidationError.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON serialization; parse_scenario(dump_scenario(s)) == s.
std::string dump_scenario(const Scenario& scenario);

/// FNV-1a over the canonical serialization.
std::uint64_t scenario_hash(const Scenario& scenario);

// ---------------------------------------------------------------------------

/// Measurement times per (radar, target, interval). Interval k spans
/// (t_k, t_{k+1}] with t_k = start_time + k*T0.
class MeasurementSchedule {
public:
    MeasurementSchedule() = default;
    MeasurementSchedule(std::size_t radars, std::size_t targets, std::size_t intervals);

    const std::vector<double>& times(std::size_t radar, std::size_t target, std::size_t k) const {
        return times_[flat(radar, target, k)];
    }
    std::vector<double>& times(std::size_t radar, std::size_t target, std::size_t k) {
        return times_[flat(radar, target, k)];
    }
    std::size_t count(std::size_t radar, std::size_t target, std::size_t k) const {
        return times(radar, target, k).size();
    }

    std::size_t num_radars() const { return radars_; }
    std::size_t num_targets() const { return targets_; }
    std::size_t num_intervals() const { return intervals_; }

    bool operator==(const MeasurementSchedule&) const = default;

private:
    std::size_t flat(std::size_t i, std::size_t q, std::size_t k) const { return (i * targets_ + q) * intervals_ + k; }

    std::size_t radars_ = 0;
    std::size_t targets_ = 0;
    std::size_t intervals_ = 0;
    std::vector<std::vector<double>> times_;
};

/// Points of {first + n*stride : n >= 0} inside the half-open window (lo, hi].
std::vector<double> progression_in_window(double first, double stride, double lo, double hi);

MeasurementSchedule build_schedule(const Scenario& scenario);

}  // namespace hrcn
