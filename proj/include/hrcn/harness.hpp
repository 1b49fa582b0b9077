#pragma once

#include "hrcn/allocator.hpp"
#include "hrcn/common.hpp"
#include "hrcn/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hrcn {

/// sum_q sqrt( (1/N_t) sum_n |Lambda e_{q,n}|^2 ), with errors[q][n] the
/// filtered-minus-true state of target q in trial n. Throws
/// std::invalid_argument on an empty trial set.
double rmse(const std::vector<std::vector<Vec4>>& errors, const Mat4& lambda);

enum class Policy { kOptimized, kUniform, kRandom };

std::string_view to_string(Policy p);
Policy policy_from_string(std::string_view s);

struct ExperimentConfig {
    std::size_t trials = 100;
    std::uint64_t master_seed = 0;
    std::vector<Policy> policies{Policy::kOptimized, Policy::kUniform, Policy::kRandom};
    bool closed_loop = true;
    bool random_projected = true;
    unsigned threads = 0;  // 0: hardware concurrency
    AllocatorConfig allocator;
};

struct PolicySeries {
    Policy policy = Policy::kOptimized;
    std::vector<double> g;                         // per interval, mean over trials
    std::vector<double> rmse;                      // per interval
    std::vector<std::vector<double>> throughput;   // [k][j], mean over trials
    std::vector<double> cov_trace;                 // per interval, mean filtered covariance trace summed over targets
    double average_rmse = 0.0;
};

struct ExperimentResult {
    std::string run_id;
    std::uint64_t scenario_hash = 0;
    std::uint64_t master_seed = 0;
    std::size_t trials = 0;
    bool closed_loop = true;
    bool random_projected = true;
    std::size_t num_links = 0;
    std::vector<PolicySeries> series;
    std::string scenario_json;  // config snapshot
    std::string solver_trace;   // JSON lines of the optimized policy, trial 0

    const PolicySeries& at(Policy p) const;
};

/// Runs the full pipeline per policy. Measurement and process noise are drawn
/// per (trial, radar, target, interval, look) from the master seed, so every
/// policy sees the same noise (common random numbers).
ExperimentResult compare_allocations(const Scenario& scenario, const ExperimentConfig& config);

/// Writes results.csv, manifest.json and trace.jsonl into `dir`.
void write_result(const ExperimentResult& result, const std::filesystem::path& dir);
ExperimentResult read_result(const std::filesystem::path& dir);

/// CSV body: run_id,policy,k,g_value,rmse,throughput_j1..throughput_jJ.
std::string result_csv(const ExperimentResult& result);

// ---------------------------------------------------------------------------

enum class SweepParam { kThroughputFloor, kMmrBudget, kParBudget, kBsBudget };

SweepParam sweep_param_from_string(std::string_view s);
std::string_view to_string(SweepParam p);

struct SweepPoint {
    double value = 0.0;
    bool feasible = false;
    double g_optimized = 0.0;
    double g_uniform = 0.0;  // NaN when the even split misses a throughput floor
    std::vector<double> throughput;
    std::string diagnostic;  // infeasibility certificate when !feasible
};

/// Copy of the scenario with one parameter replaced.
Scenario with_parameter(const Scenario& scenario, SweepParam param, double value);

/// Solves interval `interval` planned from the initial tracks for each value.
std::vector<SweepPoint> sweep(const Scenario& scenario, SweepParam param, const std::vector<double>& values,
                              std::size_t interval = 0, const AllocatorConfig& config = {});

std::string sweep_csv(SweepParam param, const std::vector<SweepPoint>& points);

/// Priors for planning interval `interval` from the initial tracks alone
/// (noise-free propagation, no data term). Used by `solve` and `sweep`.
std::vector<TargetPrior> initial_priors(const Scenario& scenario, std::size_t interval);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace hrcn
