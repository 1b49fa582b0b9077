#pragma once

#include "hrcn/allocator.hpp"
#include "hrcn/common.hpp"
#include "hrcn/fusion.hpp"
#include "hrcn/scenario.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hrcn {

struct TrackState {
    Vec4 mean = Vec4::Zero();
    Mat4 cov = Mat4::Identity();
};

/// mean <- F(dt) mean, cov <- F cov F^T + Gamma.
TrackState kf_predict(const TrackState& track, double dt, const Mat4& process_noise);

/// Linear update with a state-space measurement (H = I) of covariance R, in
/// Joseph form. Throws NumericalError when P + R is singular.
TrackState kf_update(const TrackState& predicted, const Vec4& measurement, const Mat4& meas_cov);
TrackState kf_update(const TrackState& predicted, const CompositeMeasurement& cm);

/// Chooses z_k for one interval given the planning problem.
using AllocationPolicy = std::function<Eigen::VectorXd(const AllocationProblem&)>;

struct TrackingOptions {
    std::uint64_t master_seed = 0;
    std::uint64_t trial = 0;
    // Closed loop plans interval k around the filter's own prediction; open
    // loop uses the noise-free propagation of the initial track mean.
    bool closed_loop = true;
    bool truth_process_noise = true;
    double measurement_noise_scale = 1.0;  // 0 gives noiseless looks
    double jitter = 1e-9;
    IlsOptions ils;
};

struct TargetStep {
    Vec4 truth = Vec4::Zero();      // at t_{k+1}
    TrackState filtered;            // at t_{k+1}
    CompositeMeasurement cm;
    Mat4 info = Mat4::Identity();   // Bayesian information B(s_{t_{k+1}})
};

struct IntervalStep {
    std::size_t k = 0;
    Eigen::VectorXd allocation;
    double g = 0.0;
    std::vector<double> throughput;  // per link, nats
    std::vector<TargetStep> targets;
};

struct TrackingRun {
    std::vector<IntervalStep> steps;
};

/// Initial filter state of target q: truth + offset, diag(std^2).
TrackState initial_track(const TargetTruth& target);

/// Simulates truth and looks interval by interval, asks `policy` for z_k,
/// fuses each target's looks into a composite measurement and filters it.
/// Fusion failures are rethrown with the target and interval in the message.
TrackingRun run_tracking(const Scenario& scenario, const MeasurementSchedule& schedule, const AllocationPolicy& policy,
                         const TrackingOptions& options = {});

/// Same, with a fixed allocation per interval.
TrackingRun run_tracking(const Scenario& scenario, const MeasurementSchedule& schedule,
                         std::span<const Eigen::VectorXd> allocations, const TrackingOptions& options = {});

}  // namespace hrcn
