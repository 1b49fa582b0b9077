#include "hrcn/tracker.hpp"

#include "hrcn/kinematics.hpp"
#include "hrcn/rng.hpp"
#include "hrcn/sensing.hpp"

#include <random>
#include <string>

namespace hrcn {

TrackState kf_predict(const TrackState& track, double dt, const Mat4& process_noise) {
    const Mat4 f = transition_matrix(dt);
    TrackState out;
    out.mean = f * track.mean;
    out.cov = f * track.cov * f.transpose() + process_noise;
    out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
    return out;
}

TrackState kf_update(const TrackState& predicted, const Vec4& measurement, const Mat4& meas_cov) {
    const Mat4 innovation_cov = predicted.cov + meas_cov;
    Eigen::LDLT<Mat4> ldlt(innovation_cov);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-300 || !(ldlt.vectorD().array() > 0.0).all()) {
        throw NumericalError("kf_update: singular innovation covariance");
    }
    // K = P (P + R)^{-1}; both symmetric, so K^T = (P + R)^{-1} P.
    const Mat4 gain = ldlt.solve(predicted.cov).transpose();
    const Mat4 i_minus_k = Mat4::Identity() - gain;

    TrackState out;
    out.mean = predicted.mean + gain * (measurement - predicted.mean);
    out.cov = i_minus_k * predicted.cov * i_minus_k.transpose() + gain * meas_cov * gain.transpose();
    out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
    return out;
}

TrackState kf_update(const TrackState& predicted, const CompositeMeasurement& cm) {
    return kf_update(predicted, cm.estimate, cm.covariance);
}

TrackState initial_track(const TargetTruth& target) {
    TrackState t;
    t.mean = target.initial_state + target.init_offset;
    t.cov = target.init_std.cwiseAbs2().asDiagonal();
    return t;
}

namespace {

Vec4 sample_process_noise(const Mat4& gamma, std::uint64_t seed) {
    if (gamma.isZero(0.0)) return Vec4::Zero();
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec4 xi;
    for (int d = 0; d < 4; ++d) xi[d] = normal(gen);
    const Mat4 l = gamma.llt().matrixL();
    return l * xi;
}

[[noreturn]] void rethrow_annotated(std::size_t q, std::size_t k) {
    const std::string where = "target " + std::to_string(q + 1) + ", interval " + std::to_string(k + 1) + ": ";
    try {
        throw;
    } catch (const RankDeficientError& e) {
        throw RankDeficientError(where + e.what());
    } catch (const DivergenceError& e) {
        throw DivergenceError(where + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(where + e.what());
    }
}

}  // namespace

TrackingRun run_tracking(const Scenario& scenario, const MeasurementSchedule& schedule, const AllocationPolicy& policy,
                         const TrackingOptions& options) {
    const std::size_t targets = scenario.num_targets();
    const double t0 = scenario.grid.interval;
    const Mat4 f = transition_matrix(t0);

    std::vector<Vec4> truth(targets);
    std::vector<TrackState> tracks(targets);
    std::vector<Vec4> planning(targets);
    std::vector<Mat4> info(targets);
    std::vector<Mat4> gamma(targets);
    for (std::size_t q = 0; q < targets; ++q) {
        truth[q] = scenario.targets[q].initial_state;
        tracks[q] = initial_track(scenario.targets[q]);
        planning[q] = tracks[q].mean;
        info[q] = spd_inverse(tracks[q].cov, 0.0);
        gamma[q] = process_noise_cov(t0, scenario.targets[q].process_noise_intensity);
    }

    TrackingRun run;
    for (std::size_t k = 0; k < scenario.grid.num_intervals; ++k) {
        const double fusion_time = scenario.grid.boundary(k + 1);

        std::vector<TrackState> predicted(targets);
        std::vector<TargetPrior> priors(targets);
        for (std::size_t q = 0; q < targets; ++q) {
            truth[q] = f * truth[q];
            if (options.truth_process_noise) {
                truth[q] += sample_process_noise(
                    gamma[q], derive_seed(options.master_seed, {static_cast<std::uint64_t>(Stream::kProcessNoise),
                                                                options.trial, q, k}));
            }
            predicted[q] = kf_predict(tracks[q], t0, gamma[q]);
            planning[q] = f * planning[q];
            priors[q].predicted_state = options.closed_loop ? predicted[q].mean : planning[q];
            priors[q].info = info[q];
        }

        const AllocationProblem problem(IntervalModel(scenario, schedule, k), priors, options.jitter);
        IntervalStep step;
        step.k = k;
        step.allocation = policy(problem);
        step.g = objective_g(problem, step.allocation);
        for (std::size_t j = 0; j < scenario.comm.num_links; ++j) {
            step.throughput.push_back(throughput_r(problem.model(), j, step.allocation));
        }

        const IntervalModel& model = problem.model();
        for (std::size_t q = 0; q < targets; ++q) {
            StackedMeasurements looks;
            for (std::size_t i = 0; i < scenario.num_radars(); ++i) {
                const RadarNode& radar = scenario.radars[i];
                NoiseContext ctx;
                ctx.comm_powers = step.allocation.tail(static_cast<Eigen::Index>(scenario.comm.num_links));
                ctx.comm_gain2.resize(ctx.comm_powers.size());
                for (std::size_t j = 0; j < scenario.comm.num_links; ++j) {
                    ctx.comm_gain2[static_cast<Eigen::Index>(j)] = model.comm_gain2(i, j);
                }
                ctx.noise_var = radar.noise_var;
                ctx.power = model.power(i, q, step.allocation);
                ctx.dwell = model.dwell(i, q, step.allocation);
                if (!(ctx.power * ctx.dwell > 0.0)) continue;  // no energy on this target, no look
                const Mat2 cov = meas_cov(ctx, const_kernel(radar, scenario.targets[q].rcs[i]));

                const auto& times = schedule.times(i, q, k);
                for (std::size_t m = 0; m < times.size(); ++m) {
                    RadarLook look;
                    look.radar = i;
                    look.radar_position = radar.position;
                    look.lag = fusion_time - times[m];
                    look.cov = cov;
                    const Vec2 xi = options.measurement_noise_scale *
                                    standard_normal_pair(derive_seed(
                                        options.master_seed,
                                        {static_cast<std::uint64_t>(Stream::kMeasurementNoise), options.trial, i, q, k, m}));
                    look.value = noisy_measurement(transition_matrix(-look.lag) * truth[q], radar.position, cov, xi);
                    looks.push_back(look);
                }
            }

            TargetStep ts;
            ts.truth = truth[q];
            try {
                ts.cm = ils_mle(looks, predicted[q].mean, options.ils);
                ts.filtered = kf_update(predicted[q], ts.cm);
            } catch (const NumericalError&) {
                rethrow_annotated(q, k);
            }
            ts.info = problem.bayesian_info(q, step.allocation);
            tracks[q] = ts.filtered;
            info[q] = ts.info;
            step.targets.push_back(std::move(ts));
        }
        run.steps.push_back(std::move(step));
    }
    return run;
}

TrackingRun run_tracking(const Scenario& scenario, const MeasurementSchedule& schedule,
                         std::span<const Eigen::VectorXd> allocations, const TrackingOptions& options) {
    if (allocations.size() != scenario.grid.num_intervals) {
        throw std::invalid_argument("run_tracking: one allocation per interval required");
    }
    return run_tracking(
        scenario, schedule,
        [&](const AllocationProblem& p) { return allocations[p.model().interval()]; }, options);
}

}  // namespace hrcn
