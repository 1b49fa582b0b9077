#include "hrcn/tracker.hpp"

#include "hrcn/harness.hpp"
#include "hrcn/kinematics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace hrcn {
namespace {

TEST(KfPredict, ConstantVelocityMean) {
    TrackState t;
    t.mean = Vec4(0.0, 1.0, 0.0, 2.0);
    t.cov = Mat4::Identity();
    const TrackState p = kf_predict(t, 1.0, Mat4::Zero());
    EXPECT_EQ(p.mean, Vec4(1.0, 1.0, 2.0, 2.0));
    const Mat4 f = transition_matrix(1.0);
    EXPECT_LT((p.cov - f * f.transpose()).norm(), 1e-15);
}

TEST(KfPredict, ZeroCovarianceGivesProcessNoise) {
    TrackState t;
    t.cov = Mat4::Zero();
    const Mat4 g = process_noise_cov(6.0, 0.3);
    EXPECT_LT((kf_predict(t, 6.0, g).cov - g).norm(), 1e-15 * g.norm());
}

TEST(KfUpdate, EqualCovariancesAverage) {
    TrackState t;
    t.mean = Vec4(0.0, 0.0, 0.0, 0.0);
    t.cov = Mat4::Identity();
    const TrackState u = kf_update(t, Vec4(2.0, 4.0, -2.0, 6.0), Mat4::Identity());
    EXPECT_LT((u.mean - Vec4(1.0, 2.0, -1.0, 3.0)).norm(), 1e-15);
    EXPECT_LT((u.cov - 0.5 * Mat4::Identity()).norm(), 1e-15);
}

TEST(KfUpdate, UninformativeMeasurementKeepsPrior) {
    std::mt19937_64 rng(71);
    TrackState t;
    t.mean = Vec4(100.0, 2.0, -50.0, 1.0);
    t.cov = test::random_spd4(rng);
    const TrackState u = kf_update(t, Vec4(500.0, 9.0, 80.0, -4.0), 1e12 * Mat4::Identity());
    EXPECT_LT((u.mean - t.mean).norm(), 1e-6);
    EXPECT_LT((u.cov - t.cov).norm(), 1e-6 * t.cov.norm());
}

TEST(KfUpdate, UninformativePriorTakesMeasurement) {
    std::mt19937_64 rng(72);
    TrackState t;
    t.mean = Vec4(100.0, 2.0, -50.0, 1.0);
    t.cov = 1e12 * Mat4::Identity();
    const Vec4 y(500.0, 9.0, 80.0, -4.0);
    const Mat4 r = test::random_spd4(rng);
    const TrackState u = kf_update(t, y, r);
    EXPECT_LT((u.mean - y).norm(), 1e-6);
    EXPECT_LT((u.cov - r).norm(), 1e-6 * r.norm());
}

TEST(KfUpdate, MatchesInformationForm) {
    std::mt19937_64 rng(73);
    std::normal_distribution<double> normal(0.0, 10.0);
    for (int n = 0; n < 200; ++n) {
        TrackState t;
        for (int d = 0; d < 4; ++d) t.mean[d] = normal(rng);
        t.cov = test::random_spd4(rng);
        Vec4 y;
        for (int d = 0; d < 4; ++d) y[d] = normal(rng);
        const Mat4 r = test::random_spd4(rng);
        const TrackState u = kf_update(t, y, r);
        const Mat4 info = t.cov.inverse() + r.inverse();
        const Mat4 cov = info.inverse();
        const Vec4 mean = cov * (t.cov.inverse() * t.mean + r.inverse() * y);
        EXPECT_LT((u.cov - cov).norm(), 1e-10 * cov.norm());
        EXPECT_LT((u.mean - mean).norm(), 1e-10 * (1.0 + mean.norm()));
    }
}

TEST(KfUpdate, SingularInnovationThrows) {
    TrackState t;
    t.cov = Mat4::Zero();
    EXPECT_THROW(kf_update(t, Vec4::Zero(), Mat4::Zero()), NumericalError);
}

TEST(KfUpdate, JosephFormStaysSymmetricPsd) {
    std::mt19937_64 rng(74);
    TrackState t;
    t.cov = 100.0 * Mat4::Identity();
    const Mat4 g = process_noise_cov(6.0, 0.5);
    for (int n = 0; n < 1000; ++n) {
        t = kf_predict(t, 6.0, g);
        t = kf_update(t, t.mean, test::random_spd4(rng, 1e-3));
        ASSERT_EQ(t.cov, t.cov.transpose());
        Eigen::SelfAdjointEigenSolver<Mat4> eig(t.cov);
        ASSERT_GT(eig.eigenvalues().minCoeff(), 0.0) << "step " << n;
    }
}

// ---------------------------------------------------------------------------

TEST(InitialTrack, OffsetAndStd) {
    TargetTruth target = test::make_target(Vec4(1.0, 2.0, 3.0, 4.0), 1);
    target.init_offset = Vec4(10.0, -1.0, 0.0, 0.5);
    const TrackState t = initial_track(target);
    EXPECT_EQ(t.mean, Vec4(11.0, 1.0, 3.0, 4.5));
    EXPECT_EQ(Vec4(t.cov.diagonal()), Vec4(400.0, 4.0, 400.0, 4.0));
}

AllocationPolicy uniform_policy() {
    return [](const AllocationProblem& p) { return baseline_uniform(p.model()); };
}

AllocationPolicy optimized_policy() {
    return [](const AllocationProblem& p) { return adam_solve(p).z; };
}

TEST(RunTracking, NoiselessErrorShrinks) {
    const Scenario s = test::default_scenario();
    const MeasurementSchedule sched = build_schedule(s);
    TrackingOptions opt;
    opt.measurement_noise_scale = 0.0;
    opt.truth_process_noise = false;
    const TrackingRun run = run_tracking(s, sched, uniform_policy(), opt);
    ASSERT_EQ(run.steps.size(), s.grid.num_intervals);
    for (std::size_t q = 0; q < s.num_targets(); ++q) {
        // Noiseless looks fuse to the truth exactly.
        for (const IntervalStep& step : run.steps) {
            EXPECT_LT((step.targets[q].cm.estimate - step.targets[q].truth).norm(), 1e-6);
        }
        const double first = (run.steps.front().targets[q].filtered.mean - run.steps.front().targets[q].truth).norm();
        const double last = (run.steps.back().targets[q].filtered.mean - run.steps.back().targets[q].truth).norm();
        EXPECT_LT(first, s.targets[q].init_offset.norm());
        EXPECT_LT(last, first);
    }
}

TEST(RunTracking, TruthFollowsConstantVelocityWithoutProcessNoise) {
    const Scenario s = test::default_scenario();
    const MeasurementSchedule sched = build_schedule(s);
    TrackingOptions opt;
    opt.truth_process_noise = false;
    const TrackingRun run = run_tracking(s, sched, uniform_policy(), opt);
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
        for (std::size_t q = 0; q < s.num_targets(); ++q) {
            const Vec4 expected = transition_matrix(s.grid.interval * static_cast<double>(k + 1)) * s.targets[q].initial_state;
            EXPECT_LT((run.steps[k].targets[q].truth - expected).norm(), 1e-9 * expected.norm());
        }
    }
}

TEST(RunTracking, DeterministicPerSeedAndTrial) {
    const Scenario s = test::default_scenario();
    const MeasurementSchedule sched = build_schedule(s);
    TrackingOptions opt;
    opt.master_seed = 5;
    opt.trial = 3;
    const TrackingRun a = run_tracking(s, sched, uniform_policy(), opt);
    const TrackingRun b = run_tracking(s, sched, uniform_policy(), opt);
    opt.trial = 4;
    const TrackingRun c = run_tracking(s, sched, uniform_policy(), opt);
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
        for (std::size_t q = 0; q < s.num_targets(); ++q) {
            EXPECT_EQ(a.steps[k].targets[q].filtered.mean, b.steps[k].targets[q].filtered.mean);
            EXPECT_EQ(a.steps[k].targets[q].truth, b.steps[k].targets[q].truth);
            EXPECT_NE(a.steps[k].targets[q].truth, c.steps[k].targets[q].truth);
        }
    }
}

TEST(RunTracking, CommonRandomNumbersAcrossPolicies) {
    const Scenario s = test::default_scenario();
    const MeasurementSchedule sched = build_schedule(s);
    TrackingOptions opt;
    opt.master_seed = 11;
    const TrackingRun u = run_tracking(s, sched, uniform_policy(), opt);
    const TrackingRun o = run_tracking(s, sched, optimized_policy(), opt);
    for (std::size_t k = 0; k < u.steps.size(); ++k) {
        for (std::size_t q = 0; q < s.num_targets(); ++q) {
            EXPECT_EQ(u.steps[k].targets[q].truth, o.steps[k].targets[q].truth);
        }
    }
}

TEST(RunTracking, OptimizedCovarianceNotLargerThanUniform) {
    const Scenario s = test::default_scenario();
    const MeasurementSchedule sched = build_schedule(s);
    TrackingOptions opt;
    opt.master_seed = 12;
    const TrackingRun u = run_tracking(s, sched, uniform_policy(), opt);
    const TrackingRun o = run_tracking(s, sched, optimized_policy(), opt);
    const Mat4 lambda = weight_matrix(s.grid.interval);
    double tu = 0.0;
    double to = 0.0;
    for (std::size_t k = 0; k < u.steps.size(); ++k) {
        EXPECT_GE(o.steps[k].g, u.steps[k].g) << "interval " << k + 1;
        for (std::size_t q = 0; q < s.num_targets(); ++q) {
            tu += (lambda * u.steps[k].targets[q].filtered.cov * lambda).trace();
            to += (lambda * o.steps[k].targets[q].filtered.cov * lambda).trace();
        }
    }
    EXPECT_LE(to, tu);
}

TEST(RunTracking, RecordsBayesianInformationOfAllocation) {
    const Scenario s = test::default_scenario();
    const MeasurementSchedule sched = build_schedule(s);
    TrackingOptions opt;
    opt.closed_loop = false;
    const TrackingRun run = run_tracking(s, sched, uniform_policy(), opt);
    // Open loop: the planning priors are deterministic, so the recorded
    // information chain can be rebuilt without the filter.
    std::vector<TargetPrior> priors(s.num_targets());
    for (std::size_t q = 0; q < s.num_targets(); ++q) {
        const TrackState t0 = initial_track(s.targets[q]);
        priors[q].predicted_state = t0.mean;
        priors[q].info = t0.cov.inverse();
    }
    const Mat4 f = transition_matrix(s.grid.interval);
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
        for (auto& p : priors) p.predicted_state = f * p.predicted_state;
        const AllocationProblem problem(IntervalModel(s, sched, k), priors);
        for (std::size_t q = 0; q < s.num_targets(); ++q) {
            const Mat4 b = problem.bayesian_info(q, run.steps[k].allocation);
            EXPECT_LT((run.steps[k].targets[q].info - b).norm(), 1e-9 * b.norm());
            priors[q].info = b;
        }
        EXPECT_NEAR(run.steps[k].g, objective_g(problem, run.steps[k].allocation), 1e-9 * run.steps[k].g);
    }
}

TEST(RunTracking, FusionFailureNamesTargetAndInterval) {
    // A single MMR with one look per interval cannot determine velocity.
    const Scenario s = test::make_scenario({test::make_radar(RadarKind::kMMR, {0.0, 0.0}, 1, 6.0, 6.0)}, 1,
                                           {Vec4(3000.0, 10.0, 2000.0, 5.0)});
    const MeasurementSchedule sched = build_schedule(s);
    try {
        run_tracking(s, sched, uniform_policy());
        FAIL() << "expected RankDeficientError";
    } catch (const RankDeficientError& e) {
        EXPECT_NE(std::string(e.what()).find("target 1, interval 1"), std::string::npos) << e.what();
    }
}

TEST(RunTracking, FixedAllocationsNeedOnePerInterval) {
    const Scenario s = test::default_scenario();
    const MeasurementSchedule sched = build_schedule(s);
    const std::vector<Eigen::VectorXd> too_few(2);
    EXPECT_THROW(run_tracking(s, sched, too_few), std::invalid_argument);
}

}  // namespace
}  // namespace hrcn
