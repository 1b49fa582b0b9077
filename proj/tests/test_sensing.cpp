#include "hrcn/sensing.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace hrcn {
namespace {

NoiseContext context(double power, double dwell, std::vector<double> comm_powers, std::vector<double> gains,
                     double noise_var) {
    NoiseContext ctx;
    ctx.power = power;
    ctx.dwell = dwell;
    ctx.noise_var = noise_var;
    ctx.comm_powers = Eigen::Map<Eigen::VectorXd>(comm_powers.data(), static_cast<Eigen::Index>(comm_powers.size()));
    ctx.comm_gain2 = Eigen::Map<Eigen::VectorXd>(gains.data(), static_cast<Eigen::Index>(gains.size()));
    return ctx;
}

const Mat2 kKernel = Vec2(40.0, 0.003).asDiagonal();

TEST(MeasCov, DoublingPowerHalves) {
    const NoiseContext a = context(5.0, 0.2, {1.0, 2.0}, {0.3, 0.1}, 0.5);
    NoiseContext b = a;
    b.power *= 2.0;
    EXPECT_LT((meas_cov(b, kKernel) - 0.5 * meas_cov(a, kKernel)).norm(), 1e-15 * meas_cov(a, kKernel).norm());
}

TEST(MeasCov, UnitScaleGivesKernel) {
    const NoiseContext ctx = context(1.0, 1.0, {7.0}, {0.0}, 1.0);
    EXPECT_EQ(meas_cov(ctx, kKernel), kKernel);
}

TEST(MeasCov, HandEvaluated) {
    const NoiseContext ctx = context(2.0, 1.0, {3.0}, {1.0}, 1.0);  // (1*3 + 1) / 2 = 2
    EXPECT_LT((meas_cov(ctx, kKernel) - 2.0 * kKernel).norm(), 1e-15);
}

TEST(MeasCov, ZeroEnergyThrows) {
    EXPECT_THROW(meas_cov(context(0.0, 1.0, {1.0}, {1.0}, 1.0), kKernel), std::invalid_argument);
    EXPECT_THROW(meas_cov(context(1.0, 0.0, {1.0}, {1.0}, 1.0), kKernel), std::invalid_argument);
}

TEST(MeasCov, FactorizationRecoversKernel) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int n = 0; n < 200; ++n) {
        const NoiseContext ctx = context(u(rng), u(rng), {u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, u(rng));
        const Mat2 c = Vec2(u(rng), u(rng)).asDiagonal();
        const Mat2 back = meas_cov(ctx, c) * (ctx.power * ctx.dwell) / ctx.interference();
        EXPECT_LT((back - c).norm(), 1e-14 * c.norm());
    }
}

TEST(MeasCov, MonotoneInResources) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int n = 0; n < 200; ++n) {
        const NoiseContext base = context(u(rng), u(rng), {u(rng), u(rng)}, {u(rng), u(rng)}, u(rng));
        const Mat2 s0 = meas_cov(base, kKernel);
        for (int j = 0; j < 2; ++j) {
            NoiseContext more = base;
            more.comm_powers[j] += u(rng);
            EXPECT_TRUE((meas_cov(more, kKernel).diagonal().array() > s0.diagonal().array()).all());
        }
        NoiseContext p = base;
        p.power += u(rng);
        EXPECT_TRUE((meas_cov(p, kKernel).diagonal().array() < s0.diagonal().array()).all());
        NoiseContext t = base;
        t.dwell += u(rng);
        EXPECT_TRUE((meas_cov(t, kKernel).diagonal().array() < s0.diagonal().array()).all());
    }
}

TEST(ConstKernel, Diagonal) {
    RadarNode r = test::make_radar(RadarKind::kMMR, Vec2::Zero(), 1);
    r.bandwidth = 3.0;
    r.beamwidth = 0.5;
    r.range_const = 2.0;
    r.bearing_const = 4.0;
    const Mat2 c = const_kernel(r, 1.5);
    EXPECT_DOUBLE_EQ(c(0, 0), 1.5 * 9.0 * 2.0);
    EXPECT_DOUBLE_EQ(c(1, 1), 1.5 * 0.25 * 4.0);
    EXPECT_EQ(c(0, 1), 0.0);
}

// ---------------------------------------------------------------------------

TEST(SimulateMeasurement, NoiselessLimit) {
    const Vec4 s(1200.0, 3.0, -400.0, 1.0);
    const Vec2 radar(100.0, 50.0);
    const RangeBearing m = simulate_measurement(s, radar, Mat2::Zero(), 99);
    const RangeBearing h = measure(s, radar);
    EXPECT_EQ(m.range, h.range);
    EXPECT_EQ(m.bearing, h.bearing);
}

TEST(SimulateMeasurement, SameSeedSameOutput) {
    const Vec4 s(1200.0, 3.0, -400.0, 1.0);
    const Mat2 cov = Vec2(25.0, 1e-4).asDiagonal();
    const RangeBearing a = simulate_measurement(s, Vec2::Zero(), cov, 1234);
    const RangeBearing b = simulate_measurement(s, Vec2::Zero(), cov, 1234);
    const RangeBearing c = simulate_measurement(s, Vec2::Zero(), cov, 1235);
    EXPECT_EQ(a.range, b.range);
    EXPECT_EQ(a.bearing, b.bearing);
    EXPECT_NE(a.range, c.range);
}

TEST(SimulateMeasurement, SampleCovarianceMatches) {
    const Vec4 s(3000.0, 0.0, 1000.0, 0.0);
    const Vec2 radar(0.0, 0.0);
    const Mat2 cov = Vec2(16.0, 4e-6).asDiagonal();
    const Vec2 h = measure(s, radar).vector();
    const int n = 100000;
    Vec2 mean = Vec2::Zero();
    Mat2 second = Mat2::Zero();
    for (int i = 0; i < n; ++i) {
        const RangeBearing m = simulate_measurement(s, radar, cov, static_cast<std::uint64_t>(i) * 7919u + 1u);
        const Vec2 e(m.range - h[0], wrap_angle(m.bearing - h[1]));
        mean += e;
        second += e * e.transpose();
    }
    mean /= n;
    const Mat2 sample = second / n - mean * mean.transpose();
    EXPECT_NEAR(sample(0, 0), cov(0, 0), 0.03 * cov(0, 0));
    EXPECT_NEAR(sample(1, 1), cov(1, 1), 0.03 * cov(1, 1));
    EXPECT_LT(std::abs(sample(0, 1)), 0.03 * std::sqrt(cov(0, 0) * cov(1, 1)));
}

TEST(SimulateMeasurement, BearingStaysWrapped) {
    const Vec4 s(-1000.0, 0.0, 1e-3, 0.0);  // bearing just below pi
    const Mat2 cov = Vec2(1.0, 1e-2).asDiagonal();
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const RangeBearing m = simulate_measurement(s, Vec2::Zero(), cov, seed);
        EXPECT_GT(m.bearing, -std::numbers::pi);
        EXPECT_LE(m.bearing, std::numbers::pi);
    }
}

// ---------------------------------------------------------------------------

TEST(LaggedJacobian, MatchesFiniteDifferences) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> pos(-5000.0, 5000.0);
    std::uniform_real_distribution<double> vel(-80.0, 80.0);
    std::uniform_real_distribution<double> lag(0.0, 6.0);
    for (int n = 0; n < 200; ++n) {
        const Vec2 radar(pos(rng), pos(rng));
        const Vec4 s(pos(rng), vel(rng), pos(rng), vel(rng));
        const double l = lag(rng);
        if (std::hypot(s[0] - l * s[1] - radar.x(), s[2] - l * s[3] - radar.y()) < 10.0) continue;
        const double b0 = measure(transition_matrix(-l) * s, radar).bearing;
        auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            const RangeBearing m = measure(transition_matrix(-l) * Vec4(x), radar);
            return Vec2(m.range, b0 + wrap_angle(m.bearing - b0));
        };
        const Eigen::MatrixXd fd = test::fd_jacobian(f, s, Eigen::VectorXd::Constant(4, 1e-2));
        const Mat24 h = lagged_jacobian(s, l, radar);
        for (int row = 0; row < 2; ++row) EXPECT_LE((h.row(row) - fd.row(row)).norm(), 1e-6 * h.row(row).norm());
    }
}

TEST(InfoKernel, NoLooksIsZero) {
    const std::vector<double> lags;
    EXPECT_TRUE(info_kernel(lags, Vec2::Zero(), kKernel, Vec4(100.0, 1.0, 200.0, 1.0)).isZero(0.0));
}

TEST(InfoKernel, SingleLookHasRankAtMostTwo) {
    const std::vector<double> lags{1.5};
    const Mat4 d = info_kernel(lags, Vec2(10.0, -20.0), kKernel, Vec4(1000.0, 10.0, 2000.0, -5.0));
    Eigen::SelfAdjointEigenSolver<Mat4> eig(d);
    const double top = eig.eigenvalues().maxCoeff();
    int rank = 0;
    for (int i = 0; i < 4; ++i) rank += eig.eigenvalues()[i] > 1e-10 * top ? 1 : 0;
    EXPECT_LE(rank, 2);
}

// Brute-force accumulation with Jacobians taken by finite differences.
TEST(InfoKernel, MatchesBruteForceSum) {
    const Vec2 radar(-300.0, 400.0);
    const Vec4 s(2500.0, 30.0, 1800.0, -12.0);
    const std::vector<double> lags{4.0, 2.0, 0.0};
    Mat4 oracle = Mat4::Zero();
    for (double l : lags) {
        const double b0 = measure(transition_matrix(-l) * s, radar).bearing;
        auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            const RangeBearing m = measure(transition_matrix(-l) * Vec4(x), radar);
            return Vec2(m.range, b0 + wrap_angle(m.bearing - b0));
        };
        const Eigen::MatrixXd h = test::fd_jacobian(f, s, Eigen::VectorXd::Constant(4, 1e-2));
        oracle += h.transpose() * kKernel.inverse() * h;
    }
    const Mat4 d = info_kernel(lags, radar, kKernel, s);
    EXPECT_LT((d - oracle).norm(), 1e-6 * oracle.norm());
}

TEST(InfoKernel, PsdAndGrowsWithLooks) {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> pos(-5000.0, 5000.0);
    std::uniform_real_distribution<double> lag(0.0, 6.0);
    for (int n = 0; n < 100; ++n) {
        const Vec2 radar(pos(rng), pos(rng));
        const Vec4 s(pos(rng), 20.0, pos(rng), -10.0);
        std::vector<double> lags{lag(rng), lag(rng)};
        const Mat4 d2 = info_kernel(lags, radar, kKernel, s);
        lags.push_back(lag(rng));
        const Mat4 d3 = info_kernel(lags, radar, kKernel, s);
        EXPECT_LT((d2 - d2.transpose()).norm(), 1e-12 * d2.norm());
        Eigen::SelfAdjointEigenSolver<Mat4> e2(d2);
        Eigen::SelfAdjointEigenSolver<Mat4> diff(d3 - d2);
        EXPECT_GE(e2.eigenvalues().minCoeff(), -1e-9 * d2.norm());
        EXPECT_GE(diff.eigenvalues().minCoeff(), -1e-9 * d3.norm());
    }
}

}  // namespace
}  // namespace hrcn
