#include "hrcn/sensing.hpp"

#include <random>

namespace hrcn {

Mat2 const_kernel(const RadarNode& radar, double rcs) {
    Mat2 c = Mat2::Zero();
    c(0, 0) = rcs * radar.bandwidth * radar.bandwidth * radar.range_const;
    c(1, 1) = rcs * radar.beamwidth * radar.beamwidth * radar.bearing_const;
    return c;
}

Mat2 meas_cov(const NoiseContext& ctx, const Mat2& kernel) {
    const double energy = ctx.power * ctx.dwell;
    if (!(energy > 0.0)) throw std::invalid_argument("meas_cov: radar energy P*T must be > 0");
    return (ctx.interference() / energy) * kernel;
}

RangeBearing noisy_measurement(const Vec4& state, const Vec2& radar_position, const Mat2& cov, const Vec2& xi) {
    const RangeBearing clean = measure(state, radar_position);
    const Mat2 l = cov.llt().matrixL();
    const Vec2 noise = l * xi;
    return {clean.range + noise[0], wrap_angle(clean.bearing + noise[1])};
}

Vec2 standard_normal_pair(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double a = normal(gen);
    const double b = normal(gen);
    return {a, b};
}

RangeBearing simulate_measurement(const Vec4& state, const Vec2& radar_position, const Mat2& cov,
                                  std::uint64_t seed) {
    return noisy_measurement(state, radar_position, cov, standard_normal_pair(seed));
}

Mat24 lagged_jacobian(const Vec4& end_state, double lag, const Vec2& radar_position) {
    const Mat4 back = transition_matrix(-lag);
    return measurement_jacobian(back * end_state, radar_position) * back;
}

Mat4 info_kernel(std::span<const double> lags, const Vec2& radar_position, const Mat2& kernel,
                 const Vec4& predicted_state) {
    const Mat2 kernel_inv = kernel.inverse();
    Mat4 d = Mat4::Zero();
    for (double lag : lags) {
        const Mat24 h = lagged_jacobian(predicted_state, lag, radar_position);
        d.noalias() += h.transpose() * kernel_inv * h;
    }
    return 0.5 * (d + d.transpose());
}

}  // namespace hrcn
