#pragma once

#include "hrcn/common.hpp"
#include "hrcn/kinematics.hpp"
#include "hrcn/scenario.hpp"

#include <cstdint>
#include <span>

namespace hrcn {

/// Everything the measurement-error variance of one radar look depends on.
struct NoiseContext {
    Eigen::VectorXd comm_powers;   // P_c^j, W
    Eigen::VectorXd comm_gain2;    // |alpha^c_{i,j}|^2 per link
    double noise_var = 0.0;        // sigma^2_{r,i}, W
    double power = 0.0;            // W
    double dwell = 0.0;            // s

    /// sum_j |alpha^c_{i,j}|^2 P_c^j + sigma^2_{r,i}
    double interference() const { return comm_gain2.dot(comm_powers) + noise_var; }
};

/// Resource-independent factor C = diag(rcs*bandwidth^2*c_R, rcs*beamwidth^2*c_theta).
Mat2 const_kernel(const RadarNode& radar, double rcs);

/// Sigma = interference / (P*T) * C. Throws std::invalid_argument when P*T <= 0.
Mat2 meas_cov(const NoiseContext& ctx, const Mat2& kernel);

/// h(state) + L*xi where L L^T = cov and xi is a pair of standard normals.
/// The bearing is wrapped to (-pi, pi].
RangeBearing noisy_measurement(const Vec4& state, const Vec2& radar_position, const Mat2& cov, const Vec2& xi);

/// Draws xi from a generator seeded with `seed`; identical seeds give identical output.
RangeBearing simulate_measurement(const Vec4& state, const Vec2& radar_position, const Mat2& cov,
                                  std::uint64_t seed);

/// Standard-normal pair for a given seed (the xi used by simulate_measurement).
Vec2 standard_normal_pair(std::uint64_t seed);

/// Jacobian of h(F(-lag) s) with respect to s, the state at the end of the
/// interval, for a look taken `lag` seconds earlier.
Mat24 lagged_jacobian(const Vec4& end_state, double lag, const Vec2& radar_position);

/// D = sum_m H_m^T C^{-1} H_m with H_m evaluated at the predicted end-of-interval
/// state mapped back to each look time. `lags` holds t_{k+1} - t^m.
Mat4 info_kernel(std::span<const double> lags, const Vec2& radar_position, const Mat2& kernel,
                 const Vec4& predicted_state);

}  // namespace hrcn
