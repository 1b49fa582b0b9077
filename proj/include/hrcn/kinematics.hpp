#pragma once

#include "hrcn/common.hpp"

namespace hrcn {

/// Constant-velocity transition F(dt) = blockdiag([[1, dt], [0, 1]], same).
/// Negative dt maps a state backwards in time.
Mat4 transition_matrix(double dt);

/// Continuous white-noise-acceleration covariance accumulated over dt:
/// intensity * [[dt^3/3, dt^2/2], [dt^2/2, dt]] on each axis.
/// Throws std::invalid_argument for dt <= 0 or intensity < 0.
Mat4 process_noise_cov(double dt, double intensity);

struct RangeBearing {
    double range = 0.0;    // m
    double bearing = 0.0;  // rad, four-quadrant, in (-pi, pi]

    Vec2 vector() const { return {range, bearing}; }
};

/// Range and four-quadrant bearing from radar_position to the state's position.
/// Throws NumericalError when the positions coincide.
RangeBearing measure(const Vec4& state, const Vec2& radar_position);

/// d(range, bearing)/d[x, vx, y, vy]. Velocity columns are zero.
/// Throws NumericalError at zero range.
Mat24 measurement_jacobian(const Vec4& state, const Vec2& radar_position);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace hrcn
