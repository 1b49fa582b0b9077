#include "hrcn/kinematics.hpp"

#include <cmath>
#include <numbers>

namespace hrcn {

using namespace state_index;

Mat4 transition_matrix(double dt) {
    Mat4 f = Mat4::Identity();
    f(kX, kVx) = dt;
    f(kY, kVy) = dt;
    return f;
}

Mat4 process_noise_cov(double dt, double intensity) {
    if (!(dt > 0.0)) throw std::invalid_argument("process_noise_cov: dt must be > 0");
    if (!(intensity >= 0.0)) throw std::invalid_argument("process_noise_cov: intensity must be >= 0");
    Mat2 block;
    block << dt * dt * dt / 3.0, dt * dt / 2.0,
             dt * dt / 2.0,      dt;
    block *= intensity;
    Mat4 g = Mat4::Zero();
    g.block<2, 2>(0, 0) = block;
    g.block<2, 2>(2, 2) = block;
    return g;
}

RangeBearing measure(const Vec4& state, const Vec2& radar_position) {
    const double dx = state[kX] - radar_position.x();
    const double dy = state[kY] - radar_position.y();
    if (dx == 0.0 && dy == 0.0) throw NumericalError("measure: target coincides with radar, bearing undefined");
    return {std::hypot(dx, dy), std::atan2(dy, dx)};
}

Mat24 measurement_jacobian(const Vec4& state, const Vec2& radar_position) {
    const double dx = state[kX] - radar_position.x();
    const double dy = state[kY] - radar_position.y();
    const double r2 = dx * dx + dy * dy;
    if (r2 == 0.0) throw NumericalError("measurement_jacobian: zero range");
    const double r = std::sqrt(r2);

    Mat24 h = Mat24::Zero();
    h(0, kX) = dx / r;
    h(0, kY) = dy / r;
    h(1, kX) = -dy / r2;
    h(1, kY) = dx / r2;
    return h;
}

double wrap_angle(double a) {
    constexpr double pi = std::numbers::pi;
    a = std::remainder(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

}  // namespace hrcn
