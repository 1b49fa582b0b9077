#pragma once

#include "hrcn/common.hpp"
#include "hrcn/kinematics.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hrcn {

/// One range/bearing look at a target, stamped relative to the fusion time.
struct RadarLook {
    std::size_t radar = 0;
    Vec2 radar_position = Vec2::Zero();
    double lag = 0.0;   // t_{k+1} - t^m, s
    RangeBearing value;
    Mat2 cov = Mat2::Identity();
};

/// All looks at one target within one fusion interval, in radar-major,
/// time-ascending order.
using StackedMeasurements = std::vector<RadarLook>;

struct IlsOptions {
    double step_tol = 1e-8;
    double decrement_tol = 1e-10;  // Gauss-Newton decrement relative to max(1, cost)
    int max_iterations = 50;
    double rank_tol = 1e-12;  // on the unit-diagonal scaled normal matrix
};

/// Fused state estimate at the fusion time with its CRB covariance.
struct CompositeMeasurement {
    Vec4 estimate = Vec4::Zero();
    Mat4 covariance = Mat4::Identity();   // J^{-1} evaluated at the estimate
    Mat4 information = Mat4::Identity();  // J
    int iterations = 0;
    double final_step_norm = 0.0;
};

/// Gauss-Newton weighted least squares for the end-of-interval state.
/// Throws RankDeficientError when the looks cannot determine all four state
/// components and DivergenceError when the iteration does not settle.
CompositeMeasurement ils_mle(std::span<const RadarLook> looks, const Vec4& init, const IlsOptions& options = {});

/// J = sum_m H_m^T Sigma_m^{-1} H_m with H_m the lagged Jacobian at eval_state.
Mat4 fim(std::span<const RadarLook> looks, const Vec4& eval_state);

/// Prior-information term [Gamma + F B^{-1} F^T]^{-1}. A singular B is
/// handled through the information-filter identity when Gamma is invertible;
/// NumericalError when neither is.
Mat4 prior_information(const Mat4& prev_info, const Mat4& transition, const Mat4& process_noise);

/// B = sum_i weights[i] * kernels[i] + prior_information(prev_info, F, Gamma).
/// weights[i] is P*T / (interference + noise) for radar i.
Mat4 bayesian_fim(const Mat4& prev_info, std::span<const Mat4> kernels, std::span<const double> weights,
                  const Mat4& transition, const Mat4& process_noise);

}  // namespace hrcn
