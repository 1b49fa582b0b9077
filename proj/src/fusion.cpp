#include "hrcn/fusion.hpp"

#include "hrcn/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hrcn {

namespace {

struct NormalEquations {
    Mat4 lhs = Mat4::Zero();
    Vec4 rhs = Vec4::Zero();
    double cost = 0.0;
};

Vec2 residual(const RadarLook& look, const Vec4& end_state) {
    const RangeBearing predicted = measure(transition_matrix(-look.lag) * end_state, look.radar_position);
    return {look.value.range - predicted.range, wrap_angle(look.value.bearing - predicted.bearing)};
}

double weighted_cost(std::span<const RadarLook> looks, const Vec4& s) {
    double cost = 0.0;
    for (const RadarLook& look : looks) {
        const Vec2 r = residual(look, s);
        cost += r.dot(look.cov.ldlt().solve(r));
    }
    return cost;
}

NormalEquations linearize(std::span<const RadarLook> looks, const Vec4& s) {
    NormalEquations ne;
    for (const RadarLook& look : looks) {
        const Mat24 h = lagged_jacobian(s, look.lag, look.radar_position);
        const Mat2 w = look.cov.inverse();
        const Vec2 r = residual(look, s);
        ne.lhs.noalias() += h.transpose() * w * h;
        ne.rhs.noalias() += h.transpose() * w * r;
        ne.cost += r.dot(w * r);
    }
    ne.lhs = (0.5 * (ne.lhs + ne.lhs.transpose())).eval();
    return ne;
}

bool full_rank(const Mat4& normal, double tol) {
    const Vec4 d = normal.diagonal();
    if ((d.array() <= 0.0).any()) return false;
    const Vec4 scale = d.cwiseSqrt().cwiseInverse();
    const Mat4 scaled = scale.asDiagonal() * normal * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat4> eig(scaled, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() > tol * eig.eigenvalues().maxCoeff();
}

}  // namespace

CompositeMeasurement ils_mle(std::span<const RadarLook> looks, const Vec4& init, const IlsOptions& options) {
    if (!init.allFinite()) throw std::invalid_argument("ils_mle: initial state must be finite");
    if (looks.size() < 2) {
        throw RankDeficientError("ils_mle: " + std::to_string(looks.size()) +
                                 " look(s) cannot determine a 4-dimensional state");
    }

    Vec4 s = init;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const NormalEquations ne = linearize(looks, s);
        if (!full_rank(ne.lhs, options.rank_tol)) {
            throw RankDeficientError("ils_mle: normal matrix is rank deficient (unobservable geometry)");
        }
        const Vec4 step = ne.lhs.ldlt().solve(ne.rhs);
        if (!step.allFinite()) throw DivergenceError("ils_mle: non-finite Gauss-Newton step");

        // Halve the step until the weighted cost does not increase.
        double alpha = 1.0;
        Vec4 next = s + step;
        double next_cost = weighted_cost(looks, next);
        for (int h = 0; h < 30 && !(next_cost <= ne.cost); ++h) {
            alpha *= 0.5;
            next = s + alpha * step;
            next_cost = weighted_cost(looks, next);
        }
        s = next;

        // Besides the step tolerance: a predicted cost decrease far below one
        // standard deviation, or a line search that cannot lower the cost
        // beyond rounding, both mean the iterate sits at the rounding floor.
        const double step_norm = step.norm();
        const double decrement = step.dot(ne.rhs);
        const bool stalled = alpha < 1.0 && ne.cost - next_cost <= 1e-13 * ne.cost;
        if (step_norm < options.step_tol || decrement <= options.decrement_tol * std::max(1.0, ne.cost) || stalled) {
            CompositeMeasurement cm;
            cm.estimate = s;
            cm.information = fim(looks, s);
            cm.covariance = spd_inverse(cm.information, 0.0);
            cm.iterations = it;
            cm.final_step_norm = step_norm;
            return cm;
        }
    }
    throw DivergenceError("ils_mle: no convergence within " + std::to_string(options.max_iterations) +
                          " iterations");
}

Mat4 fim(std::span<const RadarLook> looks, const Vec4& eval_state) {
    Mat4 j = Mat4::Zero();
    for (const RadarLook& look : looks) {
        const Mat24 h = lagged_jacobian(eval_state, look.lag, look.radar_position);
        j.noalias() += h.transpose() * look.cov.inverse() * h;
    }
    return 0.5 * (j + j.transpose());
}

Mat4 prior_information(const Mat4& prev_info, const Mat4& transition, const Mat4& process_noise) {
    Eigen::LLT<Mat4> prev(prev_info);
    if (prev.info() == Eigen::Success) {
        const Mat4 prev_cov = prev.solve(Mat4::Identity());
        const Mat4 predicted = process_noise + transition * prev_cov * transition.transpose();
        const Mat4 out = predicted.llt().solve(Mat4::Identity());
        return 0.5 * (out + out.transpose());
    }
    Eigen::LLT<Mat4> gamma(process_noise);
    if (gamma.info() != Eigen::Success) {
        throw NumericalError("prior_information: previous information is singular and process noise is not invertible");
    }
    // Information form, valid for singular B:
    // [G + F B^{-1} F^T]^{-1} = G^{-1} - G^{-1} F (B + F^T G^{-1} F)^{-1} F^T G^{-1}
    const Mat4 g_inv = gamma.solve(Mat4::Identity());
    const Mat4 inner = prev_info + transition.transpose() * g_inv * transition;
    const Mat4 out = g_inv - g_inv * transition * inner.ldlt().solve(transition.transpose() * g_inv);
    return 0.5 * (out + out.transpose());
}

Mat4 bayesian_fim(const Mat4& prev_info, std::span<const Mat4> kernels, std::span<const double> weights,
                  const Mat4& transition, const Mat4& process_noise) {
    if (kernels.size() != weights.size()) throw std::invalid_argument("bayesian_fim: kernels/weights size mismatch");
    Mat4 b = prior_information(prev_info, transition, process_noise);
    for (std::size_t i = 0; i < kernels.size(); ++i) b.noalias() += weights[i] * kernels[i];
    return 0.5 * (b + b.transpose());
}

}  // namespace hrcn
