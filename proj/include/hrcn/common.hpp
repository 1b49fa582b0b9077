#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hrcn {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;

/// State layout is [x, vx, y, vy].
namespace state_index {
inline constexpr int kX = 0;
inline constexpr int kVx = 1;
inline constexpr int kY = 2;
inline constexpr int kVy = 3;
}  // namespace state_index

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed scenario or result file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Scenario violates a structural or physical invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Empty feasible set. `certificate` names the constraints that conflict.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, std::string certificate)
        : Error(what), certificate_(std::move(certificate)) {}
    const std::string& certificate() const noexcept { return certificate_; }

private:
    std::string certificate_;
};

/// Singular system, divergence or non-finite values.
class NumericalError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Inverse of a symmetric positive (semi)definite matrix. When the Cholesky
/// factorization fails, `jitter`·I is added once; with jitter <= 0 the failure
/// is reported as NumericalError. `jittered` (optional) records whether the
/// fallback fired.
template <typename Derived>
typename Derived::PlainObject spd_inverse(const Eigen::MatrixBase<Derived>& m, double jitter,
                                          bool* jittered = nullptr) {
    using Plain = typename Derived::PlainObject;
    const Plain sym = 0.5 * (m + m.transpose());
    Eigen::LLT<Plain> llt(sym);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
        if (jittered) *jittered = false;
        return llt.solve(Plain::Identity(sym.rows(), sym.cols()));
    }
    if (jitter <= 0.0) {
        throw NumericalError("matrix is not positive definite and no jitter is allowed");
    }
    const Plain loaded = sym + jitter * Plain::Identity(sym.rows(), sym.cols());
    Eigen::LLT<Plain> retry(loaded);
    if (retry.info() != Eigen::Success) {
        throw NumericalError("matrix is not positive definite even after jitter");
    }
    if (jittered) *jittered = true;
    return retry.solve(Plain::Identity(sym.rows(), sym.cols()));
}

}  // namespace hrcn
