#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace hrcn {

/// Result of projecting onto {z : A z <= b, z >= 0}.
///
/// Constraint indices below A.rows() refer to rows of A; an index
/// A.rows() + k refers to the bound z[k] >= 0. `multipliers` are the KKT
/// multipliers of the active constraints, all nonnegative, so that
/// z_raw - z = sum_a multipliers[a] * grad(constraint a).
struct ProjectionResult {
    Eigen::VectorXd z;
    std::vector<std::size_t> active;
    Eigen::VectorXd multipliers;
    int iterations = 0;
};

struct ProjectionOptions {
    double feasibility_tol = 1e-12;  // relative to 1 + |z|_inf
    int max_iterations = 0;          // 0: 20 * (rows + dims) + 100
};

/// Euclidean projection of z_raw onto the polyhedron, computed with a dual
/// active-set method (Goldfarb-Idnani with identity Hessian). Throws
/// InfeasibleError carrying the conflicting constraint set when the
/// polyhedron is empty.
ProjectionResult project(const Eigen::VectorXd& z_raw, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const ProjectionOptions& options = {});

}  // namespace hrcn
