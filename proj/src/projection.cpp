#include "hrcn/projection.hpp"

#include "hrcn/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hrcn {

namespace {

// Constraints are handled internally as n_i^T x >= c_i.
struct ConstraintSet {
    const Eigen::MatrixXd& a;
    const Eigen::VectorXd& b;

    std::size_t size() const { return static_cast<std::size_t>(a.rows() + a.cols()); }
    std::size_t rows() const { return static_cast<std::size_t>(a.rows()); }

    Eigen::VectorXd normal(std::size_t i) const {
        if (i < rows()) return -a.row(static_cast<Eigen::Index>(i)).transpose();
        Eigen::VectorXd e = Eigen::VectorXd::Zero(a.cols());
        e[static_cast<Eigen::Index>(i - rows())] = 1.0;
        return e;
    }
    double rhs(std::size_t i) const { return i < rows() ? -b[static_cast<Eigen::Index>(i)] : 0.0; }
    double slack(std::size_t i, const Eigen::VectorXd& x) const { return normal(i).dot(x) - rhs(i); }
};

std::string describe(std::size_t index, std::size_t rows) {
    std::ostringstream os;
    if (index < rows) {
        os << "row " << index;
    } else {
        os << "z[" << (index - rows) << "] >= 0";
    }
    return os.str();
}

}  // namespace

ProjectionResult project(const Eigen::VectorXd& z_raw, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const ProjectionOptions& options) {
    if (A.cols() != z_raw.size() || A.rows() != b.size()) {
        throw std::invalid_argument("project: dimension mismatch");
    }
    const ConstraintSet cons{A, b};
    const Eigen::Index n = z_raw.size();
    const int max_it = options.max_iterations > 0 ? options.max_iterations
                                                  : 20 * static_cast<int>(cons.size()) + 100;
    constexpr double inf = std::numeric_limits<double>::infinity();

    Eigen::VectorXd x = z_raw;
    std::vector<std::size_t> active;
    std::vector<double> u;
    int iterations = 0;

    std::vector<double> norms(cons.size());
    for (std::size_t i = 0; i < cons.size(); ++i) norms[i] = cons.normal(i).norm();

    while (true) {
        // Most violated constraint, by normalized slack.
        const double tol = options.feasibility_tol * (1.0 + x.lpNorm<Eigen::Infinity>());
        std::size_t p = cons.size();
        double worst = -tol;
        for (std::size_t i = 0; i < cons.size(); ++i) {
            if (norms[i] == 0.0) {
                if (cons.rhs(i) > tol) {
                    throw InfeasibleError("project: constraint " + describe(i, cons.rows()) + " reads 0 <= negative",
                                          describe(i, cons.rows()));
                }
                continue;
            }
            if (std::find(active.begin(), active.end(), i) != active.end()) continue;
            const double s = cons.slack(i, x) / norms[i];
            if (s < worst) {
                worst = s;
                p = i;
            }
        }
        if (p == cons.size()) break;

        const Eigen::VectorXd np = cons.normal(p);
        double up = 0.0;
        while (true) {
            if (++iterations > max_it) throw NumericalError("project: active-set iteration limit reached");
            const auto q = static_cast<Eigen::Index>(active.size());
            Eigen::VectorXd z;
            Eigen::VectorXd r(q);
            if (q == 0) {
                z = np;
            } else {
                Eigen::MatrixXd nmat(n, q);
                for (Eigen::Index j = 0; j < q; ++j) nmat.col(j) = cons.normal(active[static_cast<std::size_t>(j)]);
                Eigen::HouseholderQR<Eigen::MatrixXd> qr(nmat);
                const Eigen::MatrixXd qfull = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
                const Eigen::MatrixXd q1 = qfull.leftCols(q);
                const Eigen::MatrixXd q2 = qfull.rightCols(n - q);
                const Eigen::MatrixXd rmat = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
                z = q2 * (q2.transpose() * np);
                r = rmat.triangularView<Eigen::Upper>().solve(q1.transpose() * np);
            }

            double t1 = inf;
            Eigen::Index drop = -1;
            for (Eigen::Index j = 0; j < q; ++j) {
                if (r[j] > 1e-14 * norms[p]) {
                    const double ratio = u[static_cast<std::size_t>(j)] / r[j];
                    if (ratio < t1) {
                        t1 = ratio;
                        drop = j;
                    }
                }
            }
            double t2 = inf;
            const double zn = z.dot(np);
            if (z.norm() > 1e-12 * norms[p] && zn > 0.0) t2 = -cons.slack(p, x) / zn;

            const double t = std::min(t1, t2);
            if (t == inf) {
                std::ostringstream cert;
                cert << describe(p, cons.rows()) << " conflicts with {";
                for (std::size_t j = 0; j < active.size(); ++j) {
                    cert << (j ? ", " : "") << describe(active[j], cons.rows());
                }
                cert << "}";
                throw InfeasibleError("project: feasible set is empty", cert.str());
            }

            for (Eigen::Index j = 0; j < q; ++j) u[static_cast<std::size_t>(j)] -= t * r[j];
            up += t;
            if (t2 < inf) x += t * z;

            if (t2 <= t1) {
                active.push_back(p);
                u.push_back(up);
                break;
            }
            active.erase(active.begin() + drop);
            u.erase(u.begin() + drop);
        }
    }

    ProjectionResult result;
    // Bound constraints hold up to rounding; snap those residuals to zero.
    result.z = x.cwiseMax(0.0);
    result.active = active;
    result.multipliers = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    result.iterations = iterations;
    return result;
}

}  // namespace hrcn
