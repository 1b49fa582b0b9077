#pragma once

#include "hrcn/common.hpp"
#include "hrcn/projection.hpp"
#include "hrcn/scenario.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hrcn {

/// Index layout of the per-interval decision vector z:
///
///   [ P_{i,q} for MMR i (radar order), q = 1..Q ]   watts
///   [ T_{i,q} for PAR i (radar order), q = 1..Q ]   seconds
///   [ P_c^j  for j = 1..J ]                          watts
///
/// MSR radars own no entries; their power and dwell are fixed.
class AllocationLayout {
public:
    explicit AllocationLayout(const Scenario& scenario);

    Eigen::Index dimension() const { return dimension_; }
    /// Entry holding the optimized resource of (radar, target), if any.
    std::optional<Eigen::Index> radar_index(std::size_t radar, std::size_t target) const;
    Eigen::Index comm_index(std::size_t link) const { return comm_offset_ + static_cast<Eigen::Index>(link); }
    Eigen::Index comm_offset() const { return comm_offset_; }
    std::size_t num_links() const { return links_; }
    /// Human-readable name of entry idx, e.g. "P[1,2]", "T[4,1]", "Pc[3]" (1-based).
    std::string label(Eigen::Index idx) const;

private:
    std::size_t targets_ = 0;
    std::size_t links_ = 0;
    std::vector<std::optional<Eigen::Index>> radar_offset_;  // per radar, start of its Q entries
    std::vector<std::string> labels_;
    Eigen::Index comm_offset_ = 0;
    Eigen::Index dimension_ = 0;
};

struct LinearConstraints {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::vector<std::string> labels;  // one per row
};

/// Resource model of one fusion interval: schedule counts, fixed resources and
/// interference couplings. References the scenario and schedule, which must
/// outlive it.
class IntervalModel {
public:
    IntervalModel(const Scenario& scenario, const MeasurementSchedule& schedule, std::size_t interval);

    const Scenario& scenario() const { return *scenario_; }
    const MeasurementSchedule& schedule() const { return *schedule_; }
    const AllocationLayout& layout() const { return layout_; }
    std::size_t interval() const { return interval_; }
    std::size_t count(std::size_t radar, std::size_t target) const { return schedule_->count(radar, target, interval_); }

    /// Transmit power and dwell of each look by radar i at target q under z.
    double power(std::size_t radar, std::size_t target, const Eigen::VectorXd& z) const;
    double dwell(std::size_t radar, std::size_t target, const Eigen::VectorXd& z) const;

    /// sum_j |alpha^c_{i,j}|^2 P_c^j + sigma^2_{r,i}
    double radar_interference(std::size_t radar, const Eigen::VectorXd& z) const;
    /// sum_i sum_q M_{i,q} |alpha^r_{j,i}|^2 P_{i,q} T_{i,q}
    double comm_interference(std::size_t link, const Eigen::VectorXd& z) const;

    double comm_gain2(std::size_t radar, std::size_t link) const;   // |alpha^c_{i,j}|^2
    double radar_gain2(std::size_t link, std::size_t radar) const;  // |alpha^r_{j,i}|^2

    /// Largest value each coordinate can take under its own budget row.
    Eigen::VectorXd coordinate_scale() const;

private:
    const Scenario* scenario_;
    const MeasurementSchedule* schedule_;
    std::size_t interval_;
    AllocationLayout layout_;
};

/// log(1 + P_c^j T0 / (comm_interference + sigma_c^2 T0)), in nats.
double throughput_r(const IntervalModel& model, std::size_t link, const Eigen::VectorXd& z);

/// Rows, in order: J throughput floors (linearized with e^eps - 1), MMR power
/// budgets, PAR dwell budgets, base-station power budget. Throws
/// InfeasibleError when the fixed interference alone already forces the
/// throughput floors past the base-station budget.
LinearConstraints assemble_constraints(const IntervalModel& model);

// ---------------------------------------------------------------------------

/// Planning prior of one target for the coming interval.
struct TargetPrior {
    Vec4 predicted_state = Vec4::Zero();  // a priori estimate at t_{k+1}
    Mat4 info = Mat4::Identity();         // Bayesian information at t_k
};

/// Interval model plus the information kernels D_{i,q} and prior terms that
/// turn an allocation into per-target Bayesian information.
class AllocationProblem {
public:
    AllocationProblem(IntervalModel model, std::span<const TargetPrior> priors, double jitter = 1e-9);

    const IntervalModel& model() const { return model_; }
    const Mat4& kernel(std::size_t radar, std::size_t target) const { return kernels_[radar * targets_ + target]; }
    const Mat4& prior_term(std::size_t target) const { return prior_terms_[target]; }
    std::size_t num_targets() const { return targets_; }
    double jitter() const { return jitter_; }

    /// P T / interference per radar for target q; zero when the radar has no
    /// energy on the target.
    std::vector<double> info_weights(std::size_t target, const Eigen::VectorXd& z) const;
    /// Bayesian information B^q(z).
    Mat4 bayesian_info(std::size_t target, const Eigen::VectorXd& z) const;

private:
    IntervalModel model_;
    std::size_t targets_;
    double jitter_;
    std::vector<Mat4> kernels_;
    std::vector<Mat4> prior_terms_;
};

/// Lambda = diag(1, T0, 1, T0).
Mat4 weight_matrix(double interval);

/// g(z) = sum_q 1 / Tr(Lambda B_q^{-1} Lambda^T). Larger is better.
double objective_g(const AllocationProblem& problem, const Eigen::VectorXd& z);

/// Minimizer of Tr(V^T M V) subject to Tr(V) = 1, with M = Lt^T B Lt:
/// V = M^{-1} / Tr(M^{-1}).
Mat4 inner_v_update(const Mat4& info, const Mat4& lambda_inv, double jitter = 1e-9);

/// Tr(V^T M V).
double inner_objective(const Mat4& v, const Mat4& m);

/// One ratio term (c^T z + d) / (e^T z + sigma2).
struct FractionalTerm {
    Eigen::VectorXd c;
    double d = 0.0;
    Eigen::VectorXd e;
    double sigma2 = 1.0;
};

/// Outer problem for fixed slack matrices:
///   maximize sum_i (c_i^T z + d_i) / (e_i^T z + sigma2_i) + constant
///   subject to A z <= b, z >= 0.
/// `constant` is the prior-information contribution, which does not depend on z.
struct FractionalProgram {
    std::vector<FractionalTerm> terms;  // one per radar
    double constant = 0.0;
    LinearConstraints constraints;
    std::size_t clamped_weights = 0;  // negative omegas clamped to zero
};

FractionalProgram assemble_fractional(const AllocationProblem& problem, std::span<const Mat4> slack);

double eval_f(const FractionalProgram& fp, const Eigen::VectorXd& z);
Eigen::VectorXd grad_f(const FractionalProgram& fp, const Eigen::VectorXd& z);

// ---------------------------------------------------------------------------

struct AllocatorConfig {
    double step = 1e-2;            // initial step, fraction of each coordinate's budget scale
    double objective_tol = 1e-6;   // relative
    int max_iterations = 500;
    int max_halvings = 20;
    double projection_tol = 1e-12;
    double jitter = 1e-9;
};

struct IterationRecord {
    int iteration = 0;
    double f = 0.0;           // outer fractional objective at the new iterate
    double g = 0.0;           // maximin value g at the new iterate
    double step_norm = 0.0;   // |z_new - z_old|
    std::vector<std::size_t> active;  // active constraints after projection
};

struct AllocationResult {
    Eigen::VectorXd z;
    double g = 0.0;
    std::vector<IterationRecord> trace;
    int iterations = 0;
    bool converged = false;
    std::size_t clamped_weights = 0;
};

/// Alternating descent-ascent: closed-form slack update, then a projected,
/// budget-preconditioned gradient step on the fractional objective with
/// backtracking. Starts from z0 (projected if infeasible) or the uniform
/// baseline. Returns the best iterate seen.
AllocationResult adam_solve(const AllocationProblem& problem, const AllocatorConfig& config = {},
                            const std::optional<Eigen::VectorXd>& z0 = std::nullopt);

/// One JSON object per line: iteration, f, g, step_norm, active.
std::string trace_to_jsonl(const std::vector<IterationRecord>& trace);

/// Even split of every budget (M-weighted, so budget rows bind), radar block
/// scaled down if needed to meet the throughput floors.
Eigen::VectorXd baseline_uniform(const IntervalModel& model);

/// Random split of every budget. With `project_to_feasible` the draw is
/// projected onto the constraint set; without it, throughput floors may be
/// violated.
Eigen::VectorXd baseline_random(const IntervalModel& model, std::uint64_t seed, bool project_to_feasible = true);

/// Projection onto the constraint set in budget-scaled coordinates.
Eigen::VectorXd project_allocation(const IntervalModel& model, const LinearConstraints& cons,
                                   const Eigen::VectorXd& z, std::vector<std::size_t>* active = nullptr);

}  // namespace hrcn
