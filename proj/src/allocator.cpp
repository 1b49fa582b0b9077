#include "hrcn/allocator.hpp"

#include "hrcn/fusion.hpp"
#include "hrcn/kinematics.hpp"
#include "hrcn/sensing.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace hrcn {

// ---------------------------------------------------------------------------
// Layout

AllocationLayout::AllocationLayout(const Scenario& scenario)
    : targets_(scenario.num_targets()), links_(scenario.comm.num_links), radar_offset_(scenario.num_radars()) {
    Eigen::Index next = 0;
    for (RadarKind kind : {RadarKind::kMMR, RadarKind::kPAR}) {
        for (std::size_t i = 0; i < scenario.num_radars(); ++i) {
            if (scenario.radars[i].kind != kind) continue;
            radar_offset_[i] = next;
            for (std::size_t q = 0; q < targets_; ++q) {
                labels_.push_back((kind == RadarKind::kMMR ? "P[" : "T[") + std::to_string(i + 1) + "," +
                                  std::to_string(q + 1) + "]");
            }
            next += static_cast<Eigen::Index>(targets_);
        }
    }
    comm_offset_ = next;
    for (std::size_t j = 0; j < links_; ++j) labels_.push_back("Pc[" + std::to_string(j + 1) + "]");
    dimension_ = next + static_cast<Eigen::Index>(links_);
}

std::optional<Eigen::Index> AllocationLayout::radar_index(std::size_t radar, std::size_t target) const {
    const auto& off = radar_offset_.at(radar);
    if (!off) return std::nullopt;
    return *off + static_cast<Eigen::Index>(target);
}

std::string AllocationLayout::label(Eigen::Index idx) const { return labels_.at(static_cast<std::size_t>(idx)); }

// ---------------------------------------------------------------------------
// Interval model

IntervalModel::IntervalModel(const Scenario& scenario, const MeasurementSchedule& schedule, std::size_t interval)
    : scenario_(&scenario), schedule_(&schedule), interval_(interval), layout_(scenario) {
    if (interval >= schedule.num_intervals()) throw std::out_of_range("IntervalModel: interval index out of range");
}

double IntervalModel::power(std::size_t radar, std::size_t target, const Eigen::VectorXd& z) const {
    const RadarNode& r = scenario_->radars[radar];
    if (r.kind == RadarKind::kMMR) return z[*layout_.radar_index(radar, target)];
    return *r.fixed_power;
}

double IntervalModel::dwell(std::size_t radar, std::size_t target, const Eigen::VectorXd& z) const {
    const RadarNode& r = scenario_->radars[radar];
    if (r.kind == RadarKind::kPAR) return z[*layout_.radar_index(radar, target)];
    return *r.fixed_dwell;
}

double IntervalModel::comm_gain2(std::size_t radar, std::size_t link) const {
    return std::norm(scenario_->comm.comm_to_radar[radar][link]);
}

double IntervalModel::radar_gain2(std::size_t link, std::size_t radar) const {
    return std::norm(scenario_->comm.radar_to_comm[link][radar]);
}

double IntervalModel::radar_interference(std::size_t radar, const Eigen::VectorXd& z) const {
    double total = scenario_->radars[radar].noise_var;
    for (std::size_t j = 0; j < layout_.num_links(); ++j) total += comm_gain2(radar, j) * z[layout_.comm_index(j)];
    return total;
}

double IntervalModel::comm_interference(std::size_t link, const Eigen::VectorXd& z) const {
    double total = 0.0;
    for (std::size_t i = 0; i < scenario_->num_radars(); ++i) {
        const double g2 = radar_gain2(link, i);
        for (std::size_t q = 0; q < scenario_->num_targets(); ++q) {
            total += static_cast<double>(count(i, q)) * g2 * power(i, q, z) * dwell(i, q, z);
        }
    }
    return total;
}

Eigen::VectorXd IntervalModel::coordinate_scale() const {
    Eigen::VectorXd s(layout_.dimension());
    for (std::size_t i = 0; i < scenario_->num_radars(); ++i) {
        const RadarNode& r = scenario_->radars[i];
        if (r.kind == RadarKind::kMSR) continue;
        const double budget = r.kind == RadarKind::kMMR ? *r.power_budget : *r.time_budget;
        for (std::size_t q = 0; q < scenario_->num_targets(); ++q) {
            const std::size_t m = count(i, q);
            s[*layout_.radar_index(i, q)] = m > 0 ? budget / static_cast<double>(m) : budget;
        }
    }
    for (std::size_t j = 0; j < layout_.num_links(); ++j) s[layout_.comm_index(j)] = scenario_->comm.bs_power_budget;
    return s;
}

double throughput_r(const IntervalModel& model, std::size_t link, const Eigen::VectorXd& z) {
    const double t0 = model.scenario().grid.interval;
    const double signal = z[model.layout().comm_index(link)] * t0;
    const double noise = model.comm_interference(link, z) + model.scenario().comm.noise_var * t0;
    return std::log1p(signal / noise);
}

LinearConstraints assemble_constraints(const IntervalModel& model) {
    const Scenario& s = model.scenario();
    const AllocationLayout& layout = model.layout();
    const std::size_t links = s.comm.num_links;
    const std::size_t rows = links + s.count(RadarKind::kMMR) + s.count(RadarKind::kPAR) + 1;
    const double t0 = s.grid.interval;

    LinearConstraints out;
    out.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), layout.dimension());
    out.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
    Eigen::Index row = 0;

    // gamma_j (sum_i sum_q M |a^r|^2 P T + sigma_c^2 T0) - P_c^j T0 <= 0, with
    // the fixed factor of each P*T product moved into the coefficient.
    double required_comm_power = 0.0;
    for (std::size_t j = 0; j < links; ++j, ++row) {
        const double gamma = std::expm1(s.comm.floor(j, model.interval()));
        double fixed = s.comm.noise_var * t0;
        for (std::size_t i = 0; i < s.num_radars(); ++i) {
            const RadarNode& r = s.radars[i];
            const double g2 = model.radar_gain2(j, i);
            for (std::size_t q = 0; q < s.num_targets(); ++q) {
                const auto m = static_cast<double>(model.count(i, q));
                switch (r.kind) {
                    case RadarKind::kMMR: out.A(row, *layout.radar_index(i, q)) = gamma * m * g2 * *r.fixed_dwell; break;
                    case RadarKind::kPAR: out.A(row, *layout.radar_index(i, q)) = gamma * m * g2 * *r.fixed_power; break;
                    case RadarKind::kMSR: fixed += m * g2 * *r.fixed_power * *r.fixed_dwell; break;
                }
            }
        }
        out.A(row, layout.comm_index(j)) = -t0;
        out.b[row] = -gamma * fixed;
        required_comm_power += gamma * fixed / t0;
        out.labels.push_back("throughput[" + std::to_string(j + 1) + "]");
    }

    for (RadarKind kind : {RadarKind::kMMR, RadarKind::kPAR}) {
        for (std::size_t i = 0; i < s.num_radars(); ++i) {
            const RadarNode& r = s.radars[i];
            if (r.kind != kind) continue;
            for (std::size_t q = 0; q < s.num_targets(); ++q) {
                out.A(row, *layout.radar_index(i, q)) = static_cast<double>(model.count(i, q));
            }
            out.b[row] = kind == RadarKind::kMMR ? *r.power_budget : *r.time_budget;
            out.labels.push_back((kind == RadarKind::kMMR ? "mmr_power[" : "par_time[") + std::to_string(i + 1) + "]");
            ++row;
        }
    }

    for (std::size_t j = 0; j < links; ++j) out.A(row, layout.comm_index(j)) = 1.0;
    out.b[row] = s.comm.bs_power_budget;
    out.labels.push_back("bs_power");

    if (required_comm_power > s.comm.bs_power_budget) {
        std::ostringstream cert;
        cert << "throughput[1.." << links << "] need at least " << required_comm_power
             << " W of downlink power with zero optimized radar resources, bs_power allows "
             << s.comm.bs_power_budget << " W";
        throw InfeasibleError("assemble_constraints: throughput floors infeasible by construction", cert.str());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Problem

AllocationProblem::AllocationProblem(IntervalModel model, std::span<const TargetPrior> priors, double jitter)
    : model_(std::move(model)), targets_(model_.scenario().num_targets()), jitter_(jitter) {
    const Scenario& s = model_.scenario();
    if (priors.size() != targets_) throw std::invalid_argument("AllocationProblem: one prior per target required");
    const double t0 = s.grid.interval;
    const double fusion_time = s.grid.boundary(model_.interval() + 1);
    const Mat4 f = transition_matrix(t0);

    kernels_.resize(s.num_radars() * targets_);
    for (std::size_t i = 0; i < s.num_radars(); ++i) {
        for (std::size_t q = 0; q < targets_; ++q) {
            const auto& times = model_.schedule().times(i, q, model_.interval());
            std::vector<double> lags;
            lags.reserve(times.size());
            for (double t : times) lags.push_back(fusion_time - t);
            kernels_[i * targets_ + q] = info_kernel(lags, s.radars[i].position, const_kernel(s.radars[i], s.targets[q].rcs[i]),
                                                     priors[q].predicted_state);
        }
    }
    for (std::size_t q = 0; q < targets_; ++q) {
        const Mat4 gamma = process_noise_cov(t0, s.targets[q].process_noise_intensity);
        prior_terms_.push_back(prior_information(priors[q].info, f, gamma));
    }
}

std::vector<double> AllocationProblem::info_weights(std::size_t target, const Eigen::VectorXd& z) const {
    const std::size_t n = model_.scenario().num_radars();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double energy = model_.power(i, target, z) * model_.dwell(i, target, z);
        if (energy > 0.0) w[i] = energy / model_.radar_interference(i, z);
    }
    return w;
}

Mat4 AllocationProblem::bayesian_info(std::size_t target, const Eigen::VectorXd& z) const {
    const std::vector<double> w = info_weights(target, z);
    Mat4 b = prior_terms_[target];
    for (std::size_t i = 0; i < w.size(); ++i) b.noalias() += w[i] * kernel(i, target);
    return b;
}

Mat4 weight_matrix(double interval) { return Vec4(1.0, interval, 1.0, interval).asDiagonal(); }

double objective_g(const AllocationProblem& problem, const Eigen::VectorXd& z) {
    const Mat4 lambda = weight_matrix(problem.model().scenario().grid.interval);
    double g = 0.0;
    for (std::size_t q = 0; q < problem.num_targets(); ++q) {
        const Mat4 cov = spd_inverse(problem.bayesian_info(q, z), problem.jitter());
        g += 1.0 / (lambda * cov * lambda.transpose()).trace();
    }
    return g;
}

Mat4 inner_v_update(const Mat4& info, const Mat4& lambda_inv, double jitter) {
    const Mat4 m = lambda_inv.transpose() * info * lambda_inv;
    Mat4 v = spd_inverse(m, jitter);
    return v / v.trace();
}

double inner_objective(const Mat4& v, const Mat4& m) { return (v.transpose() * m * v).trace(); }

FractionalProgram assemble_fractional(const AllocationProblem& problem, std::span<const Mat4> slack) {
    const IntervalModel& model = problem.model();
    const Scenario& s = model.scenario();
    const AllocationLayout& layout = model.layout();
    if (slack.size() != problem.num_targets()) throw std::invalid_argument("assemble_fractional: one V per target");
    const Mat4 lambda_inv = weight_matrix(s.grid.interval).inverse();

    FractionalProgram fp;
    fp.constraints = assemble_constraints(model);
    fp.terms.resize(s.num_radars());
    for (std::size_t i = 0; i < s.num_radars(); ++i) {
        FractionalTerm& term = fp.terms[i];
        term.c = Eigen::VectorXd::Zero(layout.dimension());
        term.e = Eigen::VectorXd::Zero(layout.dimension());
        term.sigma2 = s.radars[i].noise_var;
        for (std::size_t j = 0; j < s.comm.num_links; ++j) term.e[layout.comm_index(j)] = model.comm_gain2(i, j);
    }

    for (std::size_t q = 0; q < problem.num_targets(); ++q) {
        const Mat4 vt = lambda_inv * slack[q];
        fp.constant += (vt.transpose() * problem.prior_term(q) * vt).trace();
        for (std::size_t i = 0; i < s.num_radars(); ++i) {
            double omega = (vt.transpose() * problem.kernel(i, q) * vt).trace();
            if (omega < 0.0) {
                omega = 0.0;
                ++fp.clamped_weights;
            }
            const RadarNode& r = s.radars[i];
            FractionalTerm& term = fp.terms[i];
            switch (r.kind) {
                case RadarKind::kMMR: term.c[*layout.radar_index(i, q)] += omega * *r.fixed_dwell; break;
                case RadarKind::kPAR: term.c[*layout.radar_index(i, q)] += omega * *r.fixed_power; break;
                case RadarKind::kMSR: term.d += omega * *r.fixed_power * *r.fixed_dwell; break;
            }
        }
    }
    return fp;
}

double eval_f(const FractionalProgram& fp, const Eigen::VectorXd& z) {
    double f = fp.constant;
    for (const FractionalTerm& t : fp.terms) f += (t.c.dot(z) + t.d) / (t.e.dot(z) + t.sigma2);
    return f;
}

Eigen::VectorXd grad_f(const FractionalProgram& fp, const Eigen::VectorXd& z) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
    for (const FractionalTerm& t : fp.terms) {
        const double num = t.c.dot(z) + t.d;
        const double den = t.e.dot(z) + t.sigma2;
        g.noalias() += (den * t.c - num * t.e) / (den * den);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Solver

Eigen::VectorXd project_allocation(const IntervalModel& model, const LinearConstraints& cons, const Eigen::VectorXd& z,
                                   std::vector<std::size_t>* active) {
    const Eigen::VectorXd scale = model.coordinate_scale();
    const Eigen::MatrixXd scaled_a = cons.A * scale.asDiagonal();
    const ProjectionResult pr = project(z.cwiseQuotient(scale), scaled_a, cons.b);
    if (active) *active = pr.active;
    return pr.z.cwiseProduct(scale);
}

namespace {

bool feasible(const LinearConstraints& cons, const Eigen::VectorXd& z, double tol) {
    if ((z.array() < -tol).any()) return false;
    const Eigen::VectorXd slack = cons.b - cons.A * z;
    for (Eigen::Index r = 0; r < slack.size(); ++r) {
        if (slack[r] < -tol * (1.0 + std::abs(cons.b[r]))) return false;
    }
    return true;
}

}  // namespace

AllocationResult adam_solve(const AllocationProblem& problem, const AllocatorConfig& config,
                            const std::optional<Eigen::VectorXd>& z0) {
    const IntervalModel& model = problem.model();
    const LinearConstraints cons = assemble_constraints(model);
    const Eigen::VectorXd scale = model.coordinate_scale();
    const Eigen::MatrixXd scaled_a = cons.A * scale.asDiagonal();
    const Mat4 lambda_inv = weight_matrix(model.scenario().grid.interval).inverse();
    ProjectionOptions popt;
    popt.feasibility_tol = config.projection_tol;

    Eigen::VectorXd z;
    if (z0) {
        z = *z0;
    } else {
        try {
            z = baseline_uniform(model);
        } catch (const InfeasibleError&) {
            z = Eigen::VectorXd::Zero(model.layout().dimension());  // projected below
        }
    }
    if (z.size() != model.layout().dimension()) throw std::invalid_argument("adam_solve: z0 has wrong dimension");
    if (!feasible(cons, z, 1e-10)) z = project(z.cwiseQuotient(scale), scaled_a, cons.b, popt).z.cwiseProduct(scale);

    AllocationResult result;
    double g = objective_g(problem, z);
    if (!std::isfinite(g)) throw NumericalError("adam_solve: non-finite objective at the initial point");
    result.trace.push_back({0, g, g, 0.0, {}});
    Eigen::VectorXd best = z;
    double best_g = g;

    std::vector<Mat4> slack(problem.num_targets());
    // Step length carried between iterations: doubled after an unhalved step,
    // kept at its halved value otherwise.
    double step = config.step;
    for (int it = 1; it <= config.max_iterations; ++it) {
        result.iterations = it;
        for (std::size_t q = 0; q < problem.num_targets(); ++q) {
            slack[q] = inner_v_update(problem.bayesian_info(q, z), lambda_inv, config.jitter);
        }
        const FractionalProgram fp = assemble_fractional(problem, slack);
        result.clamped_weights += fp.clamped_weights;

        // Ascent direction in budget-scaled coordinates u = z / scale.
        const Eigen::VectorXd dir = grad_f(fp, z).cwiseProduct(scale);
        const double dir_norm = dir.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(dir_norm)) {
            throw NumericalError("adam_solve: non-finite gradient at iteration " + std::to_string(it));
        }
        if (dir_norm == 0.0) {
            result.converged = true;
            break;
        }
        const Eigen::VectorXd u = z.cwiseQuotient(scale);
        const Eigen::VectorXd unit_dir = dir / dir_norm;

        double eta = step;
        bool accepted = false;
        Eigen::VectorXd z_new;
        double g_new = 0.0;
        ProjectionResult pr;
        for (int h = 0; h <= config.max_halvings; ++h, eta *= 0.5) {
            pr = project(u + eta * unit_dir, scaled_a, cons.b, popt);
            z_new = pr.z.cwiseProduct(scale);
            g_new = objective_g(problem, z_new);
            if (!std::isfinite(g_new)) {
                throw NumericalError("adam_solve: non-finite objective at iteration " + std::to_string(it));
            }
            if (g_new >= g) {
                accepted = true;
                step = h == 0 ? std::min(2.0 * eta, 1e3) : eta;
                break;
            }
        }
        if (!accepted) {
            result.converged = true;
            break;
        }

        const double change = g_new - g;
        result.trace.push_back({it, eval_f(fp, z_new), g_new, (z_new - z).norm(), pr.active});
        z = z_new;
        g = g_new;
        if (g > best_g) {
            best_g = g;
            best = z;
        }
        if (std::abs(change) <= config.objective_tol * std::max(std::abs(g), 1e-300)) {
            result.converged = true;
            break;
        }
    }

    result.z = best;
    result.g = best_g;
    return result;
}

std::string trace_to_jsonl(const std::vector<IterationRecord>& trace) {
    std::string out;
    for (const IterationRecord& r : trace) {
        nlohmann::json j = {{"iteration", r.iteration}, {"f", r.f}, {"g", r.g}, {"step_norm", r.step_norm},
                            {"active", r.active}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Baselines

namespace {

// Splits `budget` over the targets of one radar so that sum_q M_q x_q = budget.
void split_budget(const IntervalModel& model, std::size_t radar, double budget, std::span<const double> weights,
                  Eigen::VectorXd& z) {
    const std::size_t targets = model.scenario().num_targets();
    double denom = 0.0;
    for (std::size_t q = 0; q < targets; ++q) denom += static_cast<double>(model.count(radar, q)) * weights[q];
    for (std::size_t q = 0; q < targets; ++q) {
        const Eigen::Index idx = *model.layout().radar_index(radar, q);
        z[idx] = (denom > 0.0 && model.count(radar, q) > 0) ? budget * weights[q] / denom : 0.0;
    }
}

double radar_budget(const RadarNode& r) { return r.kind == RadarKind::kMMR ? *r.power_budget : *r.time_budget; }

}  // namespace

Eigen::VectorXd baseline_uniform(const IntervalModel& model) {
    const Scenario& s = model.scenario();
    const AllocationLayout& layout = model.layout();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.dimension());
    const std::vector<double> ones(s.num_targets(), 1.0);
    for (std::size_t i = 0; i < s.num_radars(); ++i) {
        if (s.radars[i].kind == RadarKind::kMSR) continue;
        split_budget(model, i, radar_budget(s.radars[i]), ones, z);
    }
    for (std::size_t j = 0; j < s.comm.num_links; ++j) {
        z[layout.comm_index(j)] = s.comm.bs_power_budget / static_cast<double>(s.comm.num_links);
    }

    // Shrink the radar block until every throughput floor holds.
    const LinearConstraints cons = assemble_constraints(model);
    double factor = 1.0;
    for (std::size_t j = 0; j < s.comm.num_links; ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        const double radar_part = cons.A.row(row).head(layout.comm_offset()).dot(z.head(layout.comm_offset()));
        const double comm_part = cons.A.row(row).tail(layout.num_links()).dot(z.tail(layout.num_links()));
        const double room = cons.b[row] - comm_part;
        if (radar_part > room) {
            if (room < 0.0) {
                throw InfeasibleError("baseline_uniform: even split of the downlink budget misses a throughput floor",
                                      cons.labels[j]);
            }
            factor = std::min(factor, room / radar_part);
        }
    }
    z.head(layout.comm_offset()) *= factor;
    return z;
}

Eigen::VectorXd baseline_random(const IntervalModel& model, std::uint64_t seed, bool project_to_feasible) {
    const Scenario& s = model.scenario();
    const AllocationLayout& layout = model.layout();
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.dimension());
    std::vector<double> w(s.num_targets());
    for (std::size_t i = 0; i < s.num_radars(); ++i) {
        if (s.radars[i].kind == RadarKind::kMSR) continue;
        for (double& x : w) x = unif(gen);
        split_budget(model, i, radar_budget(s.radars[i]), w, z);
    }
    double total = 0.0;
    std::vector<double> wc(s.comm.num_links);
    for (double& x : wc) total += (x = unif(gen));
    for (std::size_t j = 0; j < s.comm.num_links; ++j) {
        z[layout.comm_index(j)] = s.comm.bs_power_budget * wc[j] / total;
    }

    if (!project_to_feasible) return z;
    return project_allocation(model, assemble_constraints(model), z);
}

}  // namespace hrcn
