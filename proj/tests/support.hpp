#pragma once

#include "hrcn/common.hpp"
#include "hrcn/kinematics.hpp"
#include "hrcn/scenario.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace hrcn::test {

inline Scenario default_scenario() { return load_scenario(HRCN_DEFAULT_SCENARIO); }

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double floor = 0.1) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) a(r, c) = normal(rng);
    }
    return a * a.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

inline Mat4 random_spd4(std::mt19937_64& rng, double floor = 0.1) { return random_spd(rng, 4, floor); }

/// Central differences of a vector function, one column per input coordinate.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[c] += h[c];
        xm[c] -= h[c];
        jac.col(c) = (f(xp) - f(xm)) / (2.0 * h[c]);
    }
    return jac;
}

/// Projection onto {A z <= b, z >= 0} by enumerating every linearly
/// independent set of active constraints and keeping the closest feasible
/// candidate. Exponential, for dimension <= 6 only.
inline std::optional<Eigen::VectorXd> brute_force_projection(const Eigen::VectorXd& z_raw, const Eigen::MatrixXd& a,
                                                              const Eigen::VectorXd& b, double tol = 1e-10) {
    const int n = static_cast<int>(z_raw.size());
    const int m = static_cast<int>(a.rows());
    const int total = m + n;
    // Constraint c as (normal, rhs) with normal . z <= rhs.
    auto normal = [&](int c) -> Eigen::VectorXd {
        if (c < m) return a.row(c).transpose();
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[c - m] = -1.0;
        return e;
    };
    auto rhs = [&](int c) { return c < m ? b[c] : 0.0; };
    auto feasible = [&](const Eigen::VectorXd& z) {
        for (int c = 0; c < total; ++c) {
            if (normal(c).dot(z) > rhs(c) + tol * (1.0 + std::abs(rhs(c)))) return false;
        }
        return true;
    };

    std::optional<Eigen::VectorXd> best;
    double best_dist = std::numeric_limits<double>::infinity();
    std::vector<int> subset;
    std::function<void(int)> recurse = [&](int start) {
        const int k = static_cast<int>(subset.size());
        Eigen::VectorXd z = z_raw;
        if (k > 0) {
            Eigen::MatrixXd nmat(k, n);
            Eigen::VectorXd r(k);
            for (int s = 0; s < k; ++s) {
                nmat.row(s) = normal(subset[s]).transpose();
                r[s] = rhs(subset[s]);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(nmat * nmat.transpose());
            if (lu.rank() < k) return;  // dependent set, and so is every superset
            z = z_raw - nmat.transpose() * lu.solve(nmat * z_raw - r);
        }
        if (feasible(z)) {
            const double d = (z - z_raw).squaredNorm();
            if (d < best_dist) {
                best_dist = d;
                best = z;
            }
        }
        if (k == n) return;
        for (int c = start; c < total; ++c) {
            subset.push_back(c);
            recurse(c + 1);
            subset.pop_back();
        }
    };
    recurse(0);
    return best;
}

/// min Tr(V^T M V) s.t. Tr(V) = 1 over general 4x4 V, by solving the KKT
/// system of the equality-constrained quadratic directly.
inline Mat4 kkt_inner_minimizer(const Mat4& m) {
    Eigen::Matrix<double, 17, 17> kkt = Eigen::Matrix<double, 17, 17>::Zero();
    Eigen::Matrix<double, 17, 1> rhs = Eigen::Matrix<double, 17, 1>::Zero();
    // vec(V) column-major; Tr(V^T M V) = sum_c V_c^T M V_c.
    for (int c = 0; c < 4; ++c) kkt.block<4, 4>(4 * c, 4 * c) = 2.0 * m;
    for (int d = 0; d < 4; ++d) {
        kkt(16, 4 * d + d) = 1.0;
        kkt(4 * d + d, 16) = 1.0;
    }
    rhs[16] = 1.0;
    const Eigen::Matrix<double, 17, 1> sol = kkt.fullPivLu().solve(rhs);
    Mat4 v;
    for (int c = 0; c < 4; ++c) v.col(c) = sol.segment<4>(4 * c);
    return v;
}

inline RadarNode make_radar(RadarKind kind, const Vec2& position, std::size_t targets, double initial_time = 2.0,
                            double revisit = 2.0) {
    RadarNode r;
    r.kind = kind;
    r.position = position;
    r.bandwidth = 1.0;
    r.beamwidth = 1.0;
    r.noise_var = 1.0;
    switch (kind) {
        case RadarKind::kMMR:
            r.fixed_dwell = 1.0;
            r.power_budget = 100.0;
            break;
        case RadarKind::kPAR:
            r.fixed_power = 1.0;
            r.time_budget = 1.0;
            break;
        case RadarKind::kMSR:
            r.fixed_power = 1.0;
            r.fixed_dwell = 1.0;
            break;
    }
    r.initial_time.assign(targets, initial_time);
    r.revisit_interval.assign(targets, revisit);
    return r;
}

inline TargetTruth make_target(const Vec4& state, std::size_t radars) {
    TargetTruth t;
    t.initial_state = state;
    t.process_noise_intensity = 0.1;
    t.rcs.assign(radars, 1.0);
    t.init_std = Vec4(20.0, 2.0, 20.0, 2.0);
    return t;
}

/// Scenario with the given radars, `links` downlinks with uniform gains and
/// one target per entry of `states`.
inline Scenario make_scenario(std::vector<RadarNode> radars, std::size_t links, const std::vector<Vec4>& states,
                              double gain = 0.1, double floor = 1.0, double t0 = 6.0, std::size_t intervals = 3) {
    Scenario s;
    s.grid.interval = t0;
    s.grid.num_intervals = intervals;
    const std::size_t n = radars.size();
    for (std::size_t i = 0; i < n; ++i) radars[i].id = static_cast<int>(i + 1);
    s.radars = std::move(radars);
    s.comm.num_links = links;
    s.comm.noise_var = 0.1;
    s.comm.bs_power_budget = 30.0;
    s.comm.radar_to_comm.assign(links, std::vector<std::complex<double>>(n, {gain, 0.0}));
    s.comm.comm_to_radar.assign(n, std::vector<std::complex<double>>(links, {gain, 0.0}));
    s.comm.throughput_floor = {std::vector<double>(links, floor)};
    for (std::size_t q = 0; q < states.size(); ++q) {
        s.targets.push_back(make_target(states[q], n));
        s.targets.back().id = static_cast<int>(q + 1);
    }
    validate(s);
    return s;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace hrcn::test
