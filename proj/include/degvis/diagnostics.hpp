/// @file diagnostics.hpp
/// @brief Per-snapshot observables: the active potential, BD-entropy
///        functionals, discrete Sobolev norms, the w-equation residual, and
///        the Gronwall/ODE machinery used to verify the a priori estimates.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "io.hpp"
#include "model.hpp"
#include "profiles.hpp"

namespace degvis {

// ============================================================================
// Pointwise observables
// ============================================================================

/// Active potential w = -p(rho) + mu_eps(rho) * u_x on every node, with the
/// same second-order stencil used by the solver.
inline std::vector<double> active_potential(const GasModel& m, double eps, const SimState& s,
                                            const Grid1D& g) {
    require_field_size(s.rho, g, "active_potential rho");
    require_field_size(s.u, g, "active_potential u");
    const auto du = first_derivative(s.u, g);
    std::vector<double> w(du.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = -pressure(m, s.rho[i]) + mu_eps(m, eps, s.rho[i]) * du[i];
    return w;
}

/// Background sampled on a grid (precomputed once per run).
struct SampledBackground {
    std::vector<double> rho, u;

    static SampledBackground sample(const BackgroundProfile& bg, const Grid1D& g) {
        SampledBackground sb;
        const int n = g.node_count();
        sb.rho.resize(static_cast<std::size_t>(n));
        sb.u.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            sb.rho[static_cast<std::size_t>(i)] = bg.rho(g.x(i));
            sb.u[static_cast<std::size_t>(i)] = bg.u(g.x(i));
        }
        return sb;
    }
};

/// Relative pressure p(a|b) = p(a) - p(b) - p'(b)(a-b) >= 0 (convexity).
inline double relative_pressure(const GasModel& m, double a, double b) {
    return pressure(m, a) - pressure(m, b) - pressure_slope(m, b) * (a - b);
}

/// BD-entropy pair
///   E1 = int rho (u - ubar)^2 + p(rho | rbar) dx
///   E2 = int rho ((u - ubar) + phi'(rho) rho_x)^2 + p(rho | rbar) dx,
/// with phi'(rho) = mu_eps(rho)/rho^2 (the effective-velocity shift).
struct BdEnergies {
    double e1, e2;
};

inline BdEnergies bd_energies(const GasModel& m, double eps, const SimState& s, const Grid1D& g,
                              const SampledBackground& bg) {
    require_field_size(s.rho, g, "bd_energies rho");
    require_field_size(s.u, g, "bd_energies u");
    require_field_size(bg.rho, g, "bd_energies background rho");
    const auto drho = first_derivative(s.rho, g);
    const std::size_t n = s.rho.size();
    std::vector<double> i1(n), i2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double rho = s.rho[i];
        const double rel_p = relative_pressure(m, rho, bg.rho[i]);
        const double dv = s.u[i] - bg.u[i];
        const double shift = mu_eps(m, eps, rho) / (rho * rho) * drho[i];
        i1[i] = rho * dv * dv + rel_p;
        i2[i] = rho * (dv + shift) * (dv + shift) + rel_p;
    }
    return {trapezoid(i1, g.dx), trapezoid(i2, g.dx)};
}

// ============================================================================
// Discrete Sobolev norms
// ============================================================================

/// Squared H^j seminorms, j = 0..k, of a nodal field: the j-th iterated
/// centered difference, trapezoid-integrated over the nodes where the pure
/// centered stencil fits (the valid range shrinks by one node per level).
template <int K = 4>
inline std::array<double, K + 1> hk_seminorms(std::span<const double> f, const Grid1D& g) {
    require_field_size(f, g, "hk_seminorms");
    const int n = g.node_count();
    if (n < 2 * K + 1)
        throw std::invalid_argument("hk_seminorms: grid too small for requested order");
    std::array<double, K + 1> semi{};
    std::vector<double> work(f.begin(), f.end());
    int lo = 0, hi = n - 1;
    semi[0] = l2_norm(work, g.dx, lo, hi);
    for (int j = 1; j <= K; ++j) {
        std::vector<double> next(work.size(), 0.0);
        for (int i = lo + 1; i < hi; ++i)
            next[static_cast<std::size_t>(i)] =
                (work[static_cast<std::size_t>(i + 1)] - work[static_cast<std::size_t>(i - 1)]) /
                (2.0 * g.dx);
        ++lo;
        --hi;
        work.swap(next);
        semi[static_cast<std::size_t>(j)] = l2_norm(work, g.dx, lo, hi);
    }
    return semi;
}

/// Full discrete H^k norm: sqrt(sum of squared seminorms up to order k).
inline double discrete_hk_norm(std::span<const double> f, const Grid1D& g, int k) {
    if (k < 0 || k > 4) throw std::invalid_argument("discrete_hk_norm: k must lie in [0,4]");
    const auto semi = hk_seminorms<4>(f, g);
    double sq = 0.0;
    for (int j = 0; j <= k; ++j) sq += semi[static_cast<std::size_t>(j)] * semi[static_cast<std::size_t>(j)];
    return std::sqrt(sq);
}

// ============================================================================
// w-equation residual
// ============================================================================

/// Discrete residual of the active-potential equation between two snapshots:
///
///   R_i = (w_next - w_prev)/dt - RHS_i(midpoint state),
///   RHS  = (mu_eps/rho) w_xx - (u + mu_eps rho_x/rho^2) w_x
///          + f1 w - f2_scale * f2 w^2 + f3,
///
/// returned as the L2 norm over interior nodes.  f2_scale defaults to 1; it
/// exists so tests can inject a wrong coefficient and watch the residual
/// refuse to converge.
inline double w_equation_residual(const GasModel& m, double eps, const SimState& prev,
                                  const SimState& next, const Grid1D& g, double f2_scale = 1.0) {
    require_field_size(prev.rho, g, "w_equation_residual prev");
    require_field_size(next.rho, g, "w_equation_residual next");
    const double dt = next.t - prev.t;
    if (!(dt > 0.0)) throw std::invalid_argument("w_equation_residual: need next.t > prev.t");

    const std::size_t n = prev.rho.size();
    SimState mid;
    mid.t = 0.5 * (prev.t + next.t);
    mid.rho.resize(n);
    mid.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        mid.rho[i] = 0.5 * (prev.rho[i] + next.rho[i]);
        mid.u[i] = 0.5 * (prev.u[i] + next.u[i]);
    }

    const auto w_prev = active_potential(m, eps, prev, g);
    const auto w_next = active_potential(m, eps, next, g);
    const auto w_mid = active_potential(m, eps, mid, g);
    const auto dw = first_derivative(w_mid, g);
    const auto drho = first_derivative(mid.rho, g);

    std::vector<double> res(n, 0.0);
    for (int i = 1; i < static_cast<int>(n) - 1; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double rho = mid.rho[k];
        const double me = mu_eps(m, eps, rho);
        const auto f = coefficients_f(m, eps, rho);
        const double rhs = (me / rho) * second_difference(w_mid, i, g.dx) -
                           (mid.u[k] + me * drho[k] / (rho * rho)) * dw[k] +
                           f.f1 * w_mid[k] - f2_scale * f.f2 * w_mid[k] * w_mid[k] + f.f3;
        res[k] = (w_next[k] - w_prev[k]) / dt - rhs;
    }
    return l2_norm(res, g.dx, 1, static_cast<int>(n) - 2);
}

// ============================================================================
// Gronwall envelope for the running maximum of w
// ============================================================================

/// Trapezoid evaluation of
///   env(t) = w_M(0) exp(int_0^t J1) + int_0^t J2(s) exp(int_s^t J1) ds
/// along a supplied density-at-argmax series, plus the closed-form bounds it
/// is dominated by.
struct GronwallEnvelope {
    std::vector<double> times;
    std::vector<double> envelope;
    double eps = 0.0;
    double theta = 0.0;
    double c_gamma = 0.0;         ///< constant of the closed-form bound
    double closed_form_bound = 0.0; ///< C_gamma * eps^theta (eps <= eps_gamma)
    double two_term_bound = 0.0;  ///< exp(T|g-2(a*+1)|)(eps^theta + eps^{(2g-a)/(a-a*)} T |g-(a*+1)|)
};

inline GronwallEnvelope gronwall_envelope(const GasModel& m, double eps, double w_max_initial,
                                          std::span<const double> rho_at_argmax,
                                          std::span<const double> times) {
    if (rho_at_argmax.size() != times.size() || times.size() < 2)
        throw std::invalid_argument("gronwall_envelope: need matching series with >= 2 samples");
    const std::size_t n = times.size();
    std::vector<double> j1(n), j2(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto j = j_coefficients(m, eps, rho_at_argmax[k]);
        j1[k] = j.j1;
        j2[k] = j.j2;
    }

    // A_k = int_0^{t_k} J1, B_k = int_0^{t_k} J2 e^{-A}; env = e^A (w0 + B).
    GronwallEnvelope env;
    env.times.assign(times.begin(), times.end());
    env.envelope.resize(n);
    env.eps = eps;
    env.theta = m.theta;
    double a_acc = 0.0, b_acc = 0.0;
    double g_prev = j2[0]; // J2 e^{-A} at t_0, A_0 = 0
    env.envelope[0] = w_max_initial;
    for (std::size_t k = 1; k < n; ++k) {
        const double dt = times[k] - times[k - 1];
        if (!(dt > 0.0)) throw std::invalid_argument("gronwall_envelope: times must increase");
        a_acc += 0.5 * (j1[k - 1] + j1[k]) * dt;
        const double g_here = j2[k] * std::exp(-a_acc);
        b_acc += 0.5 * (g_prev + g_here) * dt;
        g_prev = g_here;
        env.envelope[k] = std::exp(a_acc) * (w_max_initial + b_acc);
    }

    const double T = times.back() - times.front();
    const double g = m.gamma, a = m.alpha, as = m.alpha_star;
    const double prefactor = std::exp(T * std::abs(g - 2.0 * (as + 1.0)));
    env.two_term_bound = prefactor * (std::pow(eps, m.theta) +
                                      std::pow(eps, (2.0 * g - a) / (a - as)) * T *
                                          std::abs(g - (as + 1.0)));
    env.c_gamma = (g > a) ? 2.0 * prefactor
                          : 2.0 * (1.0 + T * std::abs(g - (as + 1.0))) * prefactor;
    env.closed_form_bound = env.c_gamma * std::pow(eps, m.theta);
    return env;
}

// ============================================================================
// Density-floor ODE check
// ============================================================================

/// Finite-difference verification of the minimum-density inequality
///   rho_m'(t) >= -rho_m^{1+gamma-alpha} - C_gamma delta_1^theta rho_m^{1-alpha}
/// along a simulated series, and of the sharper form with the observed
/// sup w in place of its theoretical cap.  The tolerance is self-calibrated
/// from third differences of the series (the truncation error of the
/// centered/one-sided second-order derivative estimates).
struct FloorOdeReport {
    bool pass = false;
    double worst_margin = 0.0;       ///< min over samples of lhs - rhs (theory cap)
    double worst_sharp_margin = 0.0; ///< same with observed sup w
    int worst_index = 0;
    double fd_tolerance = 0.0;
};

inline FloorOdeReport density_floor_ode_check(const GasModel& m, const TheoryBounds& bounds,
                                              double eps, std::span<const double> rho_min,
                                              std::span<const double> sup_w,
                                              std::span<const double> times) {
    const std::size_t n = times.size();
    if (rho_min.size() != n || sup_w.size() != n || n < 3)
        throw std::invalid_argument("density_floor_ode_check: need matching series with >= 3 samples");

    // Second-order derivative estimates of rho_min(t).
    std::vector<double> drho(n);
    drho[0] = (-3.0 * rho_min[0] + 4.0 * rho_min[1] - rho_min[2]) / (times[2] - times[0]);
    for (std::size_t k = 1; k + 1 < n; ++k)
        drho[k] = (rho_min[k + 1] - rho_min[k - 1]) / (times[k + 1] - times[k - 1]);
    drho[n - 1] =
        (3.0 * rho_min[n - 1] - 4.0 * rho_min[n - 2] + rho_min[n - 3]) / (times[n - 1] - times[n - 3]);

    // Truncation-error budget: |error| <= dt^2/6 * max|rho'''| for the
    // centered stencil (dt^2/3 one-sided); estimated via third differences.
    double dt_max = 0.0;
    for (std::size_t k = 1; k < n; ++k) dt_max = std::max(dt_max, times[k] - times[k - 1]);
    double third = 0.0;
    for (std::size_t k = 0; k + 3 < n; ++k) {
        const double d3 = rho_min[k + 3] - 3.0 * rho_min[k + 2] + 3.0 * rho_min[k + 1] - rho_min[k];
        const double h = (times[k + 3] - times[k]) / 3.0;
        third = std::max(third, std::abs(d3) / (h * h * h));
    }

    FloorOdeReport report;
    const double cap = bounds.c_gamma * std::pow(bounds.delta_1, m.theta);
    double worst = std::numeric_limits<double>::infinity();
    double worst_sharp = std::numeric_limits<double>::infinity();
    double rhs_scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = rho_min[k];
        const double rhs_theory = -std::pow(r, 1.0 + m.gamma - m.alpha) -
                                  cap * std::pow(r, 1.0 - m.alpha);
        const double rhs_sharp =
            -r * (pressure(m, r) + std::max(sup_w[k], 0.0)) / mu_eps(m, eps, r);
        rhs_scale = std::max(rhs_scale, std::abs(rhs_theory));
        if (drho[k] - rhs_theory < worst) {
            worst = drho[k] - rhs_theory;
            report.worst_index = static_cast<int>(k);
        }
        worst_sharp = std::min(worst_sharp, drho[k] - rhs_sharp);
    }
    report.worst_margin = worst;
    report.worst_sharp_margin = worst_sharp;
    report.fd_tolerance =
        2.0 * (dt_max * dt_max / 3.0) * third + 1e-12 * (1.0 + rhs_scale);
    report.pass = worst >= -report.fd_tolerance;
    return report;
}

// ============================================================================
// Per-snapshot record
// ============================================================================

struct DiagnosticsRecord {
    double t = 0.0;
    double min_rho = 0.0, max_rho = 0.0;
    double sup_w = 0.0;
    double rho_at_sup_w = 0.0; ///< density at the spatial argmax of w
    double bd_energy_1 = 0.0, bd_energy_2 = 0.0;
    std::array<double, 5> seminorm_rho{}; ///< H^j seminorms of rho - rbar, j = 0..4
    std::array<double, 5> seminorm_u{};   ///< H^j seminorms of u - ubar
    double h4_norm_rho = 0.0, h4_norm_u = 0.0;
    double w_residual_l2 = 0.0;     ///< vs previous snapshot (0 at t = 0)
    double eps_branch_nodes = 0.0;  ///< # nodes where mu_eps != mu (branch predicate)
    double eps_branch_excess = 0.0; ///< max_i (eps rho^{a*} - rho^a)/rho^a, <= 0 when inert
    double mass = 0.0;              ///< trapezoid integral of rho
    double mass_flux_integral = 0.0; ///< time-accumulated boundary influx (set by the solver)
};

inline DiagnosticsRecord compute_record(const GasModel& m, double eps, const SimState& s,
                                        const Grid1D& g, const SampledBackground& bg) {
    DiagnosticsRecord r;
    r.t = s.t;

    const auto w = active_potential(m, eps, s, g);
    std::size_t arg = 0;
    r.min_rho = r.max_rho = s.rho[0];
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
        r.min_rho = std::min(r.min_rho, s.rho[i]);
        r.max_rho = std::max(r.max_rho, s.rho[i]);
        if (w[i] > w[arg]) arg = i;
    }
    r.sup_w = w[arg];
    r.rho_at_sup_w = s.rho[arg];

    const auto e = bd_energies(m, eps, s, g, bg);
    r.bd_energy_1 = e.e1;
    r.bd_energy_2 = e.e2;

    std::vector<double> drho(s.rho.size()), du(s.u.size());
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
        drho[i] = s.rho[i] - bg.rho[i];
        du[i] = s.u[i] - bg.u[i];
    }
    r.seminorm_rho = hk_seminorms<4>(drho, g);
    r.seminorm_u = hk_seminorms<4>(du, g);
    auto full = [](const std::array<double, 5>& semi) {
        double sq = 0.0;
        for (double v : semi) sq += v * v;
        return std::sqrt(sq);
    };
    r.h4_norm_rho = full(r.seminorm_rho);
    r.h4_norm_u = full(r.seminorm_u);

    int branch_nodes = 0;
    double excess = -std::numeric_limits<double>::infinity();
    for (double rho : s.rho) {
        if (!mu_branch_is_degenerate(m, eps, rho)) ++branch_nodes;
        const double num = eps * std::pow(rho, m.alpha_star) - std::pow(rho, m.alpha);
        excess = std::max(excess, num / std::pow(rho, m.alpha));
    }
    r.eps_branch_nodes = branch_nodes;
    r.eps_branch_excess = excess;
    r.mass = trapezoid(s.rho, g.dx);
    return r;
}

// ============================================================================
// Diagnostics CSV exchange
// ============================================================================

inline const std::vector<std::string>& diagnostics_csv_header() {
    static const std::vector<std::string> header = {
        "t", "min_rho", "max_rho", "sup_w", "rho_at_sup_w", "bd_energy_1", "bd_energy_2",
        "h0_rho", "h1_rho", "h2_rho", "h3_rho", "h4_rho",
        "h0_u", "h1_u", "h2_u", "h3_u", "h4_u",
        "h4_norm_rho", "h4_norm_u", "w_residual_l2",
        "eps_branch_nodes", "eps_branch_excess", "mass", "mass_flux_integral"};
    return header;
}

inline void write_diagnostics_csv(std::ostream& os, std::span<const DiagnosticsRecord> series) {
    io::CsvTable t;
    t.header = diagnostics_csv_header();
    for (const auto& r : series) {
        std::vector<double> row = {r.t, r.min_rho, r.max_rho, r.sup_w, r.rho_at_sup_w,
                                   r.bd_energy_1, r.bd_energy_2};
        for (double v : r.seminorm_rho) row.push_back(v);
        for (double v : r.seminorm_u) row.push_back(v);
        row.insert(row.end(), {r.h4_norm_rho, r.h4_norm_u, r.w_residual_l2, r.eps_branch_nodes,
                               r.eps_branch_excess, r.mass, r.mass_flux_integral});
        t.rows.push_back(std::move(row));
    }
    io::write_csv(os, t);
}

inline std::vector<DiagnosticsRecord> read_diagnostics_csv(std::istream& is) {
    const auto t = io::read_csv(is);
    if (t.header != diagnostics_csv_header())
        throw std::runtime_error("diagnostics csv: unexpected header");
    std::vector<DiagnosticsRecord> series;
    series.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        DiagnosticsRecord r;
        std::size_t j = 0;
        r.t = row[j++];
        r.min_rho = row[j++];
        r.max_rho = row[j++];
        r.sup_w = row[j++];
        r.rho_at_sup_w = row[j++];
        r.bd_energy_1 = row[j++];
        r.bd_energy_2 = row[j++];
        for (double& v : r.seminorm_rho) v = row[j++];
        for (double& v : r.seminorm_u) v = row[j++];
        r.h4_norm_rho = row[j++];
        r.h4_norm_u = row[j++];
        r.w_residual_l2 = row[j++];
        r.eps_branch_nodes = row[j++];
        r.eps_branch_excess = row[j++];
        r.mass = row[j++];
        r.mass_flux_integral = row[j++];
        series.push_back(r);
    }
    return series;
}

} // namespace degvis
