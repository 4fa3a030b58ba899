/// @file solver.hpp
/// @brief Method-of-lines discretization and time integration.
///
/// Space: second-order central differences on the uniform node grid, with a
/// conservative two-point average flux for the continuity equation (so the
/// discrete mass balance telescopes exactly) and an arithmetic-mean face
/// viscosity for the diffusion term.  Boundary nodes are pinned to the
/// far-field values.
///
/// Time: three-stage strong-stability-preserving Runge-Kutta (SSP-RK3).
/// The viscous term is integrated either explicitly inside the RK stages
/// (dt restricted by the diffusion number) or by a backward-Euler solve
/// after the hyperbolic stages (dt restricted only by the CFL number).
/// The implicit solve is formulated in delta form, so states with a
/// spatially constant velocity are reproduced bit-exactly.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "profiles.hpp"

namespace degvis {

// ============================================================================
// Configuration
// ============================================================================

enum class ViscousTreatment { explicit_rk, implicit_be };

inline std::string viscous_treatment_name(ViscousTreatment v) {
    return v == ViscousTreatment::explicit_rk ? "explicit" : "implicit";
}

inline ViscousTreatment parse_viscous_treatment(const std::string& s) {
    if (s == "explicit") return ViscousTreatment::explicit_rk;
    if (s == "implicit") return ViscousTreatment::implicit_be;
    throw std::invalid_argument("viscous_treatment must be 'explicit' or 'implicit', got '" + s +
                                "'");
}

struct SolverConfig {
    double eps = 0.1;                 ///< regularization strength, in (0,1)
    double cfl_number = 0.4;          ///< advective Courant number, in (0,1]
    double diffusion_number = 0.25;   ///< explicit diffusion number, in (0,0.5]
    double end_time = 1.0;            ///< horizon T > 0
    double snapshot_interval = 0.05;  ///< diagnostics cadence, in (0, end_time]
    ViscousTreatment viscous_treatment = ViscousTreatment::implicit_be;

    void validate() const {
        if (!(eps > 0.0 && eps < 1.0))
            throw std::domain_error("solver config: eps = " + io::format_double(eps) +
                                    " outside (0,1)");
        if (!(cfl_number > 0.0 && cfl_number <= 1.0))
            throw std::domain_error("solver config: cfl_number outside (0,1]");
        if (!(diffusion_number > 0.0 && diffusion_number <= 0.5))
            throw std::domain_error("solver config: diffusion_number outside (0,0.5]");
        if (!(end_time > 0.0 && std::isfinite(end_time)))
            throw std::domain_error("solver config: end_time must be positive");
        if (!(snapshot_interval > 0.0 && snapshot_interval <= end_time))
            throw std::domain_error("solver config: snapshot_interval outside (0, end_time]");
    }
};

// ============================================================================
// Semidiscrete right-hand side
// ============================================================================

struct Tendency {
    std::vector<double> drho_dt, du_dt;
    double boundary_influx = 0.0; ///< F_{1/2} - F_{N-1/2}, the rate of interior mass gain
};

namespace detail {
inline double mass_flux(const SimState& s, std::size_t i) { return s.rho[i] * s.u[i]; }

inline double face_viscosity(const GasModel& m, double eps, const SimState& s, std::size_t i) {
    return 0.5 * (mu_eps(m, eps, s.rho[i]) + mu_eps(m, eps, s.rho[i + 1]));
}
} // namespace detail

/// Tendencies of (rho, u) with zero rows at the pinned boundary nodes.
/// The viscous term is included only when requested (the implicit path
/// integrates it separately).
inline Tendency semidiscrete_rhs(const GasModel& m, double eps, const SimState& s,
                                 const Grid1D& g, bool include_viscous) {
    require_field_size(s.rho, g, "semidiscrete_rhs rho");
    require_field_size(s.u, g, "semidiscrete_rhs u");
    const int n = g.node_count();
    const double dx = g.dx;

    Tendency out;
    out.drho_dt.assign(static_cast<std::size_t>(n), 0.0);
    out.du_dt.assign(static_cast<std::size_t>(n), 0.0);

    for (int i = 1; i < n - 1; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        // conservative continuity: -(F_{i+1/2} - F_{i-1/2}) / dx with the
        // two-point average flux, equal to the central difference of rho*u
        const double flux_right = 0.5 * (detail::mass_flux(s, k) + detail::mass_flux(s, k + 1));
        const double flux_left = 0.5 * (detail::mass_flux(s, k - 1) + detail::mass_flux(s, k));
        out.drho_dt[k] = -(flux_right - flux_left) / dx;

        // primitive momentum: u_t = -u u_x - p'(rho)/rho rho_x (+ viscous)
        const double du_dx = (s.u[k + 1] - s.u[k - 1]) / (2.0 * dx);
        const double drho_dx = (s.rho[k + 1] - s.rho[k - 1]) / (2.0 * dx);
        double acc = -s.u[k] * du_dx - pressure_slope(m, s.rho[k]) / s.rho[k] * drho_dx;
        if (include_viscous) {
            const double mu_r = detail::face_viscosity(m, eps, s, k);
            const double mu_l = detail::face_viscosity(m, eps, s, k - 1);
            acc += (mu_r * (s.u[k + 1] - s.u[k]) - mu_l * (s.u[k] - s.u[k - 1])) /
                   (dx * dx * s.rho[k]);
        }
        out.du_dt[k] = acc;
    }

    const std::size_t last = static_cast<std::size_t>(n - 1);
    out.boundary_influx = 0.5 * (detail::mass_flux(s, 0) + detail::mass_flux(s, 1)) -
                          0.5 * (detail::mass_flux(s, last - 1) + detail::mass_flux(s, last));
    return out;
}

/// Largest stable step: cfl * dx / max(|u| + c) for the hyperbolic part,
/// additionally diffusion_number * dx^2 * min(rho/mu_eps) when the viscous
/// term is integrated explicitly.
inline double stable_dt(const GasModel& m, const SolverConfig& cfg, const SimState& s,
                        const Grid1D& g) {
    double speed = 0.0;
    double stiffness = 0.0; // max mu_eps / rho
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
        if (!(s.rho[i] > 0.0))
            throw PositivityLossError(static_cast<int>(i), s.t, s.rho[i]);
        speed = std::max(speed, std::abs(s.u[i]) + sound_speed(m, s.rho[i]));
        if (cfg.viscous_treatment == ViscousTreatment::explicit_rk)
            stiffness = std::max(stiffness, mu_eps(m, cfg.eps, s.rho[i]) / s.rho[i]);
    }
    double dt = cfg.cfl_number * g.dx / speed;
    if (cfg.viscous_treatment == ViscousTreatment::explicit_rk)
        dt = std::min(dt, cfg.diffusion_number * g.dx * g.dx / stiffness);
    if (!(dt > 0.0 && std::isfinite(dt)))
        throw std::runtime_error("stable_dt: nonpositive or non-finite step");
    return dt;
}

// ============================================================================
// Time stepping
// ============================================================================

namespace detail {

inline void check_positivity(const SimState& s, double t) {
    for (std::size_t i = 0; i < s.rho.size(); ++i)
        if (!(s.rho[i] > 0.0)) throw PositivityLossError(static_cast<int>(i), t, s.rho[i]);
}

/// Backward-Euler viscous solve in delta form:
///   (I - dt D) delta = dt D u*,   u_next = u* + delta,
/// where (D v)_i = [mu_{i+1/2}(v_{i+1}-v_i) - mu_{i-1/2}(v_i-v_{i-1})] /
/// (rho_i dx^2) on interior nodes and delta = 0 on the boundary.  A constant
/// u* gives D u* = 0 exactly, hence delta = 0 and u_next bitwise equal to u*.
inline void implicit_viscous_update(const GasModel& m, double eps, SimState& s, const Grid1D& g,
                                    double dt) {
    const int n = g.node_count();
    if (n < 3) return;
    const double dx2 = g.dx * g.dx;

    std::vector<double> lower(static_cast<std::size_t>(n), 0.0),
        diag(static_cast<std::size_t>(n), 1.0), upper(static_cast<std::size_t>(n), 0.0),
        rhs(static_cast<std::size_t>(n), 0.0);

    for (int i = 1; i < n - 1; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double mu_r = face_viscosity(m, eps, s, k);
        const double mu_l = face_viscosity(m, eps, s, k - 1);
        const double scale = dt / (s.rho[k] * dx2);
        lower[k] = -scale * mu_l;
        diag[k] = 1.0 + scale * (mu_l + mu_r);
        upper[k] = -scale * mu_r;
        rhs[k] = scale * (mu_r * (s.u[k + 1] - s.u[k]) - mu_l * (s.u[k] - s.u[k - 1]));
    }

    // Thomas algorithm (the system is strictly diagonally dominant).
    std::vector<double> c_star(static_cast<std::size_t>(n), 0.0),
        d_star(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i < n - 1; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double denom = diag[k] - lower[k] * c_star[k - 1];
        c_star[k] = upper[k] / denom;
        d_star[k] = (rhs[k] - lower[k] * d_star[k - 1]) / denom;
    }
    double delta_next = 0.0; // boundary value
    for (int i = n - 2; i >= 1; --i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double delta = d_star[k] - c_star[k] * delta_next;
        s.u[k] += delta;
        delta_next = delta;
    }
}

} // namespace detail

struct StepResult {
    SimState state;
    double mass_influx = 0.0; ///< exact interior mass gained during the step
};

/// One SSP-RK3 step of size dt (plus the backward-Euler viscous solve when
/// the implicit treatment is selected).  Throws PositivityLossError if any
/// stage produces a nonpositive density.  Deterministic: identical inputs
/// produce bit-identical outputs.
inline StepResult step_with_dt(const GasModel& m, const SolverConfig& cfg, const SimState& s,
                               const Grid1D& g, double dt) {
    if (!(dt > 0.0 && std::isfinite(dt))) throw std::invalid_argument("step: dt must be positive");
    const bool viscous_in_stages = cfg.viscous_treatment == ViscousTreatment::explicit_rk;
    const std::size_t n = s.rho.size();

    auto euler = [&](const SimState& from, double influx_from) {
        Tendency tend = semidiscrete_rhs(m, cfg.eps, from, g, viscous_in_stages);
        SimState out = from;
        for (std::size_t i = 0; i < n; ++i) {
            out.rho[i] += dt * tend.drho_dt[i];
            out.u[i] += dt * tend.du_dt[i];
        }
        detail::check_positivity(out, s.t);
        return std::pair{std::move(out), influx_from + dt * tend.boundary_influx};
    };

    auto [s1, m1] = euler(s, 0.0);
    auto [e2, me2] = euler(s1, m1);
    SimState s2 = s;
    for (std::size_t i = 0; i < n; ++i) {
        s2.rho[i] = 0.75 * s.rho[i] + 0.25 * e2.rho[i];
        s2.u[i] = 0.75 * s.u[i] + 0.25 * e2.u[i];
    }
    const double m2 = 0.25 * me2;
    detail::check_positivity(s2, s.t);

    auto [e3, me3] = euler(s2, m2);
    StepResult result;
    result.state = s;
    for (std::size_t i = 0; i < n; ++i) {
        result.state.rho[i] = (1.0 / 3.0) * s.rho[i] + (2.0 / 3.0) * e3.rho[i];
        result.state.u[i] = (1.0 / 3.0) * s.u[i] + (2.0 / 3.0) * e3.u[i];
    }
    result.mass_influx = (2.0 / 3.0) * me3;
    detail::check_positivity(result.state, s.t);

    if (cfg.viscous_treatment == ViscousTreatment::implicit_be)
        detail::implicit_viscous_update(m, cfg.eps, result.state, g, dt);

    result.state.t = s.t + dt;
    return result;
}

/// Convenience overload taking the step size from stable_dt.
inline StepResult step(const GasModel& m, const SolverConfig& cfg, const SimState& s,
                       const Grid1D& g) {
    return step_with_dt(m, cfg, s, g, stable_dt(m, cfg, s, g));
}

// ============================================================================
// Run driver
// ============================================================================

enum class Termination { completed, positivity_loss, user_abort };

inline std::string termination_name(Termination t) {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::positivity_loss: return "positivity-loss";
        case Termination::user_abort: return "user-abort";
    }
    throw std::logic_error("termination_name: unknown value");
}

struct RunOptions {
    int background_order = 4; ///< smoothness of the reference background
    bool store_snapshots = true;
    /// Called at every snapshot; returning false aborts the run.
    std::function<bool(const SimState&, const DiagnosticsRecord&)> on_snapshot;
};

struct RunReport {
    SolverConfig config;
    Termination status = Termination::completed;
    std::string error_message;
    std::vector<DiagnosticsRecord> series; ///< one record per completed snapshot
    std::vector<SimState> snapshots;       ///< states at snapshot times (optional)
    SimState final_state;                  ///< last valid state
    std::int64_t steps_taken = 0;
    double wall_seconds = 0.0;
};

/// Snapshot times: every exact multiple k * snapshot_interval below
/// end_time, then end_time itself.
inline std::vector<double> snapshot_times(const SolverConfig& cfg) {
    std::vector<double> times{0.0};
    const double tol = 1e-9 * cfg.snapshot_interval;
    for (int k = 1;; ++k) {
        const double t = k * cfg.snapshot_interval;
        if (t >= cfg.end_time - tol) break;
        times.push_back(t);
    }
    times.push_back(cfg.end_time);
    return times;
}

/// Integrates the data to cfg.end_time, recording diagnostics at every
/// snapshot.  Positivity loss is reported in the returned status rather
/// than propagated, so partial campaigns stay inspectable.
/// Precondition: the caller has validated the initial data (or explicitly
/// chose not to).
inline RunReport run(const GasModel& m, const SolverConfig& cfg, const InitialData& data,
                     const RunOptions& options = {}) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const Grid1D& g = data.grid;
    const auto background =
        SampledBackground::sample(BackgroundProfile::make(data.far_field(), options.background_order), g);

    RunReport report;
    report.config = cfg;

    SimState state = data.state();
    SimState prev_snapshot = state;
    double mass_flux_acc = 0.0;

    auto record_snapshot = [&](const SimState& snap) -> bool {
        DiagnosticsRecord rec = compute_record(m, cfg.eps, snap, g, background);
        rec.mass_flux_integral = mass_flux_acc;
        if (!report.series.empty())
            rec.w_residual_l2 = w_equation_residual(m, cfg.eps, prev_snapshot, snap, g);
        report.series.push_back(rec);
        if (options.store_snapshots) report.snapshots.push_back(snap);
        prev_snapshot = snap;
        if (options.on_snapshot && !options.on_snapshot(snap, rec)) return false;
        return true;
    };

    try {
        if (!record_snapshot(state)) {
            report.status = Termination::user_abort;
        } else {
            const auto targets = snapshot_times(cfg);
            for (std::size_t ti = 1; ti < targets.size(); ++ti) {
                const double target = targets[ti];
                while (state.t < target) {
                    double dt = stable_dt(m, cfg, state, g);
                    const double remaining = target - state.t;
                    const bool landing = state.t + dt >= target - 1e-14 * std::max(1.0, target);
                    if (landing) dt = remaining;
                    StepResult sr = step_with_dt(m, cfg, state, g, dt);
                    state = std::move(sr.state);
                    if (landing) state.t = target;
                    mass_flux_acc += sr.mass_influx;
                    ++report.steps_taken;
                }
                if (!record_snapshot(state)) {
                    report.status = Termination::user_abort;
                    break;
                }
            }
        }
    } catch (const PositivityLossError& e) {
        report.status = Termination::positivity_loss;
        report.error_message = e.what();
    }

    report.final_state = std::move(state);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

} // namespace degvis
