/// @file model.hpp
/// @brief Constitutive relations for 1D barotropic flow with degenerate,
///        regularized viscosity, and the closed-form theory constants.
///
/// The model is the isentropic system
///
///     rho_t + (rho u)_x             = 0
///     (rho u)_t + (rho u^2 + p)_x   = (mu_eps(rho) u_x)_x
///
/// with pressure p(rho) = rho^gamma (gamma > 1) and viscosity
/// mu(rho) = rho^alpha (alpha > 0, alpha <= gamma <= alpha + 1).  The
/// degenerate viscosity is regularized from below by a weaker power,
///
///     mu_eps(rho) = max(rho^alpha, eps * rho^{alpha_*}),
///     alpha_*     = (1/2) * min(alpha, 1/2),
///
/// so that mu_eps = mu exactly wherever rho >= eps^{1/(alpha-alpha_*)}.
/// Everything in this header is a pure function of (gamma, alpha, eps, rho).

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace degvis {

// ============================================================================
// GasModel
// ============================================================================

/// Immutable parameter pack (gamma, alpha) plus the derived exponents.
struct GasModel {
    double gamma;      ///< pressure exponent, > 1
    double alpha;      ///< viscosity exponent, > 0, alpha <= gamma <= alpha+1
    double alpha_star; ///< regularization exponent, (1/2)*min(alpha, 1/2)
    double theta;      ///< gamma / (alpha - alpha_star)

    /// Validates the admissible range and fills in the derived exponents.
    /// @throws std::domain_error outside gamma > 1, alpha > 0,
    ///         alpha <= gamma <= alpha + 1.
    static GasModel make(double gamma, double alpha) {
        if (!(std::isfinite(gamma) && std::isfinite(alpha)))
            throw std::domain_error("GasModel: gamma and alpha must be finite");
        if (!(gamma > 1.0))
            throw std::domain_error("GasModel: gamma must exceed 1, got " + std::to_string(gamma));
        if (!(alpha > 0.0))
            throw std::domain_error("GasModel: alpha must be positive, got " + std::to_string(alpha));
        if (!(alpha <= gamma && gamma <= alpha + 1.0))
            throw std::domain_error("GasModel: need alpha <= gamma <= alpha+1, got gamma=" +
                                    std::to_string(gamma) + ", alpha=" + std::to_string(alpha));
        GasModel m;
        m.gamma = gamma;
        m.alpha = alpha;
        m.alpha_star = 0.5 * std::min(alpha, 0.5);
        m.theta = gamma / (alpha - m.alpha_star);
        return m;
    }
};

namespace detail {
inline void require_positive_rho(double rho, const char* who) {
    if (!(rho > 0.0))
        throw std::domain_error(std::string(who) + ": rho must be positive, got " +
                                std::to_string(rho));
}
inline void require_eps(double eps, const char* who) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::domain_error(std::string(who) + ": eps must lie in (0,1), got " +
                                std::to_string(eps));
}
} // namespace detail

// ============================================================================
// Pressure and viscosity laws
// ============================================================================

/// p(rho) = rho^gamma.  Defined for rho >= 0.
inline double pressure(const GasModel& m, double rho) {
    if (!(rho >= 0.0)) throw std::domain_error("pressure: rho must be nonnegative");
    return std::pow(rho, m.gamma);
}

/// p'(rho) = gamma * rho^{gamma-1}.
inline double pressure_slope(const GasModel& m, double rho) {
    if (!(rho >= 0.0)) throw std::domain_error("pressure_slope: rho must be nonnegative");
    return m.gamma * std::pow(rho, m.gamma - 1.0);
}

/// Sound speed c(rho) = sqrt(p'(rho)).
inline double sound_speed(const GasModel& m, double rho) {
    return std::sqrt(pressure_slope(m, rho));
}

/// Unregularized viscosity mu(rho) = rho^alpha.
inline double mu(const GasModel& m, double rho) {
    if (!(rho >= 0.0)) throw std::domain_error("mu: rho must be nonnegative");
    return std::pow(rho, m.alpha);
}

/// True when the unregularized branch wins the max defining mu_eps, i.e.
/// rho^alpha >= eps * rho^{alpha_*}.  Ties go to the unregularized branch so
/// that "mu_eps == mu" is decided by this single predicate everywhere
/// (solver, diagnostics, verdicts).
inline bool mu_branch_is_degenerate(const GasModel& m, double eps, double rho) {
    detail::require_positive_rho(rho, "mu_branch_is_degenerate");
    detail::require_eps(eps, "mu_branch_is_degenerate");
    return std::pow(rho, m.alpha) >= eps * std::pow(rho, m.alpha_star);
}

/// Regularized viscosity mu_eps(rho) = max(rho^alpha, eps*rho^{alpha_*}).
inline double mu_eps(const GasModel& m, double eps, double rho) {
    detail::require_positive_rho(rho, "mu_eps");
    detail::require_eps(eps, "mu_eps");
    return std::max(std::pow(rho, m.alpha), eps * std::pow(rho, m.alpha_star));
}

/// Branch-wise derivative of mu_eps w.r.t. rho.  At the (measure-zero)
/// branch point the degenerate branch is used, consistent with
/// mu_branch_is_degenerate.
inline double mu_eps_deriv(const GasModel& m, double eps, double rho) {
    if (mu_branch_is_degenerate(m, eps, rho))
        return m.alpha * std::pow(rho, m.alpha - 1.0);
    return eps * m.alpha_star * std::pow(rho, m.alpha_star - 1.0);
}

/// The density threshold eps^{1/(alpha-alpha_*)} at and above which
/// mu_eps(rho) = mu(rho) (de-regularization).
inline double deregularization_threshold(const GasModel& m, double eps) {
    detail::require_eps(eps, "deregularization_threshold");
    return std::pow(eps, 1.0 / (m.alpha - m.alpha_star));
}

// ============================================================================
// Active-potential coefficients
// ============================================================================
//
// The active potential w = -p(rho) + mu_eps(rho) u_x satisfies, along smooth
// solutions,
//
//   w_t = (mu_eps/rho) w_xx - (u + mu_eps rho_x / rho^2) w_x
//         + f1 w - f2 w^2 + f3,
//
// with the coefficient functions below.  Note the algebraic identity
// f1*(-p) - f2*p^2 + f3 = 0: constant states are steady for w.

/// Zeroth/linear/quadratic source coefficients of the w-equation.
struct FCoefficients {
    double f1; ///< rho p'/mu_eps - 2 p (rho mu_eps' + mu_eps)/mu_eps^2
    double f2; ///< (rho mu_eps' + mu_eps)/mu_eps^2
    double f3; ///< (rho p'/mu_eps - p (rho mu_eps' + mu_eps)/mu_eps^2) * p
};

inline FCoefficients coefficients_f(const GasModel& m, double eps, double rho) {
    detail::require_positive_rho(rho, "coefficients_f");
    const double p = pressure(m, rho);
    const double dp = pressure_slope(m, rho);
    const double me = mu_eps(m, eps, rho);
    const double dme = mu_eps_deriv(m, eps, rho);
    const double g = (rho * dme + me) / (me * me); // (rho mu' + mu)/mu^2
    FCoefficients f;
    f.f1 = rho * dp / me - 2.0 * p * g;
    f.f2 = g;
    f.f3 = (rho * dp / me - p * g) * p;
    return f;
}

/// Coefficients of the comparison ODE for the running maximum w_M(t):
/// w_M' <= J1(rho_M) w_M + J2(rho_M), evaluated at the density carried by
/// the spatial argmax of w.  Under alpha <= gamma <= alpha+1 both are
/// nonpositive on the degenerate branch.
struct JCoefficients {
    double j1; ///< rho^gamma / mu_eps^2 * (gamma mu_eps - 2 (rho mu_eps' + mu_eps))
    double j2; ///< rho^{2 gamma} / mu_eps^2 * (gamma mu_eps - (rho mu_eps' + mu_eps))
};

inline JCoefficients j_coefficients(const GasModel& m, double eps, double rho) {
    detail::require_positive_rho(rho, "j_coefficients");
    const double p = pressure(m, rho);
    const double me = mu_eps(m, eps, rho);
    const double dme = mu_eps_deriv(m, eps, rho);
    const double k = rho * dme + me;
    JCoefficients j;
    j.j1 = p / (me * me) * (m.gamma * me - 2.0 * k);
    j.j2 = p * p / (me * me) * (m.gamma * me - k);
    return j;
}

/// Reconstructs the velocity gradient from the active potential:
/// u_x = (w + p(rho)) / mu_eps(rho).
inline double velocity_gradient_identity(const GasModel& m, double eps, double rho, double w) {
    detail::require_positive_rho(rho, "velocity_gradient_identity");
    return (w + pressure(m, rho)) / mu_eps(m, eps, rho);
}

// ============================================================================
// Theory constants
// ============================================================================

/// The explicit constants of the a priori estimates on a horizon [0, T] for
/// initial data with density floor kappa0 = inf rho_0 > 0:
///
///   * eps_gamma  — admissibility threshold for the active-potential bound
///                  sup w <= C_gamma eps^theta (all eps <= eps_gamma);
///   * delta_1    — threshold for the uniform density floor
///                  rho >= kappa_T (all eps <= delta_1);
///   * delta_T    — threshold below which the regularization is inert,
///                  mu_eps(rho) = mu(rho) identically on [0, T].
struct TheoryBounds {
    double horizon;      ///< T
    double kappa0_lower; ///< inf of the initial density
    double eps_gamma;
    double c_gamma;
    double q_of_gamma; ///< theta if gamma > alpha, 1 if gamma = alpha
    double delta_1;
    double kappa_T; ///< uniform density floor on [0, T]
    double delta_T; ///< min(kappa_T^{alpha-alpha_*}, delta_1)
};

/// Evaluates the closed forms.  Two regimes: gamma > alpha and gamma = alpha
/// (detected exactly; the admissible range excludes gamma < alpha).
inline TheoryBounds theory_bounds(const GasModel& m, double horizon, double kappa0_lower) {
    if (!(horizon > 0.0 && std::isfinite(horizon)))
        throw std::domain_error("theory_bounds: horizon must be positive and finite");
    if (!(kappa0_lower > 0.0 && std::isfinite(kappa0_lower)))
        throw std::domain_error("theory_bounds: kappa0_lower must be positive and finite");

    const double g = m.gamma, a = m.alpha, as = m.alpha_star, T = horizon;
    TheoryBounds b;
    b.horizon = T;
    b.kappa0_lower = kappa0_lower;

    if (g > a) {
        b.q_of_gamma = m.theta;
        b.eps_gamma = std::pow(1.0 / (1.0 + T * std::abs(g - (as + 1.0))), (a - as) / (g - a));
        b.c_gamma = 2.0 * std::exp(T * std::abs(g - 2.0 * (as + 1.0)));
        const double ode_term =
            std::pow((std::pow(2.0, a) - 1.0) / (a * (std::pow(2.0, g) + b.c_gamma) * T),
                     g / (b.q_of_gamma * (g - a)));
        b.delta_1 = std::min({b.eps_gamma, std::pow(kappa0_lower / 4.0, a - as), ode_term});
        b.kappa_T = std::pow(b.delta_1, b.q_of_gamma / g);
    } else {
        // gamma == alpha.  The admissibility proof only needs eps <= 1 here,
        // so the threshold is the top of the admissible range (0,1).
        b.q_of_gamma = 1.0;
        b.eps_gamma = 1.0;
        b.c_gamma = 2.0 * (1.0 + T * std::abs(g - (as + 1.0))) *
                    std::exp(T * std::abs(g - 2.0 * (as + 1.0)));
        const double ode_term =
            std::pow((std::pow(2.0, a) - 1.0) * std::exp(-a * T) / b.c_gamma, (a - as) / as);
        b.delta_1 = std::min({b.eps_gamma, std::pow(kappa0_lower / 4.0, a), ode_term});
        b.kappa_T = std::exp(-T) * std::pow(b.delta_1, 1.0 / a);
    }
    b.delta_T = std::min(std::pow(b.kappa_T, a - as), b.delta_1);

    if (!(b.delta_1 > 0.0 && b.kappa_T > 0.0 && b.delta_T > 0.0))
        throw std::domain_error("theory_bounds: constants underflowed to zero "
                                "(horizon too long or gamma too close to alpha)");
    return b;
}

} // namespace degvis
