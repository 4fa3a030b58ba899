/// @file profiles.hpp
/// @brief Far-field backgrounds, initial-data families, and the hypothesis
///        checks the well-posedness theory places on the data.
///
/// Backgrounds connect two (possibly distinct) constant far-field states
/// (rho_-, u_-) and (rho_+, u_+) across [-1, 1] with a C^m smoothstep and are
/// constant outside.  Initial-data families perturb a background and are
/// rescaled at construction so the one-sided slope condition
///
///     d/dx u_0 <= rho_0^{gamma-alpha}      (mono-w0, discrete form)
///
/// holds with margin; validate_initial re-checks it together with strict
/// positivity and far-field decay.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "model.hpp"

namespace degvis {

// ============================================================================
// Far-field states and smoothstep background
// ============================================================================

struct FarFieldStates {
    double rho_minus, rho_plus; ///< densities at -inf / +inf, both > 0
    double u_minus, u_plus;     ///< velocities at -inf / +inf

    static FarFieldStates make(double rho_minus, double rho_plus, double u_minus, double u_plus) {
        if (!(rho_minus > 0.0 && rho_plus > 0.0))
            throw std::domain_error("FarFieldStates: far-field densities must be positive");
        return {rho_minus, rho_plus, u_minus, u_plus};
    }
};

/// Polynomial smoothstep S of smoothness order m (degree 2m+1):
/// S(0)=0, S(1)=1, with the first m derivatives vanishing at both ends.
class SmoothStep {
public:
    explicit SmoothStep(int order) : order_(order) {
        if (order < 1 || order > 12)
            throw std::domain_error("SmoothStep: order must lie in [1, 12]");
        // S(t) = sum_{k=0}^{m} C(m+k,k) C(2m+1,m-k) (-1)^k t^{m+k+1}
        coeffs_.resize(static_cast<std::size_t>(order + 1));
        for (int k = 0; k <= order; ++k)
            coeffs_[static_cast<std::size_t>(k)] = ((k % 2) ? -1.0 : 1.0) *
                                                   binomial(order + k, k) *
                                                   binomial(2 * order + 1, order - k);
    }

    int order() const { return order_; }

    /// Clamped evaluation: 0 for t<=0, 1 for t>=1.
    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        // Horner over the powers t^{m+1} ... t^{2m+1}
        double acc = 0.0;
        for (int k = order_; k >= 0; --k) acc = acc * t + coeffs_[static_cast<std::size_t>(k)];
        return acc * std::pow(t, order_ + 1.0);
    }

private:
    static double binomial(int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    }
    int order_;
    std::vector<double> coeffs_;
};

/// C^m connector between two far-field states: transitions across [-1, 1],
/// exactly constant outside.
struct BackgroundProfile {
    FarFieldStates far_field{1.0, 1.0, 0.0, 0.0};
    int smoothness_order = 4;

    static BackgroundProfile make(const FarFieldStates& ff, int smoothness_order) {
        if (smoothness_order < 4)
            throw std::domain_error("BackgroundProfile: smoothness order must be >= 4 "
                                    "(fourth-order Sobolev diagnostics are tracked)");
        BackgroundProfile b;
        b.far_field = ff;
        b.smoothness_order = smoothness_order;
        b.step_ = SmoothStep(smoothness_order);
        return b;
    }

    double rho(double x) const {
        return far_field.rho_minus + (far_field.rho_plus - far_field.rho_minus) * blend(x);
    }
    double u(double x) const {
        return far_field.u_minus + (far_field.u_plus - far_field.u_minus) * blend(x);
    }

private:
    double blend(double x) const { return step_(0.5 * (x + 1.0)); }
    SmoothStep step_{4};
};

/// Compactly supported C^m bump: 1 at the center, 0 outside |x-c| >= w.
struct SmoothBump {
    double center, width;
    SmoothStep step;

    SmoothBump(double center, double width, int order) : center(center), width(width), step(order) {
        if (!(width > 0.0)) throw std::domain_error("SmoothBump: width must be positive");
    }
    double operator()(double x) const { return step(1.0 - std::abs(x - center) / width); }
};

// ============================================================================
// Initial data
// ============================================================================

struct InitialData {
    Grid1D grid;
    std::vector<double> rho0, u0;
    double kappa0_lower = 0.0; ///< min_i rho0
    double kappa0_upper = 0.0; ///< max_i rho0

    static InitialData make(const Grid1D& grid, std::vector<double> rho0, std::vector<double> u0) {
        require_field_size(rho0, grid, "InitialData rho0");
        require_field_size(u0, grid, "InitialData u0");
        InitialData d{grid, std::move(rho0), std::move(u0)};
        const auto [lo, hi] = std::minmax_element(d.rho0.begin(), d.rho0.end());
        d.kappa0_lower = *lo;
        d.kappa0_upper = *hi;
        return d;
    }

    /// Far-field states read off the boundary nodes.
    FarFieldStates far_field() const {
        return {rho0.front(), rho0.back(), u0.front(), u0.back()};
    }

    SimState state() const { return SimState{0.0, rho0, u0}; }
};

// ============================================================================
// Hypothesis validation
// ============================================================================

struct HypothesisCheck {
    std::string name;
    bool pass;
    double observed;  ///< worst observed value (sense depends on the check)
    double threshold; ///< the value it was compared against
    int worst_node;   ///< node index realizing the worst value
};

struct ValidationReport {
    std::vector<HypothesisCheck> checks;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(),
                           [](const HypothesisCheck& c) { return c.pass; });
    }
    const HypothesisCheck& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw std::invalid_argument("ValidationReport: no check named '" + name + "'");
    }
};

/// Checks the data hypotheses:
///   * positivity       — kappa0_lower = min rho0 > 0;
///   * tail-decay       — rho0, u0 match their boundary values on the outer
///                        eighth of the domain (discrete proxy for the
///                        perturbation living in a Sobolev space);
///   * mono-w0          — discrete slope condition
///                        (d/dx u0)_i <= (rho0_i)^{gamma-alpha} at every node.
inline ValidationReport validate_initial(const GasModel& model, const InitialData& data) {
    const Grid1D& g = data.grid;
    const int n = g.node_count();
    ValidationReport report;

    // positivity
    {
        int worst = 0;
        for (int i = 1; i < n; ++i)
            if (data.rho0[static_cast<std::size_t>(i)] < data.rho0[static_cast<std::size_t>(worst)])
                worst = i;
        const double k0 = data.rho0[static_cast<std::size_t>(worst)];
        report.checks.push_back({"positivity", k0 > 0.0, k0, 0.0, worst});
    }

    // tail-decay: outer eighth of the domain on each side
    {
        const double tail_start = 0.875 * g.half_length;
        const double rho_scale = 1.0 + std::max(std::abs(data.rho0.front()), std::abs(data.rho0.back()));
        const double u_scale = 1.0 + std::max(std::abs(data.u0.front()), std::abs(data.u0.back()));
        const double tol = 1e-8;
        double worst_dev = 0.0;
        int worst = 0;
        for (int i = 0; i < n; ++i) {
            const double x = g.x(i);
            if (std::abs(x) < tail_start) continue;
            const bool left = x < 0.0;
            const double rdev =
                std::abs(data.rho0[static_cast<std::size_t>(i)] -
                         (left ? data.rho0.front() : data.rho0.back())) / rho_scale;
            const double udev =
                std::abs(data.u0[static_cast<std::size_t>(i)] -
                         (left ? data.u0.front() : data.u0.back())) / u_scale;
            const double dev = std::max(rdev, udev);
            if (dev > worst_dev) { worst_dev = dev; worst = i; }
        }
        report.checks.push_back({"tail-decay", worst_dev <= tol, worst_dev, tol, worst});
    }

    // mono-w0
    {
        const auto du = first_derivative(data.u0, g);
        double worst_excess = -std::numeric_limits<double>::infinity();
        int worst = 0;
        for (int i = 0; i < n; ++i) {
            const double cap = std::pow(data.rho0[static_cast<std::size_t>(i)],
                                        model.gamma - model.alpha);
            const double excess = du[static_cast<std::size_t>(i)] - cap;
            if (excess > worst_excess) { worst_excess = excess; worst = i; }
        }
        report.checks.push_back({"mono-w0", worst_excess <= 0.0, worst_excess, 0.0, worst});
    }

    return report;
}

// ============================================================================
// Initial-data families
// ============================================================================

enum class InitialFamily { constant, background_exact, compressive_pulse, expansive_pulse };

inline std::string family_name(InitialFamily f) {
    switch (f) {
        case InitialFamily::constant: return "constant";
        case InitialFamily::background_exact: return "background-exact";
        case InitialFamily::compressive_pulse: return "compressive-pulse";
        case InitialFamily::expansive_pulse: return "expansive-pulse";
    }
    throw std::logic_error("family_name: unknown family");
}

inline InitialFamily parse_family(const std::string& s) {
    if (s == "constant") return InitialFamily::constant;
    if (s == "background-exact") return InitialFamily::background_exact;
    if (s == "compressive-pulse") return InitialFamily::compressive_pulse;
    if (s == "expansive-pulse") return InitialFamily::expansive_pulse;
    throw std::invalid_argument("unknown initial-data family '" + s + "'");
}

struct FamilyParams {
    Grid1D grid = Grid1D::make(4.0, 64);
    FarFieldStates far_field{1.0, 1.0, 0.0, 0.0};
    int smoothness_order = 4;
    double amplitude = 0.0; ///< requested velocity-pulse amplitude, >= 0
    double center = 0.0;    ///< pulse center
    double width = 1.0;     ///< pulse half-width
    double rho_bump = 0.0;  ///< relative density bump, > -1
};

/// Builds one of the named families.  Pulse families rescale the velocity
/// amplitude (never upward) so the discrete mono-w0 condition holds with a
/// 0.9 margin: max d/dx u0 <= 0.9 * min rho0^{gamma-alpha}.
/// @throws ConstructionError when no amplitude in [0, requested] works.
inline InitialData make_initial_family(const GasModel& model, InitialFamily family,
                                       const FamilyParams& p) {
    const Grid1D& g = p.grid;
    const int n = g.node_count();

    if (family == InitialFamily::constant) {
        if (p.far_field.rho_minus != p.far_field.rho_plus ||
            p.far_field.u_minus != p.far_field.u_plus)
            throw ConstructionError("constant family requires equal far-field states", 0.0);
        return InitialData::make(g,
                                 std::vector<double>(static_cast<std::size_t>(n), p.far_field.rho_minus),
                                 std::vector<double>(static_cast<std::size_t>(n), p.far_field.u_minus));
    }

    const auto background = BackgroundProfile::make(p.far_field, p.smoothness_order);
    std::vector<double> rho0(static_cast<std::size_t>(n)), u0(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rho0[static_cast<std::size_t>(i)] = background.rho(g.x(i));
        u0[static_cast<std::size_t>(i)] = background.u(g.x(i));
    }

    if (family == InitialFamily::background_exact) {
        auto data = InitialData::make(g, std::move(rho0), std::move(u0));
        const auto report = validate_initial(model, data);
        if (!report.check("mono-w0").pass)
            throw ConstructionError("background-exact data violates the slope condition "
                                    "(no amplitude to rescale)", 0.0);
        return data;
    }

    // Pulse families: u0 = ubar -/+ a * B(x), optional relative density bump.
    if (!(p.amplitude >= 0.0))
        throw std::domain_error("make_initial_family: amplitude must be >= 0");
    if (!(p.width > 0.0))
        throw std::domain_error("make_initial_family: width must be positive");
    if (std::abs(p.center) + p.width > 0.75 * g.half_length)
        throw std::domain_error("make_initial_family: pulse support must stay inside "
                                "|x| <= 0.75 * half_length");

    const SmoothBump bump(p.center, p.width, p.smoothness_order);
    std::vector<double> bump_vals(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) bump_vals[static_cast<std::size_t>(i)] = bump(g.x(i));

    if (p.rho_bump != 0.0) {
        for (int i = 0; i < n; ++i) {
            const double factor = 1.0 + p.rho_bump * bump_vals[static_cast<std::size_t>(i)];
            if (!(factor > 0.0))
                throw ConstructionError("density bump destroys positivity", p.rho_bump);
            rho0[static_cast<std::size_t>(i)] *= factor;
        }
    }

    const double sign = (family == InitialFamily::compressive_pulse) ? -1.0 : 1.0;

    // Slope budget: max_i (q_i + a*b_i) <= margin, q = d/dx ubar, b = sign * d/dx B.
    double cap = std::numeric_limits<double>::infinity();
    for (double r : rho0) cap = std::min(cap, std::pow(r, model.gamma - model.alpha));
    const double margin = 0.9 * cap;

    const auto q = first_derivative(u0, g);
    const auto db = first_derivative(bump_vals, g);
    double a_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double b = sign * db[static_cast<std::size_t>(i)];
        const double head = margin - q[static_cast<std::size_t>(i)];
        if (b > 0.0)
            a_max = std::min(a_max, head / b);
        else if (head < 0.0)
            a_max = -std::numeric_limits<double>::infinity(); // violated at every amplitude
    }
    if (!(a_max >= 0.0))
        throw ConstructionError("pulse parameters cannot satisfy the slope condition", a_max);

    const double a = std::min(p.amplitude, a_max);
    for (int i = 0; i < n; ++i)
        u0[static_cast<std::size_t>(i)] += sign * a * bump_vals[static_cast<std::size_t>(i)];

    return InitialData::make(g, std::move(rho0), std::move(u0));
}

// ============================================================================
// Initial-data CSV exchange
// ============================================================================

inline void write_initial_csv(std::ostream& os, const InitialData& data) {
    io::CsvTable t;
    t.header = {"x", "rho0", "u0"};
    const int n = data.grid.node_count();
    t.rows.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        t.rows.push_back({data.grid.x(i), data.rho0[static_cast<std::size_t>(i)],
                          data.u0[static_cast<std::size_t>(i)]});
    io::write_csv(os, t);
}

/// Reads "x,rho0,u0".  The grid is inferred from the x column, which must be
/// uniform and symmetric about zero.
inline InitialData read_initial_csv(std::istream& is) {
    const auto t = io::read_csv(is);
    const auto xs = t.column_values("x");
    const auto rho0 = t.column_values("rho0");
    const auto u0 = t.column_values("u0");
    if (xs.size() < 2) throw std::invalid_argument("initial-data csv: need at least 2 rows");

    const double L = -xs.front();
    const int n_cells = static_cast<int>(xs.size()) - 1;
    if (std::abs(xs.front() + xs.back()) > 1e-12 * (1.0 + L))
        throw std::invalid_argument("initial-data csv: domain must be symmetric about 0");
    const Grid1D g = Grid1D::make(L, n_cells);
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::abs(xs[i] - g.x(static_cast<int>(i))) > 1e-10 * (1.0 + L))
            throw std::invalid_argument("initial-data csv: node spacing is not uniform (row " +
                                        std::to_string(i) + ")");
    return InitialData::make(g, rho0, u0);
}

} // namespace degvis
