/// @file grid.hpp
/// @brief Uniform node-centered grid on [-L, L], simulation state, and the
///        second-order difference/quadrature kernels shared by the solver
///        and the diagnostics.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace degvis {

// ============================================================================
// Grid
// ============================================================================

/// N cells / N+1 nodes on [-L, L]; node i sits at x_i = -L + i*dx.
struct Grid1D {
    double half_length; ///< L
    int cell_count;     ///< N
    double dx;          ///< 2L / N

    static Grid1D make(double half_length, int cell_count) {
        if (!(half_length >= 2.0))
            throw std::invalid_argument("Grid1D: half_length must be >= 2, got " +
                                        std::to_string(half_length));
        if (cell_count < 16)
            throw std::invalid_argument("Grid1D: cell_count must be >= 16, got " +
                                        std::to_string(cell_count));
        Grid1D g;
        g.half_length = half_length;
        g.cell_count = cell_count;
        g.dx = 2.0 * half_length / cell_count;
        return g;
    }

    int node_count() const { return cell_count + 1; }
    double x(int i) const { return -half_length + i * dx; }

    std::vector<double> nodes() const {
        std::vector<double> xs(static_cast<std::size_t>(node_count()));
        for (int i = 0; i < node_count(); ++i) xs[static_cast<std::size_t>(i)] = x(i);
        return xs;
    }

    bool operator==(const Grid1D&) const = default;
};

/// Nodal fields (density, velocity) at a simulation time.  The boundary
/// nodes carry the far-field values and are held fixed by the solver.
struct SimState {
    double t = 0.0;
    std::vector<double> rho;
    std::vector<double> u;
};

inline void require_field_size(std::span<const double> f, const Grid1D& g, const char* who) {
    if (static_cast<int>(f.size()) != g.node_count())
        throw std::invalid_argument(std::string(who) + ": field has " +
                                    std::to_string(f.size()) + " nodes, grid expects " +
                                    std::to_string(g.node_count()));
}

// ============================================================================
// Difference stencils (second order)
// ============================================================================

/// Centered first derivative in the interior, one-sided three-point stencils
/// at the ends; second-order accurate everywhere.
inline std::vector<double> first_derivative(std::span<const double> f, const Grid1D& g) {
    require_field_size(f, g, "first_derivative");
    const int n = g.node_count();
    const double inv2dx = 1.0 / (2.0 * g.dx);
    std::vector<double> d(static_cast<std::size_t>(n));
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2dx;
    for (int i = 1; i < n - 1; ++i)
        d[static_cast<std::size_t>(i)] =
            (f[static_cast<std::size_t>(i + 1)] - f[static_cast<std::size_t>(i - 1)]) * inv2dx;
    d[static_cast<std::size_t>(n - 1)] =
        (3.0 * f[static_cast<std::size_t>(n - 1)] - 4.0 * f[static_cast<std::size_t>(n - 2)] +
         f[static_cast<std::size_t>(n - 3)]) *
        inv2dx;
    return d;
}

/// Centered second derivative at an interior node.
inline double second_difference(std::span<const double> f, int i, double dx) {
    return (f[static_cast<std::size_t>(i + 1)] - 2.0 * f[static_cast<std::size_t>(i)] +
            f[static_cast<std::size_t>(i - 1)]) /
           (dx * dx);
}

// ============================================================================
// Quadrature and norms
// ============================================================================

/// Trapezoid rule over consecutive nodes [first, last] (inclusive).
inline double trapezoid(std::span<const double> f, double dx, int first, int last) {
    if (last <= first) return 0.0;
    double s = 0.5 * (f[static_cast<std::size_t>(first)] + f[static_cast<std::size_t>(last)]);
    for (int i = first + 1; i < last; ++i) s += f[static_cast<std::size_t>(i)];
    return s * dx;
}

inline double trapezoid(std::span<const double> f, double dx) {
    return trapezoid(f, dx, 0, static_cast<int>(f.size()) - 1);
}

/// Discrete L2 norm sqrt(trapezoid(f^2)) over [first, last].
inline double l2_norm(std::span<const double> f, double dx, int first, int last) {
    if (last <= first) return 0.0;
    double s = 0.5 * (f[static_cast<std::size_t>(first)] * f[static_cast<std::size_t>(first)] +
                      f[static_cast<std::size_t>(last)] * f[static_cast<std::size_t>(last)]);
    for (int i = first + 1; i < last; ++i)
        s += f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
    return std::sqrt(s * dx);
}

inline double l2_norm(std::span<const double> f, double dx) {
    return l2_norm(f, dx, 0, static_cast<int>(f.size()) - 1);
}

} // namespace degvis
