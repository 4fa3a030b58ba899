/// @file demo_quickstart.cpp
/// @brief Minimal end-to-end use of the library: build initial data with two
///        distinct far-field states, run a short simulation, and print the
///        diagnostics that the a priori estimates speak about.

#include <iostream>

#include <degvis/diagnostics.hpp>
#include <degvis/profiles.hpp>
#include <degvis/solver.hpp>

int main() {
    using namespace degvis;

    const GasModel model = GasModel::make(2.0, 1.0);

    FamilyParams params;
    params.grid = Grid1D::make(8.0, 512);
    params.far_field = FarFieldStates::make(1.5, 0.8, 0.3, -0.3);
    params.amplitude = 0.5; // rescaled automatically to respect the slope condition
    params.width = 0.8;
    const InitialData data = make_initial_family(model, InitialFamily::compressive_pulse, params);

    const auto validation = validate_initial(model, data);
    std::cout << "initial data valid: " << (validation.all_pass() ? "yes" : "no")
              << "  (kappa0 = " << data.kappa0_lower << ")\n";

    const TheoryBounds bounds = theory_bounds(model, 0.5, data.kappa0_lower);
    std::cout << "delta_1 = " << bounds.delta_1 << ", kappa_T = " << bounds.kappa_T
              << ", C_gamma = " << bounds.c_gamma << "\n\n";

    SolverConfig cfg;
    cfg.eps = bounds.delta_1; // largest regularization the floor estimate covers
    cfg.end_time = 0.5;
    cfg.snapshot_interval = 0.1;

    const RunReport report = run(model, cfg, data);
    std::cout << "status: " << termination_name(report.status) << " after "
              << report.steps_taken << " steps\n";
    std::cout << "t        min_rho   sup_w       E1        eps_branch_nodes\n";
    for (const auto& rec : report.series)
        std::cout << rec.t << "     " << rec.min_rho << "   " << rec.sup_w << "   "
                  << rec.bd_energy_1 << "   " << rec.eps_branch_nodes << '\n';

    const double floor_margin =
        report.series.back().min_rho - bounds.kappa_T; // must stay positive
    std::cout << "\ndensity-floor margin over kappa_T: " << floor_margin << '\n';
    return 0;
}
