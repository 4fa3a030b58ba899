/// @file harness.hpp
/// @brief Experiment orchestration: configuration files, eps-sweep campaigns,
///        grid-refinement and domain-doubling studies, bound verdicts, and
///        campaign persistence.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "diagnostics.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "model.hpp"
#include "profiles.hpp"
#include "solver.hpp"

namespace degvis {

using nlohmann::json;

// ============================================================================
// Experiment configuration
// ============================================================================

namespace cfgkey {

inline const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw std::invalid_argument("config error at " + path + ": missing required field");
    return j.at(key);
}

inline double number(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number())
        throw std::invalid_argument("config error at " + path + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const char* key, const std::string& path, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return number(j, key, path);
}

inline std::string string_or(const json& j, const char* key, const std::string& path,
                             const std::string& fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string())
        throw std::invalid_argument("config error at " + path + ": expected a string");
    return v.get<std::string>();
}

inline bool boolean_or(const json& j, const char* key, const std::string& path, bool fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean())
        throw std::invalid_argument("config error at " + path + ": expected a boolean");
    return v.get<bool>();
}

} // namespace cfgkey

/// A full experiment description: model, initial-data family, grid(s),
/// solver settings, and the viscosity-regularization sweep.
struct ExperimentConfig {
    double gamma = 2.0;
    double alpha = 1.0;

    InitialFamily family = InitialFamily::compressive_pulse;
    FarFieldStates far_field{1.0, 1.0, 0.0, 0.0};
    int smoothness_order = 4;
    double amplitude = 0.0;
    double center = 0.0;
    double width = 1.0;
    double rho_bump = 0.0;

    double half_length = 8.0;
    std::vector<int> cells{2048};

    SolverConfig solver; ///< eps and end_time are overwritten per run

    bool eps_is_factors = false;   ///< entries are multiples of delta_1
    std::vector<double> eps_entries{0.1};

    double end_time = 1.0;
    std::string output_dir = "campaign_out";
    bool validate_hypotheses = true;
    std::string label = "campaign";

    GasModel model() const { return GasModel::make(gamma, alpha); }

    Grid1D grid_for(int n_cells) const { return Grid1D::make(half_length, n_cells); }

    FamilyParams family_params(int n_cells) const {
        FamilyParams p;
        p.grid = grid_for(n_cells);
        p.far_field = far_field;
        p.smoothness_order = smoothness_order;
        p.amplitude = amplitude;
        p.center = center;
        p.width = width;
        p.rho_bump = rho_bump;
        return p;
    }

    InitialData make_data(int n_cells) const {
        return make_initial_family(model(), family, family_params(n_cells));
    }

    void validate() const {
        model(); // throws on bad (gamma, alpha)
        if (cells.empty()) throw std::invalid_argument("config error at grid.cells: empty list");
        for (std::size_t i = 0; i < cells.size(); ++i)
            grid_for(cells[i]); // throws with grid constraints
        if (eps_entries.empty())
            throw std::invalid_argument("config error at eps: empty list");
        if (!eps_is_factors)
            for (std::size_t i = 0; i < eps_entries.size(); ++i)
                if (!(eps_entries[i] > 0.0 && eps_entries[i] < 1.0))
                    throw std::invalid_argument(
                        "config error at eps[" + std::to_string(i) + "]: value " +
                        io::format_double(eps_entries[i]) +
                        " outside the admissible interval (0,1)");
        if (eps_is_factors)
            for (std::size_t i = 0; i < eps_entries.size(); ++i)
                if (!(eps_entries[i] > 0.0))
                    throw std::invalid_argument("config error at eps_delta1_factors[" +
                                                std::to_string(i) + "]: must be positive");
        if (!(end_time > 0.0))
            throw std::invalid_argument("config error at end_time: must be positive");
        SolverConfig probe = solver;
        probe.eps = 0.5; // placeholder; per-run eps validated at resolution time
        probe.end_time = end_time;
        probe.snapshot_interval = std::min(solver.snapshot_interval, end_time);
        probe.validate();
    }

    static ExperimentConfig from_json(const json& j) {
        ExperimentConfig c;
        const json& model = cfgkey::require(j, "model", "model");
        c.gamma = cfgkey::number(model, "gamma", "model.gamma");
        c.alpha = cfgkey::number(model, "alpha", "model.alpha");

        const json& initial = cfgkey::require(j, "initial", "initial");
        c.family = parse_family(cfgkey::string_or(initial, "family", "initial.family", "constant"));
        const json& ff = cfgkey::require(initial, "far_field", "initial.far_field");
        c.far_field = FarFieldStates::make(
            cfgkey::number(ff, "rho_minus", "initial.far_field.rho_minus"),
            cfgkey::number(ff, "rho_plus", "initial.far_field.rho_plus"),
            cfgkey::number(ff, "u_minus", "initial.far_field.u_minus"),
            cfgkey::number(ff, "u_plus", "initial.far_field.u_plus"));
        c.smoothness_order = static_cast<int>(
            cfgkey::number_or(initial, "smoothness_order", "initial.smoothness_order", 4));
        c.amplitude = cfgkey::number_or(initial, "amplitude", "initial.amplitude", 0.0);
        c.center = cfgkey::number_or(initial, "center", "initial.center", 0.0);
        c.width = cfgkey::number_or(initial, "width", "initial.width", 1.0);
        c.rho_bump = cfgkey::number_or(initial, "rho_bump", "initial.rho_bump", 0.0);

        const json& grid = cfgkey::require(j, "grid", "grid");
        c.half_length = cfgkey::number(grid, "half_length", "grid.half_length");
        const json& cells = cfgkey::require(grid, "cells", "grid.cells");
        if (!cells.is_array())
            throw std::invalid_argument("config error at grid.cells: expected an array");
        c.cells.clear();
        for (const auto& v : cells) {
            if (!v.is_number_integer())
                throw std::invalid_argument("config error at grid.cells: expected integers");
            c.cells.push_back(v.get<int>());
        }

        if (j.contains("solver")) {
            const json& s = j.at("solver");
            c.solver.cfl_number = cfgkey::number_or(s, "cfl_number", "solver.cfl_number", 0.4);
            c.solver.diffusion_number =
                cfgkey::number_or(s, "diffusion_number", "solver.diffusion_number", 0.25);
            c.solver.snapshot_interval =
                cfgkey::number_or(s, "snapshot_interval", "solver.snapshot_interval", 0.05);
            c.solver.viscous_treatment = parse_viscous_treatment(
                cfgkey::string_or(s, "viscous_treatment", "solver.viscous_treatment", "implicit"));
        }

        const bool has_abs = j.contains("eps");
        const bool has_fac = j.contains("eps_delta1_factors");
        if (has_abs == has_fac)
            throw std::invalid_argument(
                "config error at eps: provide exactly one of 'eps' or 'eps_delta1_factors'");
        const json& eps = j.at(has_abs ? "eps" : "eps_delta1_factors");
        if (!eps.is_array() || eps.empty())
            throw std::invalid_argument("config error at eps: expected a nonempty array");
        c.eps_is_factors = has_fac;
        c.eps_entries.clear();
        for (const auto& v : eps) {
            if (!v.is_number())
                throw std::invalid_argument("config error at eps: expected numbers");
            c.eps_entries.push_back(v.get<double>());
        }

        c.end_time = cfgkey::number(j, "end_time", "end_time");
        c.output_dir = cfgkey::string_or(j, "output_dir", "output_dir", "campaign_out");
        c.validate_hypotheses =
            cfgkey::boolean_or(j, "validate_hypotheses", "validate_hypotheses", true);
        c.label = cfgkey::string_or(j, "label", "label", "campaign");
        c.validate();
        return c;
    }

    json to_json() const {
        json j;
        j["model"] = {{"gamma", gamma}, {"alpha", alpha}};
        j["initial"] = {{"family", family_name(family)},
                        {"far_field",
                         {{"rho_minus", far_field.rho_minus},
                          {"rho_plus", far_field.rho_plus},
                          {"u_minus", far_field.u_minus},
                          {"u_plus", far_field.u_plus}}},
                        {"smoothness_order", smoothness_order},
                        {"amplitude", amplitude},
                        {"center", center},
                        {"width", width},
                        {"rho_bump", rho_bump}};
        j["grid"] = {{"half_length", half_length}, {"cells", cells}};
        j["solver"] = {{"cfl_number", solver.cfl_number},
                       {"diffusion_number", solver.diffusion_number},
                       {"snapshot_interval", solver.snapshot_interval},
                       {"viscous_treatment", viscous_treatment_name(solver.viscous_treatment)}};
        j[eps_is_factors ? "eps_delta1_factors" : "eps"] = eps_entries;
        j["end_time"] = end_time;
        j["output_dir"] = output_dir;
        j["validate_hypotheses"] = validate_hypotheses;
        j["label"] = label;
        return j;
    }

    static ExperimentConfig load(const std::string& path) {
        json j;
        try {
            std::istringstream is(io::read_text_file(path));
            is >> j;
        } catch (const json::exception& e) {
            throw std::invalid_argument("config error at " + path + ": " + e.what());
        }
        return from_json(j);
    }
};

// ============================================================================
// Campaign execution
// ============================================================================

/// The slice of a finished run that bound verification needs.
struct RunSeries {
    double eps = 0.0;
    int cells = 0;
    Termination status = Termination::completed;
    std::vector<DiagnosticsRecord> series;
};

struct RunOutput {
    double eps = 0.0;
    int cells = 0;
    ValidationReport validation;
    RunReport report;

    RunSeries to_series() const { return {eps, cells, report.status, report.series}; }
};

struct CampaignReport {
    ExperimentConfig config;
    double kappa0 = 0.0; ///< min over grids of min rho0
    TheoryBounds bounds;
    std::vector<double> eps_values; ///< resolved regularization strengths
    std::vector<RunOutput> runs;    ///< one per (eps, cells), eps-major order

    std::vector<RunSeries> run_series() const {
        std::vector<RunSeries> out;
        out.reserve(runs.size());
        for (const auto& r : runs) out.push_back(r.to_series());
        return out;
    }
};

/// Resolves the configured eps entries (absolute, or multiples of delta_1)
/// against the theory constants for this config.  Duplicates are rejected;
/// resolved values must lie in (0,1).
inline std::vector<double> resolve_eps(const ExperimentConfig& cfg, const TheoryBounds& bounds) {
    std::vector<double> eps;
    for (std::size_t i = 0; i < cfg.eps_entries.size(); ++i) {
        const double value =
            cfg.eps_is_factors ? cfg.eps_entries[i] * bounds.delta_1 : cfg.eps_entries[i];
        if (!(value > 0.0 && value < 1.0))
            throw std::invalid_argument("config error at eps[" + std::to_string(i) +
                                        "]: resolved value " + io::format_double(value) +
                                        " outside the admissible interval (0,1)");
        eps.push_back(value);
    }
    for (std::size_t i = 0; i < eps.size(); ++i)
        for (std::size_t k = i + 1; k < eps.size(); ++k)
            if (eps[i] == eps[k])
                throw std::invalid_argument("config error at eps: duplicate value " +
                                            io::format_double(eps[i]));
    return eps;
}

/// Runs the full (eps x cells) campaign.  threads = 0 picks the hardware
/// count; each run is deterministic and lands in a fixed slot, so the
/// resulting report is identical for any thread count.
inline CampaignReport run_campaign(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    CampaignReport campaign;
    campaign.config = cfg;
    const GasModel model = cfg.model();

    // One dataset per grid level; kappa0 across the sweep is their worst floor.
    std::vector<InitialData> datasets;
    std::vector<ValidationReport> validations;
    double kappa0 = std::numeric_limits<double>::infinity();
    for (int n_cells : cfg.cells) {
        datasets.push_back(cfg.make_data(n_cells));
        validations.push_back(validate_initial(model, datasets.back()));
        kappa0 = std::min(kappa0, datasets.back().kappa0_lower);
        if (cfg.validate_hypotheses && !validations.back().all_pass()) {
            std::string failing;
            for (const auto& c : validations.back().checks)
                if (!c.pass) failing += (failing.empty() ? "" : ", ") + c.name;
            throw std::invalid_argument("initial data failed hypothesis checks: " + failing +
                                        " (cells=" + std::to_string(n_cells) + ")");
        }
    }
    campaign.kappa0 = kappa0;
    campaign.bounds = theory_bounds(model, cfg.end_time, kappa0);
    campaign.eps_values = resolve_eps(cfg, campaign.bounds);

    struct Job {
        double eps;
        std::size_t grid_index;
    };
    std::vector<Job> jobs;
    for (double e : campaign.eps_values)
        for (std::size_t gi = 0; gi < datasets.size(); ++gi) jobs.push_back({e, gi});
    campaign.runs.resize(jobs.size());

    auto execute = [&](std::size_t ji) {
        const Job& job = jobs[ji];
        SolverConfig sc = cfg.solver;
        sc.eps = job.eps;
        sc.end_time = cfg.end_time;
        sc.snapshot_interval = std::min(cfg.solver.snapshot_interval, cfg.end_time);
        RunOptions opts;
        opts.background_order = cfg.smoothness_order;
        RunOutput& out = campaign.runs[ji];
        out.eps = job.eps;
        out.cells = cfg.cells[job.grid_index];
        out.validation = validations[job.grid_index];
        out.report = run(model, sc, datasets[job.grid_index], opts);
    };

    int pool = threads;
    if (pool <= 0) pool = static_cast<int>(std::thread::hardware_concurrency());
    if (pool < 1) pool = 1;
    pool = std::min<int>(pool, static_cast<int>(jobs.size()));

    if (pool <= 1) {
        for (std::size_t ji = 0; ji < jobs.size(); ++ji) execute(ji);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(pool));
        for (int w = 0; w < pool; ++w)
            workers.emplace_back([&] {
                for (std::size_t ji = next.fetch_add(1); ji < jobs.size(); ji = next.fetch_add(1))
                    execute(ji);
            });
        for (auto& w : workers) w.join();
    }
    return campaign;
}

// ============================================================================
// Verdicts
// ============================================================================

struct VerdictEntry {
    std::string name;  ///< which bound
    std::string scope; ///< which run (or "sweep")
    bool applicable = true;
    bool pass = false;
    bool warning = false; ///< pass, but margin below 1% of the bound
    double theoretical = 0.0;
    double observed = 0.0;
    double margin = 0.0;
    std::string note;
};

struct VerdictSheet {
    std::vector<VerdictEntry> entries;

    bool all_applicable_pass() const {
        return std::all_of(entries.begin(), entries.end(),
                           [](const VerdictEntry& e) { return !e.applicable || e.pass; });
    }
};

namespace detail {
inline std::string eps_scope(double eps) { return "eps=" + io::format_double(eps); }
} // namespace detail

/// Checks the explicit a priori estimates against completed runs:
///   (a) max_t sup_x w <= C_gamma eps^theta          (runs with eps <= eps_gamma)
///   (b) min_{t,x} rho >= kappa_T                    (runs with eps <= delta_1)
///   (c) mu_eps = mu node-wise, regularization inert (runs with eps <  delta_T)
///   (d) BD energies finite and sweep-uniform
///   (e) the minimum-density ODE inequality along each run
/// Physical bounds (a), (b) are zero-slack; the exact-arithmetic claim (c)
/// tolerates 1e-9 relative excess; entries whose eps hypothesis fails are
/// marked not-applicable rather than failed.
/// @throws IncompleteCampaignError if a run with eps <= delta_1 did not complete.
inline VerdictSheet verify_bounds(const GasModel& model, const TheoryBounds& bounds,
                                  std::span<const RunSeries> runs) {
    std::vector<double> missing;
    for (const auto& r : runs)
        if (r.eps <= bounds.delta_1 && r.status != Termination::completed)
            missing.push_back(r.eps);
    if (!missing.empty()) throw IncompleteCampaignError(std::move(missing));

    VerdictSheet sheet;

    for (const auto& r : runs) {
        const bool completed = r.status == Termination::completed;

        // (a) active-potential bound
        {
            VerdictEntry e;
            e.name = "active-potential";
            e.scope = detail::eps_scope(r.eps);
            e.applicable = completed && r.eps <= bounds.eps_gamma;
            e.theoretical = bounds.c_gamma * std::pow(r.eps, model.theta);
            double observed = -std::numeric_limits<double>::infinity();
            for (const auto& rec : r.series) observed = std::max(observed, rec.sup_w);
            e.observed = observed;
            e.margin = e.theoretical - observed;
            e.pass = e.applicable && observed <= e.theoretical;
            e.warning = e.pass && e.margin < 0.01 * std::abs(e.theoretical);
            if (!e.applicable) e.note = completed ? "eps > eps_gamma" : "run not completed";
            sheet.entries.push_back(e);
        }

        // (b) density floor
        {
            VerdictEntry e;
            e.name = "density-floor";
            e.scope = detail::eps_scope(r.eps);
            e.applicable = completed && r.eps <= bounds.delta_1;
            e.theoretical = bounds.kappa_T;
            double observed = std::numeric_limits<double>::infinity();
            for (const auto& rec : r.series) observed = std::min(observed, rec.min_rho);
            e.observed = observed;
            e.margin = observed - bounds.kappa_T;
            e.pass = e.applicable && observed >= bounds.kappa_T;
            e.warning = e.pass && e.margin < 0.01 * bounds.kappa_T;
            if (!e.applicable) e.note = completed ? "eps > delta_1" : "run not completed";
            sheet.entries.push_back(e);
        }

        // (c) de-regularization (exact-arithmetic claim)
        {
            VerdictEntry e;
            e.name = "deregularization";
            e.scope = detail::eps_scope(r.eps);
            e.applicable = completed && r.eps < bounds.delta_T;
            double excess = -std::numeric_limits<double>::infinity();
            double nodes = 0.0;
            for (const auto& rec : r.series) {
                excess = std::max(excess, rec.eps_branch_excess);
                nodes += rec.eps_branch_nodes;
            }
            e.theoretical = 0.0;
            e.observed = excess;
            e.margin = -excess;
            e.pass = e.applicable && excess <= 1e-9;
            e.note = "regularized-branch nodes: " + io::format_double(nodes);
            if (!e.applicable) e.note = completed ? "eps >= delta_T" : "run not completed";
            sheet.entries.push_back(e);
        }

        // (e) minimum-density ODE inequality
        {
            VerdictEntry e;
            e.name = "floor-ode";
            e.scope = detail::eps_scope(r.eps);
            e.applicable = completed && r.eps <= bounds.delta_1 && r.series.size() >= 3;
            if (e.applicable) {
                std::vector<double> rho_min, sup_w, times;
                for (const auto& rec : r.series) {
                    rho_min.push_back(rec.min_rho);
                    sup_w.push_back(rec.sup_w);
                    times.push_back(rec.t);
                }
                const auto ode =
                    density_floor_ode_check(model, bounds, r.eps, rho_min, sup_w, times);
                e.theoretical = -ode.fd_tolerance;
                e.observed = ode.worst_margin;
                e.margin = ode.worst_margin + ode.fd_tolerance;
                e.pass = ode.pass;
                e.note = "fd tolerance " + io::format_double(ode.fd_tolerance);
            } else {
                e.note = completed ? "eps > delta_1 or series too short" : "run not completed";
            }
            sheet.entries.push_back(e);
        }
    }

    // (d) BD-entropy boundedness and sweep uniformity
    {
        VerdictEntry e;
        e.name = "bd-energy-uniformity";
        e.scope = "sweep";
        double max_energy = 0.0;
        double min_peak = std::numeric_limits<double>::infinity();
        double max_peak = 0.0;
        bool finite = true;
        int completed_runs = 0;
        for (const auto& r : runs) {
            if (r.status != Termination::completed) continue;
            ++completed_runs;
            double peak = 0.0;
            for (const auto& rec : r.series) {
                if (!std::isfinite(rec.bd_energy_1) || !std::isfinite(rec.bd_energy_2))
                    finite = false;
                peak = std::max({peak, rec.bd_energy_1, rec.bd_energy_2});
            }
            max_energy = std::max(max_energy, peak);
            min_peak = std::min(min_peak, peak);
            max_peak = std::max(max_peak, peak);
        }
        e.applicable = completed_runs > 0;
        const double ratio = (completed_runs > 0 && min_peak > 0.0)
                                 ? max_peak / min_peak
                                 : std::numeric_limits<double>::quiet_NaN();
        e.theoretical = 10.0; // uniformity-ratio cap
        e.observed = ratio;
        e.margin = 10.0 - ratio;
        e.pass = e.applicable && finite && (!(ratio > 10.0));
        e.note = "max energy " + io::format_double(max_energy);
        sheet.entries.push_back(e);
    }

    return sheet;
}

// ============================================================================
// eps-scaling fit
// ============================================================================

struct EpsScalingFit {
    enum class Status { fitted, degenerate };
    Status status = Status::degenerate;
    double slope = 0.0;
    double intercept = 0.0;      ///< log C of the fitted w_max = C eps^slope
    double rms_residual = 0.0;   ///< of the log-log fit
    double slope_minus_theta = 0.0;
    std::string note;
};

/// Least-squares log-log fit of max_t sup_x w against eps.  Requires at
/// least two samples; samples with nonpositive w are a degenerate (and
/// theoretically welcome) outcome, flagged rather than fitted.
inline EpsScalingFit fit_eps_scaling(const GasModel& model,
                                     std::span<const std::pair<double, double>> eps_and_max_w) {
    if (eps_and_max_w.size() < 2)
        throw InsufficientDataError("fit_eps_scaling: need at least two eps samples");
    EpsScalingFit fit;
    for (const auto& [eps, w] : eps_and_max_w) {
        if (!(w > 0.0)) {
            fit.status = EpsScalingFit::Status::degenerate;
            fit.note = "sup w nonpositive at eps=" + io::format_double(eps) +
                       "; no positive scaling to fit";
            fit.slope_minus_theta = -model.theta;
            return fit;
        }
    }
    const std::size_t n = eps_and_max_w.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [eps, w] : eps_and_max_w) {
        const double x = std::log(eps), y = std::log(w);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30)
        throw InsufficientDataError("fit_eps_scaling: eps samples are not distinct");
    fit.status = EpsScalingFit::Status::fitted;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (const auto& [eps, w] : eps_and_max_w) {
        const double r = std::log(w) - (fit.intercept + fit.slope * std::log(eps));
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    fit.slope_minus_theta = fit.slope - model.theta;
    return fit;
}

// ============================================================================
// Grid refinement and domain doubling
// ============================================================================

struct RefinementResult {
    std::vector<int> cells;
    std::vector<double> change_rho, change_u; ///< L2 difference between levels
    std::vector<double> order_rho, order_u;   ///< log2 ratios of successive changes
    bool exact = false; ///< successive solutions agree to rounding; no order to estimate
    CampaignReport campaign;
};

/// Self-convergence study at the first configured eps: solves on each grid
/// level, measures L2 differences of the final states restricted to the
/// coarser grid, and reports observed orders.
/// Pre: >= 3 grid levels, each doubling the previous (nested nodes).
inline RefinementResult grid_refinement_study(const ExperimentConfig& cfg, int threads = 1) {
    if (cfg.cells.size() < 3)
        throw std::invalid_argument("grid_refinement_study: need at least 3 grid levels");
    for (std::size_t i = 1; i < cfg.cells.size(); ++i)
        if (cfg.cells[i] != 2 * cfg.cells[i - 1])
            throw std::invalid_argument("grid_refinement_study: grids must be nested "
                                        "(each level doubles the cells)");

    ExperimentConfig study = cfg;
    study.eps_entries = {cfg.eps_entries.front()};

    RefinementResult result;
    result.campaign = run_campaign(study, threads);
    result.cells = cfg.cells;

    for (const auto& r : result.campaign.runs)
        if (r.report.status != Termination::completed)
            throw std::runtime_error("grid_refinement_study: run at cells=" +
                                     std::to_string(r.cells) + " did not complete");

    // L2 change between successive levels, fine restricted to coarse nodes.
    double scale = 0.0;
    for (std::size_t lv = 0; lv + 1 < result.campaign.runs.size(); ++lv) {
        const auto& coarse = result.campaign.runs[lv];
        const auto& fine = result.campaign.runs[lv + 1];
        const Grid1D cg = cfg.grid_for(coarse.cells);
        const SimState& cs = coarse.report.final_state;
        const SimState& fs = fine.report.final_state;
        const int n = cg.node_count();
        std::vector<double> drho(static_cast<std::size_t>(n)), du(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            drho[static_cast<std::size_t>(i)] =
                fs.rho[static_cast<std::size_t>(2 * i)] - cs.rho[static_cast<std::size_t>(i)];
            du[static_cast<std::size_t>(i)] =
                fs.u[static_cast<std::size_t>(2 * i)] - cs.u[static_cast<std::size_t>(i)];
        }
        result.change_rho.push_back(l2_norm(drho, cg.dx));
        result.change_u.push_back(l2_norm(du, cg.dx));
        scale = std::max({scale, l2_norm(cs.rho, cg.dx), l2_norm(cs.u, cg.dx)});
    }

    for (double c : result.change_rho)
        if (c <= 1e-13 * scale) result.exact = true;
    for (double c : result.change_u)
        if (c <= 1e-13 * scale) result.exact = true;

    if (!result.exact) {
        for (std::size_t i = 0; i + 1 < result.change_rho.size(); ++i) {
            result.order_rho.push_back(std::log2(result.change_rho[i] / result.change_rho[i + 1]));
            result.order_u.push_back(std::log2(result.change_u[i] / result.change_u[i + 1]));
        }
    }
    return result;
}

struct DomainDoublingResult {
    double max_rel_diff_min_rho = 0.0;
    double max_rel_diff_sup_w = 0.0;
    double max_rel_diff_energy = 0.0;
};

/// Re-runs the first (eps, cells) job on a domain twice as long (same dx)
/// and compares the tracked diagnostics series; small differences certify
/// that the artificial truncation to [-L, L] does not pollute the horizon.
inline DomainDoublingResult domain_doubling_check(const ExperimentConfig& cfg) {
    ExperimentConfig base = cfg;
    base.cells = {cfg.cells.front()};
    base.eps_entries = {cfg.eps_entries.front()};
    ExperimentConfig doubled = base;
    doubled.half_length = 2.0 * cfg.half_length;
    doubled.cells = {2 * cfg.cells.front()};

    const auto run_a = run_campaign(base, 1);
    const auto run_b = run_campaign(doubled, 1);
    const auto& sa = run_a.runs.front().report.series;
    const auto& sb = run_b.runs.front().report.series;
    const std::size_t n = std::min(sa.size(), sb.size());

    DomainDoublingResult out;
    for (std::size_t k = 0; k < n; ++k) {
        out.max_rel_diff_min_rho =
            std::max(out.max_rel_diff_min_rho, std::abs(sa[k].min_rho - sb[k].min_rho) /
                                                   (std::abs(sa[k].min_rho) + 1e-300));
        out.max_rel_diff_sup_w =
            std::max(out.max_rel_diff_sup_w, std::abs(sa[k].sup_w - sb[k].sup_w) /
                                                 (std::abs(sa[k].sup_w) + 1e-300));
        out.max_rel_diff_energy =
            std::max(out.max_rel_diff_energy, std::abs(sa[k].bd_energy_1 - sb[k].bd_energy_1) /
                                                  (std::abs(sa[k].bd_energy_1) + 1e-300));
    }
    return out;
}

// ============================================================================
// Aggregation and persistence
// ============================================================================

inline std::string run_dir_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "run_%03zu", index);
    return std::string("runs/") + buf;
}

/// Deterministic summary: a pure function of the run results (no wall-clock
/// times), so re-aggregation and any thread count reproduce it exactly.
inline json aggregate_summary(const CampaignReport& campaign) {
    json j;
    j["label"] = campaign.config.label;
    j["config"] = campaign.config.to_json();
    j["kappa0"] = campaign.kappa0;
    j["bounds"] = {{"eps_gamma", campaign.bounds.eps_gamma},
                   {"c_gamma", campaign.bounds.c_gamma},
                   {"q_of_gamma", campaign.bounds.q_of_gamma},
                   {"delta_1", campaign.bounds.delta_1},
                   {"kappa_T", campaign.bounds.kappa_T},
                   {"delta_T", campaign.bounds.delta_T},
                   {"horizon", campaign.bounds.horizon}};
    j["eps_values"] = campaign.eps_values;
    j["runs"] = json::array();
    for (std::size_t i = 0; i < campaign.runs.size(); ++i) {
        const auto& r = campaign.runs[i];
        double max_sup_w = -std::numeric_limits<double>::infinity();
        double min_min_rho = std::numeric_limits<double>::infinity();
        double max_e1 = 0.0, max_e2 = 0.0, max_h4_rho = 0.0, max_h4_u = 0.0;
        double branch_nodes = 0.0, max_excess = -std::numeric_limits<double>::infinity();
        double mass_balance_error = 0.0;
        const double mass0 = r.report.series.empty() ? 0.0 : r.report.series.front().mass;
        for (const auto& rec : r.report.series) {
            max_sup_w = std::max(max_sup_w, rec.sup_w);
            min_min_rho = std::min(min_min_rho, rec.min_rho);
            max_e1 = std::max(max_e1, rec.bd_energy_1);
            max_e2 = std::max(max_e2, rec.bd_energy_2);
            max_h4_rho = std::max(max_h4_rho, rec.h4_norm_rho);
            max_h4_u = std::max(max_h4_u, rec.h4_norm_u);
            branch_nodes += rec.eps_branch_nodes;
            max_excess = std::max(max_excess, rec.eps_branch_excess);
            mass_balance_error = std::max(
                mass_balance_error, std::abs((rec.mass - mass0) - rec.mass_flux_integral));
        }
        json rj;
        rj["index"] = i;
        rj["dir"] = run_dir_name(i);
        rj["eps"] = r.eps;
        rj["cells"] = r.cells;
        rj["status"] = termination_name(r.report.status);
        rj["error"] = r.report.error_message;
        rj["snapshots"] = r.report.series.size();
        rj["steps"] = r.report.steps_taken;
        rj["max_sup_w"] = max_sup_w;
        rj["min_min_rho"] = min_min_rho;
        rj["max_bd_energy_1"] = max_e1;
        rj["max_bd_energy_2"] = max_e2;
        rj["max_h4_rho"] = max_h4_rho;
        rj["max_h4_u"] = max_h4_u;
        rj["eps_branch_nodes_total"] = branch_nodes;
        rj["max_eps_branch_excess"] = max_excess;
        rj["mass_balance_error"] = mass_balance_error;
        j["runs"].push_back(std::move(rj));
    }
    return j;
}

inline json validation_to_json(const ValidationReport& v) {
    json j = json::array();
    for (const auto& c : v.checks)
        j.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"observed", c.observed},
                     {"threshold", c.threshold},
                     {"worst_node", c.worst_node}});
    return j;
}

/// Writes snapshot state plus the active potential: columns x, rho, u, w.
inline void write_snapshot_csv(std::ostream& os, const GasModel& m, double eps,
                               const SimState& s, const Grid1D& g) {
    const auto w = active_potential(m, eps, s, g);
    io::CsvTable t;
    t.header = {"x", "rho", "u", "w"};
    for (int i = 0; i < g.node_count(); ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        t.rows.push_back({g.x(i), s.rho[k], s.u[k], w[k]});
    }
    io::write_csv(os, t);
}

/// Persists a campaign:
///   dir/campaign.json                    summary + config echo + run index
///   dir/runs/run_XXX/run.json            per-run metadata and validation
///   dir/runs/run_XXX/initial.csv         x, rho0, u0
///   dir/runs/run_XXX/diagnostics.csv     full diagnostics series
///   dir/runs/run_XXX/snapshots/*.csv     x, rho, u, w per snapshot
/// Refuses a populated directory unless force is set.
inline void write_campaign(const std::filesystem::path& dir, const CampaignReport& campaign,
                           bool force = false) {
    namespace fs = std::filesystem;
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
        throw std::runtime_error("output directory '" + dir.string() +
                                 "' is already populated; pass --force to overwrite");
    fs::create_directories(dir);

    const GasModel model = campaign.config.model();
    json summary = aggregate_summary(campaign);
    io::write_text_file((dir / "campaign.json").string(), summary.dump(2) + "\n");

    for (std::size_t i = 0; i < campaign.runs.size(); ++i) {
        const auto& r = campaign.runs[i];
        const fs::path rdir = dir / run_dir_name(i);
        fs::create_directories(rdir / "snapshots");

        json rj;
        rj["eps"] = r.eps;
        rj["cells"] = r.cells;
        rj["status"] = termination_name(r.report.status);
        rj["error"] = r.report.error_message;
        rj["steps"] = r.report.steps_taken;
        rj["wall_seconds"] = r.report.wall_seconds;
        rj["validation"] = validation_to_json(r.validation);
        rj["solver"] = {{"eps", r.report.config.eps},
                        {"cfl_number", r.report.config.cfl_number},
                        {"diffusion_number", r.report.config.diffusion_number},
                        {"end_time", r.report.config.end_time},
                        {"snapshot_interval", r.report.config.snapshot_interval},
                        {"viscous_treatment",
                         viscous_treatment_name(r.report.config.viscous_treatment)}};
        io::write_text_file((rdir / "run.json").string(), rj.dump(2) + "\n");

        const Grid1D g = campaign.config.grid_for(r.cells);
        {
            std::ofstream os(rdir / "diagnostics.csv", std::ios::binary);
            write_diagnostics_csv(os, r.report.series);
        }
        if (!r.report.snapshots.empty()) {
            InitialData init = InitialData::make(g, r.report.snapshots.front().rho,
                                                 r.report.snapshots.front().u);
            std::ofstream os(rdir / "initial.csv", std::ios::binary);
            write_initial_csv(os, init);
        }
        for (std::size_t si = 0; si < r.report.snapshots.size(); ++si) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "snapshot_%04zu.csv", si);
            std::ofstream os(rdir / "snapshots" / buf, std::ios::binary);
            write_snapshot_csv(os, model, r.eps, r.report.snapshots[si], g);
        }
    }
}

/// The subset of a stored campaign needed to re-verify bounds.
struct StoredCampaign {
    json summary;
    GasModel model;
    double end_time = 0.0;
    double kappa0 = 0.0;
    std::vector<RunSeries> runs;
};

inline StoredCampaign read_campaign(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path summary_path = dir / "campaign.json";
    if (!fs::exists(summary_path))
        throw std::runtime_error("no campaign summary at '" + summary_path.string() + "'");
    StoredCampaign sc;
    std::istringstream is(io::read_text_file(summary_path.string()));
    is >> sc.summary;

    const json& cfg = sc.summary.at("config");
    sc.model = GasModel::make(cfg.at("model").at("gamma").get<double>(),
                              cfg.at("model").at("alpha").get<double>());
    sc.end_time = cfg.at("end_time").get<double>();
    sc.kappa0 = sc.summary.at("kappa0").get<double>();

    for (const auto& rj : sc.summary.at("runs")) {
        RunSeries rs;
        rs.eps = rj.at("eps").get<double>();
        rs.cells = rj.at("cells").get<int>();
        const std::string status = rj.at("status").get<std::string>();
        rs.status = status == "completed"        ? Termination::completed
                    : status == "positivity-loss" ? Termination::positivity_loss
                                                   : Termination::user_abort;
        const fs::path diag = dir / rj.at("dir").get<std::string>() / "diagnostics.csv";
        if (fs::exists(diag)) {
            std::ifstream dis(diag, std::ios::binary);
            rs.series = read_diagnostics_csv(dis);
        }
        sc.runs.push_back(std::move(rs));
    }
    return sc;
}

inline json verdicts_to_json(const VerdictSheet& sheet) {
    json j = json::array();
    for (const auto& e : sheet.entries)
        j.push_back({{"name", e.name},
                     {"scope", e.scope},
                     {"applicable", e.applicable},
                     {"pass", e.pass},
                     {"warning", e.warning},
                     {"theoretical", e.theoretical},
                     {"observed", e.observed},
                     {"margin", e.margin},
                     {"note", e.note}});
    return j;
}

inline std::string format_verdict_table(const VerdictSheet& sheet) {
    std::ostringstream os;
    auto pad = [](std::string s, std::size_t width) {
        if (s.size() < width) s.append(width - s.size(), ' ');
        return s + "  ";
    };
    auto num = [](double v) {
        std::ostringstream ss;
        ss.precision(6);
        ss << v;
        return ss.str();
    };
    os << pad("bound", 22) << pad("scope", 26) << pad("status", 10) << pad("theoretical", 14)
       << pad("observed", 14) << pad("margin", 14) << "note\n";
    os << std::string(118, '-') << '\n';
    for (const auto& e : sheet.entries) {
        const std::string status = !e.applicable ? "n/a"
                                   : !e.pass     ? "FAIL"
                                   : e.warning   ? "pass*"
                                                 : "pass";
        os << pad(e.name, 22) << pad(e.scope, 26) << pad(status, 10) << pad(num(e.theoretical), 14)
           << pad(num(e.observed), 14) << pad(num(e.margin), 14) << e.note << '\n';
    }
    os << std::string(118, '-') << '\n';
    os << (sheet.all_applicable_pass() ? "ALL APPLICABLE BOUNDS HOLD\n" : "BOUND VIOLATIONS FOUND\n");
    return os.str();
}

inline void write_verdicts(const std::filesystem::path& dir, const VerdictSheet& sheet,
                           const json& eps_scaling_fit = json()) {
    json j;
    j["entries"] = verdicts_to_json(sheet);
    j["all_applicable_pass"] = sheet.all_applicable_pass();
    j["eps_scaling_fit"] = eps_scaling_fit;
    io::write_text_file((dir / "verdicts.json").string(), j.dump(2) + "\n");
    io::write_text_file((dir / "verdicts.txt").string(), format_verdict_table(sheet));
}

} // namespace degvis
