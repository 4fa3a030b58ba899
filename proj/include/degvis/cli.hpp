/// @file cli.hpp
/// @brief Command-line front end: simulate / sweep / verify / refine / report.
///
/// Exit codes (shared by all subcommands unless noted):
///   0  success (for sweep and verify: every applicable bound verdict holds)
///   1  configuration, usage, or I/O error
///   2  simulate only: density positivity lost (artifacts are still written)
///   3  campaign incomplete (runs missing or not completed)
///   4  campaign complete but at least one bound verdict failed
///
/// The environment variable DEGVIS_THREADS caps campaign parallelism
/// (0 or unset = one worker per hardware thread).

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "harness.hpp"

namespace degvis::cli {

namespace exit_code {
constexpr int ok = 0;
constexpr int config_error = 1;
constexpr int positivity_loss = 2;
constexpr int incomplete = 3;
constexpr int verdict_failure = 4;
} // namespace exit_code

namespace detail {

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::vector<double> eps_override;
    std::vector<int> cells_override;
    double end_time_override = -1.0;
    bool force = false;
    bool verbose = false;
    bool no_validate = false;
};

inline void add_common_options(CLI::App* cmd, CommonOptions& opt, bool needs_config) {
    auto* config = cmd->add_option("--config", opt.config_path, "experiment config (JSON)");
    if (needs_config) config->required();
    cmd->add_option("--out", opt.out_dir, "output directory (default: config output_dir)");
    cmd->add_option("--eps", opt.eps_override,
                    "override the regularization strengths (repeatable)");
    cmd->add_option("--cells", opt.cells_override, "override the grid cell counts (repeatable)");
    cmd->add_option("--end-time", opt.end_time_override, "override the horizon T");
    cmd->add_flag("--force", opt.force, "overwrite a populated output directory");
    cmd->add_flag("--verbose", opt.verbose, "per-snapshot progress on stdout");
    cmd->add_flag("--no-validate", opt.no_validate,
                  "skip the initial-data hypothesis checks (unsupported regime)");
}

inline ExperimentConfig load_config(const CommonOptions& opt) {
    ExperimentConfig cfg = ExperimentConfig::load(opt.config_path);
    if (!opt.eps_override.empty()) {
        cfg.eps_is_factors = false;
        cfg.eps_entries = opt.eps_override;
    }
    if (!opt.cells_override.empty()) cfg.cells = opt.cells_override;
    if (opt.end_time_override > 0.0) cfg.end_time = opt.end_time_override;
    if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
    if (opt.no_validate) cfg.validate_hypotheses = false;
    cfg.validate();
    return cfg;
}

inline int thread_budget() {
    const char* env = std::getenv("DEGVIS_THREADS");
    if (env == nullptr || *env == '\0') return 0; // auto
    try {
        const long long v = io::parse_int(env);
        if (v < 0) throw std::runtime_error("negative");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config error at DEGVIS_THREADS: expected a "
                                    "nonnegative integer, got '" + std::string(env) + "'");
    }
}

inline RunOptions verbose_observer(bool verbose) {
    RunOptions opts;
    if (verbose)
        opts.on_snapshot = [](const SimState& s, const DiagnosticsRecord& rec) {
            std::cout << "  t=" << io::format_double(s.t) << "  min_rho="
                      << io::format_double(rec.min_rho) << "  sup_w="
                      << io::format_double(rec.sup_w) << '\n';
            return true;
        };
    return opts;
}

inline void print_campaign_lines(const CampaignReport& campaign) {
    std::cout << "theory constants: eps_gamma=" << io::format_double(campaign.bounds.eps_gamma)
              << " C_gamma=" << io::format_double(campaign.bounds.c_gamma)
              << " delta_1=" << io::format_double(campaign.bounds.delta_1)
              << " kappa_T=" << io::format_double(campaign.bounds.kappa_T)
              << " delta_T=" << io::format_double(campaign.bounds.delta_T) << '\n';
    for (std::size_t i = 0; i < campaign.runs.size(); ++i) {
        const auto& r = campaign.runs[i];
        std::cout << run_dir_name(i) << ": eps=" << io::format_double(r.eps)
                  << " cells=" << r.cells << " status=" << termination_name(r.report.status);
        if (!r.report.error_message.empty()) std::cout << " (" << r.report.error_message << ")";
        std::cout << '\n';
    }
}

inline json fit_to_json(const EpsScalingFit& fit, const GasModel& model) {
    json j;
    j["status"] = fit.status == EpsScalingFit::Status::fitted ? "fitted" : "degenerate";
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["rms_residual"] = fit.rms_residual;
    j["theta"] = model.theta;
    j["slope_minus_theta"] = fit.slope_minus_theta;
    j["note"] = fit.note;
    return j;
}

// ----------------------------------------------------------------------------
// simulate
// ----------------------------------------------------------------------------

inline int cmd_simulate(const CommonOptions& opt) {
    ExperimentConfig cfg = load_config(opt);
    // A single run: first eps entry, first grid level.
    cfg.eps_entries = {cfg.eps_entries.front()};
    cfg.cells = {cfg.cells.front()};

    if (opt.verbose) std::cout << "simulate: " << cfg.label << '\n';
    CampaignReport campaign;
    {
        // run_campaign with a verbose observer requires a bespoke path; the
        // single run is executed directly so progress can stream.
        campaign.config = cfg;
        const GasModel model = cfg.model();
        InitialData data = cfg.make_data(cfg.cells.front());
        ValidationReport validation = validate_initial(model, data);
        if (cfg.validate_hypotheses && !validation.all_pass()) {
            for (const auto& c : validation.checks)
                if (!c.pass)
                    std::cerr << "initial data check failed: " << c.name << " (observed "
                              << io::format_double(c.observed) << ", threshold "
                              << io::format_double(c.threshold) << ", node " << c.worst_node
                              << ")\n";
            return exit_code::config_error;
        }
        campaign.kappa0 = data.kappa0_lower;
        campaign.bounds = theory_bounds(model, cfg.end_time, campaign.kappa0);
        campaign.eps_values = resolve_eps(cfg, campaign.bounds);

        SolverConfig sc = cfg.solver;
        sc.eps = campaign.eps_values.front();
        sc.end_time = cfg.end_time;
        sc.snapshot_interval = std::min(cfg.solver.snapshot_interval, cfg.end_time);

        RunOptions opts = verbose_observer(opt.verbose);
        opts.background_order = cfg.smoothness_order;
        RunOutput out;
        out.eps = sc.eps;
        out.cells = cfg.cells.front();
        out.validation = validation;
        out.report = run(model, sc, data, opts);
        campaign.runs.push_back(std::move(out));
    }

    write_campaign(cfg.output_dir, campaign, opt.force);
    print_campaign_lines(campaign);
    std::cout << "wrote " << cfg.output_dir << '\n';

    if (campaign.runs.front().report.status == Termination::positivity_loss) {
        std::cerr << campaign.runs.front().report.error_message << '\n';
        return exit_code::positivity_loss;
    }
    return exit_code::ok;
}

// ----------------------------------------------------------------------------
// sweep
// ----------------------------------------------------------------------------

inline int cmd_sweep(const CommonOptions& opt) {
    ExperimentConfig cfg = load_config(opt);
    const int threads = thread_budget();
    if (opt.verbose)
        std::cout << "sweep: " << cfg.label << " (" << cfg.eps_entries.size() << " eps x "
                  << cfg.cells.size() << " grids, threads="
                  << (threads == 0 ? std::string("auto") : std::to_string(threads)) << ")\n";

    const CampaignReport campaign = run_campaign(cfg, threads);
    write_campaign(cfg.output_dir, campaign, opt.force);
    print_campaign_lines(campaign);

    std::vector<double> incomplete;
    for (const auto& r : campaign.runs)
        if (r.report.status != Termination::completed) incomplete.push_back(r.eps);
    if (!incomplete.empty()) {
        std::cerr << "campaign incomplete; unfinished runs at eps = {";
        for (std::size_t i = 0; i < incomplete.size(); ++i)
            std::cerr << (i ? ", " : "") << io::format_double(incomplete[i]);
        std::cerr << "}\n";
        return exit_code::incomplete;
    }

    const GasModel model = cfg.model();
    const auto series = campaign.run_series();
    const VerdictSheet sheet = verify_bounds(model, campaign.bounds, series);

    std::vector<std::pair<double, double>> points;
    for (const auto& r : series) {
        double max_w = -std::numeric_limits<double>::infinity();
        for (const auto& rec : r.series) max_w = std::max(max_w, rec.sup_w);
        points.emplace_back(r.eps, max_w);
    }
    json fit_json;
    if (points.size() >= 2) {
        const EpsScalingFit fit = fit_eps_scaling(model, points);
        fit_json = fit_to_json(fit, model);
        if (fit.status == EpsScalingFit::Status::fitted)
            std::cout << "eps-scaling fit: slope=" << io::format_double(fit.slope)
                      << " (theta=" << io::format_double(model.theta) << ")\n";
        else
            std::cout << "eps-scaling fit: degenerate (" << fit.note << ")\n";
    }

    write_verdicts(cfg.output_dir, sheet, fit_json);
    std::cout << format_verdict_table(sheet);
    return sheet.all_applicable_pass() ? exit_code::ok : exit_code::verdict_failure;
}

// ----------------------------------------------------------------------------
// verify
// ----------------------------------------------------------------------------

inline int cmd_verify(const std::string& dir) {
    const StoredCampaign stored = read_campaign(dir);
    const TheoryBounds bounds = theory_bounds(stored.model, stored.end_time, stored.kappa0);
    VerdictSheet sheet;
    try {
        sheet = verify_bounds(stored.model, bounds, stored.runs);
    } catch (const IncompleteCampaignError& e) {
        std::cerr << e.what() << '\n';
        return exit_code::incomplete;
    }
    write_verdicts(dir, sheet, json());
    std::cout << format_verdict_table(sheet);
    return sheet.all_applicable_pass() ? exit_code::ok : exit_code::verdict_failure;
}

// ----------------------------------------------------------------------------
// refine
// ----------------------------------------------------------------------------

inline int cmd_refine(const CommonOptions& opt) {
    ExperimentConfig cfg = load_config(opt);
    const RefinementResult result = grid_refinement_study(cfg, thread_budget());

    std::cout << "grid refinement at eps=" << io::format_double(result.campaign.eps_values.front())
              << ", T=" << io::format_double(cfg.end_time) << '\n';
    std::cout << "cells pair        change_rho      change_u        order_rho  order_u\n";
    for (std::size_t i = 0; i < result.change_rho.size(); ++i) {
        std::cout << result.cells[i] << "->" << result.cells[i + 1] << "    "
                  << io::format_double(result.change_rho[i]) << "    "
                  << io::format_double(result.change_u[i]);
        if (!result.exact && i + 1 < result.change_rho.size())
            std::cout << "    " << io::format_double(result.order_rho[i]) << "    "
                      << io::format_double(result.order_u[i]);
        std::cout << '\n';
    }
    if (result.exact) std::cout << "solutions agree to rounding; order reported as exact\n";

    if (!opt.out_dir.empty() || !cfg.output_dir.empty()) {
        const std::string dir = cfg.output_dir;
        write_campaign(dir, result.campaign, opt.force);
        json rj;
        rj["cells"] = result.cells;
        rj["change_rho"] = result.change_rho;
        rj["change_u"] = result.change_u;
        rj["order_rho"] = result.order_rho;
        rj["order_u"] = result.order_u;
        rj["exact"] = result.exact;
        io::write_text_file((std::filesystem::path(dir) / "refinement.json").string(),
                            rj.dump(2) + "\n");
        std::cout << "wrote " << dir << '\n';
    }
    return exit_code::ok;
}

// ----------------------------------------------------------------------------
// report
// ----------------------------------------------------------------------------

inline int cmd_report(const std::string& dir) {
    namespace fs = std::filesystem;
    const StoredCampaign stored = read_campaign(dir);
    const GasModel model = stored.model;
    const TheoryBounds bounds = theory_bounds(model, stored.end_time, stored.kappa0);

    const fs::path plots = fs::path(dir) / "plots";
    fs::create_directories(plots);

    // Per-run time series (with the Gronwall envelope alongside sup_w).
    for (std::size_t i = 0; i < stored.runs.size(); ++i) {
        const auto& r = stored.runs[i];
        if (r.series.size() < 2) continue;
        std::vector<double> times, rho_at, sup_w;
        for (const auto& rec : r.series) {
            times.push_back(rec.t);
            rho_at.push_back(rec.rho_at_sup_w);
            sup_w.push_back(rec.sup_w);
        }
        const auto env = gronwall_envelope(model, r.eps, sup_w.front(), rho_at, times);
        io::CsvTable t;
        t.header = {"t", "sup_w", "gronwall_envelope", "min_rho", "bd_energy_1", "bd_energy_2"};
        for (std::size_t k = 0; k < r.series.size(); ++k)
            t.rows.push_back({times[k], sup_w[k], env.envelope[k], r.series[k].min_rho,
                              r.series[k].bd_energy_1, r.series[k].bd_energy_2});
        char buf[48];
        std::snprintf(buf, sizeof(buf), "run_%03zu_timeseries.csv", i);
        std::ofstream os(plots / buf, std::ios::binary);
        io::write_csv(os, t);
    }

    // Sweep-level scaling data.
    {
        io::CsvTable t;
        t.header = {"eps", "max_sup_w", "closed_form_bound", "min_min_rho", "kappa_T"};
        for (const auto& r : stored.runs) {
            if (r.series.empty()) continue;
            double max_w = -std::numeric_limits<double>::infinity();
            double min_rho = std::numeric_limits<double>::infinity();
            for (const auto& rec : r.series) {
                max_w = std::max(max_w, rec.sup_w);
                min_rho = std::min(min_rho, rec.min_rho);
            }
            t.rows.push_back({r.eps, max_w, bounds.c_gamma * std::pow(r.eps, model.theta),
                              min_rho, bounds.kappa_T});
        }
        std::ofstream os(plots / "scaling_vs_eps.csv", std::ios::binary);
        io::write_csv(os, t);
    }

    // Plot-script stub (best effort; requires matplotlib).
    io::write_text_file((plots / "plot.py").string(), R"PY(#!/usr/bin/env python3
"""Quick-look plots for a campaign directory (run from plots/)."""
import csv
import glob

import matplotlib.pyplot as plt


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


fig, axes = plt.subplots(1, 3, figsize=(15, 4))
for path in sorted(glob.glob("run_*_timeseries.csv")):
    d = read(path)
    label = path.replace("_timeseries.csv", "")
    axes[0].plot(d["t"], d["sup_w"], label=label)
    axes[0].plot(d["t"], d["gronwall_envelope"], ls="--", alpha=0.5)
    axes[1].plot(d["t"], d["min_rho"], label=label)
    axes[2].plot(d["t"], d["bd_energy_1"], label=label)
axes[0].set(xlabel="t", ylabel="sup w (+ envelope)")
axes[1].set(xlabel="t", ylabel="min rho")
axes[2].set(xlabel="t", ylabel="BD energy E1")
for ax in axes:
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("campaign.png", dpi=150)
print("wrote campaign.png")
)PY");

    VerdictSheet sheet;
    try {
        sheet = verify_bounds(model, bounds, stored.runs);
        write_verdicts(dir, sheet, json());
        std::cout << format_verdict_table(sheet);
    } catch (const IncompleteCampaignError& e) {
        std::cout << "verdicts unavailable: " << e.what() << '\n';
    }
    std::cout << "wrote " << plots.string() << '\n';
    return exit_code::ok;
}

} // namespace detail

/// Entry point; args includes the program name.  Never throws: every error
/// is mapped onto the documented exit codes.
inline int run(std::vector<std::string> args) {
    CLI::App app{"1D barotropic flow with degenerate regularized viscosity: "
                 "simulation and a priori bound verification"};
    app.require_subcommand(1);

    detail::CommonOptions sim_opt, sweep_opt, refine_opt;
    std::string verify_dir, report_dir;

    auto* sim = app.add_subcommand("simulate", "run a single simulation and write artifacts");
    detail::add_common_options(sim, sim_opt, true);
    auto* sweep = app.add_subcommand("sweep", "run the eps sweep and verify the bounds");
    detail::add_common_options(sweep, sweep_opt, true);
    auto* verify = app.add_subcommand("verify", "recompute bound verdicts for a stored campaign");
    verify->add_option("dir", verify_dir, "campaign directory")->required();
    auto* refine = app.add_subcommand("refine", "grid-refinement (self-convergence) study");
    detail::add_common_options(refine, refine_opt, true);
    auto* report = app.add_subcommand("report", "emit plot data and verdicts for a campaign");
    report->add_option("dir", report_dir, "campaign directory")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return exit_code::config_error;
    }

    try {
        if (sim->parsed()) return detail::cmd_simulate(sim_opt);
        if (sweep->parsed()) return detail::cmd_sweep(sweep_opt);
        if (verify->parsed()) return detail::cmd_verify(verify_dir);
        if (refine->parsed()) return detail::cmd_refine(refine_opt);
        if (report->parsed()) return detail::cmd_report(report_dir);
        std::cerr << "no subcommand selected\n";
        return exit_code::config_error;
    } catch (const PositivityLossError& e) {
        std::cerr << e.what() << '\n';
        return exit_code::positivity_loss;
    } catch (const IncompleteCampaignError& e) {
        std::cerr << e.what() << '\n';
        return exit_code::incomplete;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return exit_code::config_error;
    }
}

inline int run(int argc, char** argv) {
    return run(std::vector<std::string>(argv, argv + argc));
}

} // namespace degvis::cli
