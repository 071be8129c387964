// SPDX-License-Identifier: Apache-2.0
//
// tcda: simulate, monte-carlo, complete, inspect-mask.
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include "tcda/bench.hpp"
#include "tcda/scenario.hpp"
#include "tcda/tensor_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{
    constexpr int kOk = 0;
    constexpr int kInputError = 2;
    constexpr int kNumericalError = 3;

    struct ScenarioFlags
    {
        std::string config;
        std::string preset;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> trials;
        bool full = false;
        std::size_t workers = 1;
        std::string out;
    };

    void add_scenario_flags(CLI::App *cmd, ScenarioFlags &f)
    {
        cmd->add_option("--config", f.config, "Scenario file (JSON)");
        cmd->add_option("--preset", f.preset,
                        "Built-in scenario: ideal, moderate, medium, heavy, very_heavy, snr_sweep");
        cmd->add_option("--seed", f.seed, "Master seed (overrides the scenario)");
        cmd->add_option("--trials", f.trials, "Trials per cell (overrides the scenario)");
        cmd->add_flag("--full", f.full, "1000 trials per cell");
        cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
        cmd->add_option("--out", f.out, "Output directory (overrides the scenario)");
    }

    tcda::Scenario resolve_scenario(const ScenarioFlags &f)
    {
        if (f.config.empty() == f.preset.empty())
            throw tcda::ConfigError("", "give exactly one of --config or --preset");
        tcda::Scenario s = f.config.empty() ? tcda::preset_scenario(f.preset) : tcda::load_scenario(f.config);
        if (f.seed)
            s.seed = *f.seed;
        if (f.full)
            s.trials = 1000;
        if (f.trials)
            s.trials = *f.trials;
        if (!f.out.empty())
            s.output = f.out;
        s.validate();
        return s;
    }

    fs::path prepare_dir(const std::string &dir)
    {
        fs::path p(dir);
        std::error_code ec;
        fs::create_directories(p, ec);
        if (ec)
            throw tcda::ConfigError("output", "cannot create " + dir + ": " + ec.message());
        return p;
    }

    std::ofstream open_out(const fs::path &p)
    {
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw tcda::ConfigError("output", "cannot write " + p.string());
        return out;
    }

    void write_text(const fs::path &p, const std::string &text)
    {
        auto out = open_out(p);
        out << text;
    }

    std::string index_set(const std::vector<std::size_t> &v)
    {
        std::string out = "{";
        for (std::size_t i = 0; i < v.size(); ++i)
            out += (i ? "," : "") + std::to_string(v[i]);
        return out + "}";
    }

    json factor_json(const tcda::FactorMatrix &f)
    {
        json rows = json::array();
        for (Eigen::Index i = 0; i < f.rows(); ++i)
        {
            json row = json::array();
            for (Eigen::Index r = 0; r < f.cols(); ++r)
                row.push_back({f(i, r).real(), f(i, r).imag()});
            rows.push_back(row);
        }
        return rows;
    }

    json report_json(const tcda::SolveReport &r)
    {
        return {{"iterations", r.iterations},
                {"total_iterations", r.total_iterations},
                {"residual", r.residual},
                {"converged", r.converged},
                {"restart_index", r.restart_index},
                {"restart_residuals", r.restart_residuals},
                {"degenerate_rows", r.degenerate_rows},
                {"lambda", r.lambda_used}};
    }

    int cmd_simulate(const ScenarioFlags &f, bool save_target)
    {
        tcda::Scenario s = resolve_scenario(f);
        if (!f.trials && !f.full)
            s.trials = 1;
        if (s.snr_db.size() != 1 || s.fault_cells() != 1)
            throw tcda::ConfigError("snr_db", "simulate needs exactly one SNR value and one fault cell; use "
                                              "monte-carlo for sweeps");
        const auto dir = prepare_dir(s.output);
        write_text(dir / "scenario.json", tcda::serialize_scenario(s));

        const auto mc = tcda::run_monte_carlo(s, f.workers);
        {
            auto out = open_out(dir / "scatter.csv");
            tcda::write_scatter_csv(out, s, mc.records);
        }
        {
            auto out = open_out(dir / "trials.csv");
            out << tcda::trial_csv_header(s.sources.size()) << "\n";
            for (const auto &r : mc.records)
                out << tcda::format_trial_row(r) << "\n";
        }
        if (save_target)
        {
            const auto seeds = tcda::trial_seeds(s.seed, s.seeding, 0, 0, 0);
            const auto faults = s.fault_mask(0, seeds.placement);
            tcda::SnapshotOptions o;
            o.snapshots = s.snapshots;
            o.snr_db = s.snr_db[0];
            o.waveform = s.waveform;
            o.seed = seeds.snapshots;
            const auto snaps = tcda::generate_snapshots(s.geometry, s.sources, faults, o);
            tcda::Detector det = s.detector.kind == tcda::DetectorKind::oracle
                                     ? tcda::Detector{tcda::OracleDetector{faults}}
                                     : tcda::Detector{s.detector.blind};
            tcda::write_target_file((dir / "target.bin").string(), tcda::build_target(snaps, s.subarray, det),
                                    s.sources.size());
        }

        const auto &first = mc.records.front();
        std::cout << "scenario " << s.name << " (" << tcda::scenario_hash(s) << "), SNR " << s.snr_db[0]
                  << " dB, dead x " << index_set(first.dead_x) << " z " << index_set(first.dead_z) << "\n";
        std::cout << "missing fraction " << 100.0 * first.missing_fraction << "%\n";
        if (s.trials == 1)
        {
            for (std::size_t k = 0; k < s.sources.size(); ++k)
                std::cout << "source " << k << ": true (az " << s.sources[k].azimuth_phi_deg << ", el "
                          << s.sources[k].elevation_theta_deg << ")  est (az " << first.estimates[k].azimuth_phi_deg
                          << ", el " << first.estimates[k].elevation_theta_deg << ")\n";
        }
        const auto &c = mc.cells.front();
        std::cout << "trials " << c.trials << ", pooled RMSE " << c.pooled_rmse_deg << " deg, median RMSE "
                  << c.median_rmse_deg << " deg, converged " << 100.0 * c.convergence_rate << "%\n";
        std::cout << "wrote " << dir.string() << "\n";
        return kOk;
    }

    int cmd_monte_carlo(const ScenarioFlags &f)
    {
        const tcda::Scenario s = resolve_scenario(f);
        const auto dir = prepare_dir(s.output);
        write_text(dir / "scenario.json", tcda::serialize_scenario(s));

        auto cells_out = open_out(dir / "cells.csv");
        auto trials_out = open_out(dir / "trials.csv");
        cells_out << "# scenario " << tcda::scenario_hash(s) << "\n" << tcda::cell_csv_header() << "\n";
        trials_out << "# scenario " << tcda::scenario_hash(s) << "\n"
                   << tcda::trial_csv_header(s.sources.size()) << "\n";
        cells_out.flush();
        trials_out.flush();

        const std::size_t total_cells = s.snr_db.size() * s.fault_cells();
        const auto t0 = std::chrono::steady_clock::now();
        double trial_seconds = 0.0;
        auto sink = [&](const tcda::CellSummary &c, std::span<const tcda::TrialRecord> recs) {
            cells_out << tcda::format_cell_row(c) << "\n";
            for (const auto &r : recs)
            {
                trials_out << tcda::format_trial_row(r) << "\n";
                trial_seconds += r.wall_seconds;
            }
            cells_out.flush();
            trials_out.flush();
            std::cerr << "cell " << c.snr_index * s.fault_cells() + c.fault_index + 1 << "/" << total_cells
                      << ": snr " << c.snr_db << " dB, faults " << c.faults_x + c.faults_z << ", pooled RMSE "
                      << c.pooled_rmse_deg << " deg\n";
        };
        const auto mc = tcda::run_monte_carlo(s, f.workers, sink);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        {
            auto out = open_out(dir / "rmse_grid.dat");
            tcda::write_rmse_grid(out, s, mc.cells);
        }
        write_text(dir / "timing.json", json{{"wall_seconds", wall},
                                             {"trial_seconds", trial_seconds},
                                             {"workers", f.workers},
                                             {"trials", mc.records.size()}}
                                                .dump(2) +
                                            "\n");
        std::cout << "wrote " << mc.cells.size() << " cells (" << mc.records.size() << " trials) to "
                  << dir.string() << " in " << wall << " s\n";
        return kOk;
    }

    int cmd_complete(const std::string &input, std::optional<std::size_t> rank, std::uint64_t seed,
                     std::size_t restarts, std::string out_dir)
    {
        const auto file = tcda::read_target_file(input);
        tcda::SolverOptions opts;
        if (rank)
            opts.rank = *rank;
        else if (file.rank_hint)
            opts.rank = *file.rank_hint;
        else
            throw tcda::ConfigError("rank", "input has no rank hint; pass --rank");
        opts.seed = seed;
        opts.restarts = restarts;
        try
        {
            opts.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw tcda::ConfigError("solver", e.what());
        }

        const auto res = tcda::complete_tensor(file.pair, opts);
        if (out_dir.empty())
            out_dir = "completion";
        const auto dir = prepare_dir(out_dir);

        tcda::TargetTensorPair recon{res.reconstruction, tcda::MaskTensor(res.reconstruction.shape(), 1),
                                     file.pair.config, 0.0};
        tcda::write_target_file((dir / "reconstruction.bin").string(), recon, opts.rank);
        write_text(dir / "factors.json",
                   json{{"G", factor_json(res.model.G)}, {"H", factor_json(res.model.H)}, {"P", factor_json(res.model.P)}}
                           .dump() +
                       "\n");
        json report = report_json(res.report);
        json angles = json::array();
        for (const auto &a : res.angles)
            angles.push_back({{"column", a.column},
                              {"elevation_deg", a.elevation_theta_deg},
                              {"azimuth_deg", a.azimuth_phi_deg}});
        report["angles"] = angles;
        report["missing_fraction"] = file.pair.missing_fraction;
        write_text(dir / "report.json", report.dump(2) + "\n");

        std::cout << "rank " << opts.rank << ", residual " << res.report.residual << ", sweeps "
                  << res.report.iterations << ", converged " << (res.report.converged ? "yes" : "no") << "\n";
        for (const auto &a : res.angles)
            std::cout << "column " << a.column << ": el " << a.elevation_theta_deg << ", az " << a.azimuth_phi_deg
                      << "\n";
        std::cout << "wrote " << dir.string() << "\n";
        return kOk;
    }

    int cmd_inspect(const ScenarioFlags &f, const std::string &input)
    {
        if (!input.empty())
        {
            if (!f.config.empty() || !f.preset.empty())
                throw tcda::ConfigError("", "give either --input or a scenario, not both");
            const auto file = tcda::read_target_file(input);
            tcda::print_mask_report(std::cout, tcda::mask_report(file.pair.mask));
            return kOk;
        }
        const auto s = resolve_scenario(f);
        for (const auto &c : tcda::inspect_scenario_masks(s))
        {
            std::cout << "snr " << s.snr_db[c.snr_index] << " dB, dead x " << index_set(c.dead_x) << " z "
                      << index_set(c.dead_z) << " (" << (s.detector.kind == tcda::DetectorKind::oracle ? "oracle" : "blind")
                      << " detector)\n";
            tcda::print_mask_report(std::cout, c.report);
        }
        return kOk;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Fault-tolerant 2D DOA estimation by incomplete tensor decomposition"};
    app.require_subcommand(1);

    ScenarioFlags sim_flags, mc_flags, insp_flags;
    bool save_target = false;
    auto *sim = app.add_subcommand("simulate", "Run trials of a single scenario cell and write scatter data");
    add_scenario_flags(sim, sim_flags);
    sim->add_flag("--save-target", save_target, "Also write the first trial's target tensor (target.bin)");

    auto *mc = app.add_subcommand("monte-carlo", "Sweep SNR and fault counts; write per-cell RMSE tables");
    add_scenario_flags(mc, mc_flags);

    std::string input, comp_out;
    std::optional<std::size_t> rank;
    std::uint64_t comp_seed = 1;
    std::size_t restarts = 3;
    auto *comp = app.add_subcommand("complete", "Complete a saved target tensor with weighted CP-ALS");
    comp->add_option("input", input, "Target tensor file")->required();
    comp->add_option("--rank", rank, "CP rank (default: rank hint stored in the file)");
    comp->add_option("--seed", comp_seed, "Seed for the random starts");
    comp->add_option("--restarts", restarts, "Random starts")->check(CLI::PositiveNumber);
    comp->add_option("--out", comp_out, "Output directory (default: completion)");

    std::string insp_input;
    auto *insp = app.add_subcommand("inspect-mask", "Report missing fraction, fiber loss and detector agreement");
    add_scenario_flags(insp, insp_flags);
    insp->add_option("--input", insp_input, "Target tensor file instead of a scenario");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try
    {
        if (*sim)
            return cmd_simulate(sim_flags, save_target);
        if (*mc)
            return cmd_monte_carlo(mc_flags);
        if (*comp)
            return cmd_complete(input, rank, comp_seed, restarts, comp_out);
        if (*insp)
            return cmd_inspect(insp_flags, insp_input);
    }
    catch (const tcda::ConfigError &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    catch (const std::logic_error &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    }
    return kOk;
}
