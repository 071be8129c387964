// SPDX-License-Identifier: Apache-2.0
//
// Trial runner, Monte Carlo aggregation and the CSV/plot outputs of the CLI.

#ifndef TCDA_BENCH_HPP
#define TCDA_BENCH_HPP

#include "tcda/doa.hpp"
#include "tcda/scenario.hpp"
#include "tcda/tensor_io.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tcda
{
    // per_cell: trial = derive_seed(master, {snr index, fault index, trial index}).
    // paired:   trial = derive_seed(master, {trial index}).
    // placement = derive_seed(trial, {1, fault index}), snapshots =
    // derive_seed(trial, {2}), solver = derive_seed(trial, {3}).
    struct TrialSeeds
    {
        std::uint64_t trial;
        std::uint64_t placement;
        std::uint64_t snapshots;
        std::uint64_t solver;
    };
    TrialSeeds trial_seeds(std::uint64_t master, Seeding seeding, std::size_t snr_index, std::size_t fault_index,
                           std::size_t trial_index);

    struct TrialRecord
    {
        std::size_t snr_index = 0;
        std::size_t fault_index = 0;
        std::size_t trial = 0;
        std::uint64_t seed = 0;
        double snr_db = 0.0;
        std::vector<std::size_t> dead_x;
        std::vector<std::size_t> dead_z;
        double missing_fraction = 0.0;
        // estimates[k] is the estimate matched to source k.
        std::vector<AngleEstimate> estimates;
        std::vector<double> elevation_error_deg;
        std::vector<double> azimuth_error_deg;
        double sum_squared_error = 0.0;
        double rmse_deg = 0.0;
        std::size_t iterations = 0;
        bool converged = false;
        double wall_seconds = 0.0;
    };

    TrialRecord run_trial(const Scenario &s, std::size_t snr_index, std::size_t fault_index, std::size_t trial);

    // Trial 0 of a scenario with one SNR value and one fault cell.
    TrialRecord run_single(const Scenario &s);

    struct CellSummary
    {
        std::size_t snr_index = 0;
        std::size_t fault_index = 0;
        double snr_db = 0.0;
        std::size_t faults_x = 0;
        std::size_t faults_z = 0;
        std::size_t trials = 0;
        // sqrt of the mean squared error over sources, both angles and trials
        double pooled_rmse_deg = 0.0;
        double median_rmse_deg = 0.0;
        double convergence_rate = 0.0;
        double mean_missing_fraction = 0.0;

        bool operator==(const CellSummary &) const = default;
    };

    CellSummary summarize_cell(std::span<const TrialRecord> records, std::size_t faults_x, std::size_t faults_z);

    // Cell CSV schema; numbers use the shortest round-trip representation.
    std::string cell_csv_header();
    std::string format_cell_row(const CellSummary &c);
    // Throws ConfigError on a malformed row.
    CellSummary parse_cell_row(const std::string &line);

    std::string trial_csv_header(std::size_t sources);
    std::string format_trial_row(const TrialRecord &r);

    struct MonteCarloResult
    {
        std::vector<CellSummary> cells;   // snr-major, then fault cell
        std::vector<TrialRecord> records; // same order, trials ascending
    };

    // Called once per finished cell, in cell order, with that cell's records.
    using CellSink = std::function<void(const CellSummary &, std::span<const TrialRecord>)>;

    // Runs every (snr, fault, trial) on `workers` threads. The output does not
    // depend on the worker count. If a trial throws, the remaining trials are
    // abandoned, every cell finished before it has already reached the sink,
    // and the exception is rethrown.
    MonteCarloResult run_monte_carlo(const Scenario &s, std::size_t workers, const CellSink &sink = {});

    // Writes "# scenario <hash>" followed by the cell CSV.
    void write_cell_csv(std::ostream &out, const Scenario &s, std::span<const CellSummary> cells);
    // Grid layout: one row per SNR, one pooled-RMSE column per fault cell.
    void write_rmse_grid(std::ostream &out, const Scenario &s, std::span<const CellSummary> cells);
    // One row per (trial, source): true and estimated angle pairs.
    void write_scatter_csv(std::ostream &out, const Scenario &s, std::span<const TrialRecord> records);

    struct CompletionResult
    {
        CPModel model;
        SolveReport report;
        ComplexTensor reconstruction;
        std::vector<AngleEstimate> angles; // empty unless the second mode has length 4
    };

    CompletionResult complete_tensor(const TargetTensorPair &pair, const SolverOptions &opts);

    struct FiberHistogram
    {
        // counts[n] = number of mode fibers with exactly n missing entries
        std::vector<std::size_t> counts;
    };

    struct MaskConfusion
    {
        std::size_t both_valid = 0;
        std::size_t blind_only_missing = 0; // oracle valid, blind missing
        std::size_t oracle_only_missing = 0; // oracle missing, blind valid
        std::size_t both_missing = 0;
    };

    struct MaskReport
    {
        Shape shape;
        std::size_t observed = 0;
        double missing_fraction = 0.0;
        std::vector<FiberHistogram> fibers; // one per mode
        std::optional<MaskConfusion> confusion;
    };

    MaskReport mask_report(const MaskTensor &mask);
    MaskConfusion mask_confusion(const MaskTensor &oracle, const MaskTensor &blind);

    struct CellMaskReport
    {
        std::size_t snr_index = 0;
        std::size_t fault_index = 0;
        std::vector<std::size_t> dead_x;
        std::vector<std::size_t> dead_z;
        MaskReport report; // of the mask the scenario's detector produces
    };

    // Trial 0 of every cell: the detector's mask, with blind-vs-oracle
    // confusion computed on the same tensor.
    std::vector<CellMaskReport> inspect_scenario_masks(const Scenario &s);

    void print_mask_report(std::ostream &out, const MaskReport &r);

} // namespace tcda

#endif // TCDA_BENCH_HPP
