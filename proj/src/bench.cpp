// SPDX-License-Identifier: Apache-2.0

#include "tcda/bench.hpp"

#include "tcda/seed.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace tcda
{
    namespace
    {
        std::string num(double x)
        {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof buf, x);
            return std::string(buf, res.ptr);
        }

        std::string num(std::size_t x) { return std::to_string(x); }

        template <class T>
        T parse_field(const std::string &field, const char *name)
        {
            T value{};
            const char *end = field.data() + field.size();
            auto res = std::from_chars(field.data(), end, value);
            if (res.ec != std::errc{} || res.ptr != end)
                throw ConfigError(name, "cannot parse \"" + field + "\"");
            return value;
        }

        std::vector<std::string> split_csv(const std::string &line)
        {
            std::vector<std::string> out;
            std::string cur;
            for (char c : line)
            {
                if (c == ',')
                {
                    out.push_back(cur);
                    cur.clear();
                }
                else if (c != '\r' && c != '\n')
                    cur += c;
            }
            out.push_back(cur);
            return out;
        }

        std::string index_list(const std::vector<std::size_t> &v)
        {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i)
                s += (i ? " " : "") + std::to_string(v[i]);
            return s;
        }

        double median(std::vector<double> v)
        {
            if (v.empty())
                return 0.0;
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        }

        TargetTensorPair build_trial_target(const Scenario &s, double snr_db, const FaultMask &faults,
                                            std::uint64_t snapshot_seed)
        {
            SnapshotOptions o;
            o.snapshots = s.snapshots;
            o.snr_db = snr_db;
            o.waveform = s.waveform;
            o.seed = snapshot_seed;
            const auto snaps = generate_snapshots(s.geometry, s.sources, faults, o);
            Detector det = s.detector.kind == DetectorKind::oracle ? Detector{OracleDetector{faults}}
                                                                    : Detector{s.detector.blind};
            return build_target(snaps, s.subarray, det);
        }
    } // namespace

    TrialSeeds trial_seeds(std::uint64_t master, Seeding seeding, std::size_t snr_index, std::size_t fault_index,
                           std::size_t trial_index)
    {
        TrialSeeds t{};
        t.trial = seeding == Seeding::paired ? derive_seed(master, {trial_index})
                                             : derive_seed(master, {snr_index, fault_index, trial_index});
        t.placement = derive_seed(t.trial, {1, fault_index});
        t.snapshots = derive_seed(t.trial, {2});
        t.solver = derive_seed(t.trial, {3});
        return t;
    }

    TrialRecord run_trial(const Scenario &s, std::size_t snr_index, std::size_t fault_index, std::size_t trial)
    {
        if (snr_index >= s.snr_db.size() || fault_index >= s.fault_cells())
            throw std::out_of_range("run_trial: cell index out of range");
        const auto start = std::chrono::steady_clock::now();
        const auto seeds = trial_seeds(s.seed, s.seeding, snr_index, fault_index, trial);
        const FaultMask faults = s.fault_mask(fault_index, seeds.placement);
        const auto pair = build_trial_target(s, s.snr_db[snr_index], faults, seeds.snapshots);

        SolverOptions opts = s.solver;
        opts.seed = seeds.solver;
        const auto est = estimate_from_tensor(pair, opts, std::span<const SourceParams>(s.sources));

        TrialRecord r;
        r.snr_index = snr_index;
        r.fault_index = fault_index;
        r.trial = trial;
        r.seed = seeds.trial;
        r.snr_db = s.snr_db[snr_index];
        r.dead_x = faults.dead_indices_x();
        r.dead_z = faults.dead_indices_z();
        r.missing_fraction = pair.missing_fraction;
        const auto &score = *est.score;
        for (std::size_t k = 0; k < s.sources.size(); ++k)
            r.estimates.push_back(est.angles[score.assignment[k]]);
        r.elevation_error_deg = score.elevation_error_deg;
        r.azimuth_error_deg = score.azimuth_error_deg;
        r.sum_squared_error = score.sum_squared_error;
        r.rmse_deg = score.rmse_deg;
        r.iterations = est.report.iterations;
        r.converged = est.report.converged;
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return r;
    }

    TrialRecord run_single(const Scenario &s)
    {
        if (s.snr_db.size() != 1 || s.fault_cells() != 1)
            throw ConfigError("snr_db", "a single run needs exactly one SNR value and one fault cell");
        return run_trial(s, 0, 0, 0);
    }

    CellSummary summarize_cell(std::span<const TrialRecord> records, std::size_t faults_x, std::size_t faults_z)
    {
        if (records.empty())
            throw std::invalid_argument("summarize_cell: no records");
        CellSummary c;
        c.snr_index = records.front().snr_index;
        c.fault_index = records.front().fault_index;
        c.snr_db = records.front().snr_db;
        c.faults_x = faults_x;
        c.faults_z = faults_z;
        c.trials = records.size();
        double sse = 0.0, missing = 0.0;
        std::size_t terms = 0, converged = 0;
        std::vector<double> rmses;
        for (const auto &r : records)
        {
            sse += r.sum_squared_error;
            terms += 2 * r.estimates.size();
            missing += r.missing_fraction;
            converged += r.converged ? 1 : 0;
            rmses.push_back(r.rmse_deg);
        }
        c.pooled_rmse_deg = std::sqrt(sse / static_cast<double>(terms));
        c.median_rmse_deg = median(std::move(rmses));
        c.convergence_rate = static_cast<double>(converged) / static_cast<double>(records.size());
        c.mean_missing_fraction = missing / static_cast<double>(records.size());
        return c;
    }

    std::string cell_csv_header()
    {
        return "snr_index,fault_index,snr_db,faults_x,faults_z,trials,pooled_rmse_deg,median_rmse_deg,"
               "convergence_rate,mean_missing_fraction";
    }

    std::string format_cell_row(const CellSummary &c)
    {
        return num(c.snr_index) + "," + num(c.fault_index) + "," + num(c.snr_db) + "," + num(c.faults_x) + "," +
               num(c.faults_z) + "," + num(c.trials) + "," + num(c.pooled_rmse_deg) + "," +
               num(c.median_rmse_deg) + "," + num(c.convergence_rate) + "," + num(c.mean_missing_fraction);
    }

    CellSummary parse_cell_row(const std::string &line)
    {
        const auto f = split_csv(line);
        if (f.size() != 10)
            throw ConfigError("csv", "expected 10 fields, got " + std::to_string(f.size()));
        CellSummary c;
        c.snr_index = parse_field<std::size_t>(f[0], "snr_index");
        c.fault_index = parse_field<std::size_t>(f[1], "fault_index");
        c.snr_db = parse_field<double>(f[2], "snr_db");
        c.faults_x = parse_field<std::size_t>(f[3], "faults_x");
        c.faults_z = parse_field<std::size_t>(f[4], "faults_z");
        c.trials = parse_field<std::size_t>(f[5], "trials");
        c.pooled_rmse_deg = parse_field<double>(f[6], "pooled_rmse_deg");
        c.median_rmse_deg = parse_field<double>(f[7], "median_rmse_deg");
        c.convergence_rate = parse_field<double>(f[8], "convergence_rate");
        c.mean_missing_fraction = parse_field<double>(f[9], "mean_missing_fraction");
        return c;
    }

    std::string trial_csv_header(std::size_t sources)
    {
        std::string h = "snr_index,fault_index,trial,seed,snr_db,dead_x,dead_z,missing_fraction,rmse_deg,"
                        "iterations,converged";
        for (std::size_t k = 0; k < sources; ++k)
            h += ",elevation_error_deg_" + std::to_string(k) + ",azimuth_error_deg_" + std::to_string(k);
        return h;
    }

    std::string format_trial_row(const TrialRecord &r)
    {
        std::string s = num(r.snr_index) + "," + num(r.fault_index) + "," + num(r.trial) + "," +
                        std::to_string(r.seed) + "," + num(r.snr_db) + "," + index_list(r.dead_x) + "," +
                        index_list(r.dead_z) + "," + num(r.missing_fraction) + "," + num(r.rmse_deg) + "," +
                        num(r.iterations) + "," + (r.converged ? "1" : "0");
        for (std::size_t k = 0; k < r.elevation_error_deg.size(); ++k)
            s += "," + num(r.elevation_error_deg[k]) + "," + num(r.azimuth_error_deg[k]);
        return s;
    }

    MonteCarloResult run_monte_carlo(const Scenario &s, std::size_t workers, const CellSink &sink)
    {
        s.validate();
        const std::size_t faults = s.fault_cells();
        const std::size_t cells = s.snr_db.size() * faults;
        const std::size_t trials = s.trials;
        const std::size_t total = cells * trials;

        MonteCarloResult result;
        std::vector<std::optional<TrialRecord>> slots(total);
        std::vector<std::size_t> done(cells, 0);
        std::size_t flushed = 0;
        std::mutex mu;
        std::atomic<std::size_t> next{0};
        std::atomic<bool> stop{false};
        std::exception_ptr error;

        auto flush_ready = [&] {
            while (flushed < cells && done[flushed] == trials)
            {
                std::vector<TrialRecord> recs;
                recs.reserve(trials);
                for (std::size_t t = 0; t < trials; ++t)
                    recs.push_back(std::move(*slots[flushed * trials + t]));
                const auto [fx, fz] = s.fault_counts(flushed % faults);
                const auto cell = summarize_cell(recs, fx, fz);
                if (sink)
                    sink(cell, recs);
                result.cells.push_back(cell);
                for (auto &r : recs)
                    result.records.push_back(std::move(r));
                ++flushed;
            }
        };

        auto work = [&] {
            while (!stop.load())
            {
                const std::size_t task = next.fetch_add(1);
                if (task >= total)
                    return;
                const std::size_t cell = task / trials;
                try
                {
                    auto rec = run_trial(s, cell / faults, cell % faults, task % trials);
                    std::lock_guard lock(mu);
                    slots[task] = std::move(rec);
                    ++done[cell];
                    flush_ready();
                }
                catch (...)
                {
                    std::lock_guard lock(mu);
                    if (!error)
                        error = std::current_exception();
                    stop.store(true);
                    return;
                }
            }
        };

        const std::size_t n = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(total, 1));
        if (n == 1)
            work();
        else
        {
            std::vector<std::thread> pool;
            pool.reserve(n);
            for (std::size_t i = 0; i < n; ++i)
                pool.emplace_back(work);
            for (auto &t : pool)
                t.join();
        }
        if (error)
            std::rethrow_exception(error);
        return result;
    }

    void write_cell_csv(std::ostream &out, const Scenario &s, std::span<const CellSummary> cells)
    {
        out << "# scenario " << scenario_hash(s) << "\n" << cell_csv_header() << "\n";
        for (const auto &c : cells)
            out << format_cell_row(c) << "\n";
    }

    void write_rmse_grid(std::ostream &out, const Scenario &s, std::span<const CellSummary> cells)
    {
        const std::size_t faults = s.fault_cells();
        out << "# pooled RMSE (deg); rows: SNR (dB); columns: total faults\n";
        out << "snr_db";
        for (std::size_t f = 0; f < faults; ++f)
        {
            const auto [fx, fz] = s.fault_counts(f);
            out << " faults_" << fx + fz;
        }
        out << "\n";
        for (std::size_t i = 0; i < s.snr_db.size(); ++i)
        {
            out << num(s.snr_db[i]);
            for (std::size_t f = 0; f < faults; ++f)
            {
                const std::size_t idx = i * faults + f;
                out << " " << (idx < cells.size() ? num(cells[idx].pooled_rmse_deg) : std::string("nan"));
            }
            out << "\n";
        }
    }

    void write_scatter_csv(std::ostream &out, const Scenario &s, std::span<const TrialRecord> records)
    {
        out << "trial,source,true_azimuth_deg,true_elevation_deg,est_azimuth_deg,est_elevation_deg\n";
        for (const auto &r : records)
            for (std::size_t k = 0; k < r.estimates.size(); ++k)
                out << r.trial << "," << k << "," << num(s.sources[k].azimuth_phi_deg) << ","
                    << num(s.sources[k].elevation_theta_deg) << "," << num(r.estimates[k].azimuth_phi_deg) << ","
                    << num(r.estimates[k].elevation_theta_deg) << "\n";
    }

    CompletionResult complete_tensor(const TargetTensorPair &pair, const SolverOptions &opts)
    {
        auto [model, report] = als_solve(pair.t_obs, pair.mask, opts);
        CompletionResult out;
        out.reconstruction = rank1_sum(model);
        if (pair.t_obs.dim(1) == 4)
            out.angles = extract_angles(model.H);
        out.model = std::move(model);
        out.report = std::move(report);
        return out;
    }

    MaskReport mask_report(const MaskTensor &mask)
    {
        if (mask.shape().size() != 3)
            throw std::invalid_argument("mask_report expects an order-3 mask");
        MaskReport r;
        r.shape = mask.shape();
        r.observed = mask.observed_count();
        r.missing_fraction = mask.missing_fraction();
        const std::size_t I = r.shape[0], J = r.shape[1], K = r.shape[2];
        const std::size_t dims[3] = {I, J, K};
        for (std::size_t mode = 0; mode < 3; ++mode)
        {
            FiberHistogram h;
            h.counts.assign(dims[mode] + 1, 0);
            // Fibers are indexed by the two fixed coordinates.
            const std::size_t a = mode == 0 ? J : I;
            const std::size_t b = mode == 2 ? J : K;
            for (std::size_t p = 0; p < a; ++p)
                for (std::size_t q = 0; q < b; ++q)
                {
                    std::size_t missing = 0;
                    for (std::size_t n = 0; n < dims[mode]; ++n)
                    {
                        std::size_t i, j, k;
                        if (mode == 0)
                            i = n, j = p, k = q;
                        else if (mode == 1)
                            i = p, j = n, k = q;
                        else
                            i = p, j = q, k = n;
                        missing += mask[i + I * (j + J * k)] ? 0 : 1;
                    }
                    ++h.counts[missing];
                }
            r.fibers.push_back(std::move(h));
        }
        return r;
    }

    MaskConfusion mask_confusion(const MaskTensor &oracle, const MaskTensor &blind)
    {
        if (oracle.shape() != blind.shape())
            throw std::invalid_argument("mask_confusion: shape mismatch");
        MaskConfusion c;
        for (std::size_t k = 0; k < oracle.size(); ++k)
        {
            const bool o = oracle[k] != 0, b = blind[k] != 0;
            if (o && b)
                ++c.both_valid;
            else if (o)
                ++c.blind_only_missing;
            else if (b)
                ++c.oracle_only_missing;
            else
                ++c.both_missing;
        }
        return c;
    }

    std::vector<CellMaskReport> inspect_scenario_masks(const Scenario &s)
    {
        s.validate();
        std::vector<CellMaskReport> out;
        for (std::size_t i = 0; i < s.snr_db.size(); ++i)
            for (std::size_t f = 0; f < s.fault_cells(); ++f)
            {
                const auto seeds = trial_seeds(s.seed, s.seeding, i, f, 0);
                const FaultMask faults = s.fault_mask(f, seeds.placement);
                const auto pair = build_trial_target(s, s.snr_db[i], faults, seeds.snapshots);
                const auto oracle = propagate_mask_oracle(faults, s.subarray);
                const auto blind = detect_mask(pair.t_obs, s.detector.blind.gamma, s.detector.blind.epsilon);
                CellMaskReport c;
                c.snr_index = i;
                c.fault_index = f;
                c.dead_x = faults.dead_indices_x();
                c.dead_z = faults.dead_indices_z();
                c.report = mask_report(pair.mask);
                c.report.confusion = mask_confusion(oracle, blind);
                out.push_back(std::move(c));
            }
        return out;
    }

    void print_mask_report(std::ostream &out, const MaskReport &r)
    {
        const std::size_t total = shape_numel(r.shape);
        out << "shape " << r.shape[0] << "x" << r.shape[1] << "x" << r.shape[2] << ", observed " << r.observed << "/"
            << total << ", missing " << num(100.0 * r.missing_fraction) << "%\n";
        for (std::size_t m = 0; m < r.fibers.size(); ++m)
        {
            out << "mode-" << m + 1 << " fibers by missing entries:";
            const auto &c = r.fibers[m].counts;
            for (std::size_t n = 0; n < c.size(); ++n)
                if (c[n])
                    out << " " << n << ":" << c[n];
            out << "\n";
        }
        if (r.confusion)
        {
            const auto &c = *r.confusion;
            out << "blind vs oracle: both valid " << c.both_valid << ", both missing " << c.both_missing
                << ", blind-only missing " << c.blind_only_missing << ", oracle-only missing "
                << c.oracle_only_missing << "\n";
        }
    }

} // namespace tcda
