// SPDX-License-Identifier: Apache-2.0
//
// Benchmark scenario: array, sources, sweep axes, faults, detector, solver and
// trial count. Stored as JSON; the schema is described in README.md.

#ifndef TCDA_SCENARIO_HPP
#define TCDA_SCENARIO_HPP

#include "tcda/array_sim.hpp"
#include "tcda/pipeline.hpp"
#include "tcda/wcp_als.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tcda
{
    // Bad scenario or input file. key() is the dotted path of the offending
    // entry, empty when the problem is not tied to one key.
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(std::string key, const std::string &what);
        const std::string &key() const noexcept { return key_; }

    private:
        std::string key_;
    };

    // One fixed fault pattern (0-based element indices).
    struct ExplicitFaults
    {
        std::vector<std::size_t> dead_x;
        std::vector<std::size_t> dead_z;

        bool operator==(const ExplicitFaults &) const = default;
    };

    // A sweep over total fault counts, placed uniformly at random per trial.
    // A count n puts n - floor(n * (1 - x_share)) faults on x, the rest on z.
    struct RandomFaults
    {
        std::vector<std::size_t> counts;
        double x_share = 0.5;

        bool operator==(const RandomFaults &) const = default;
    };

    using FaultSpec = std::variant<ExplicitFaults, RandomFaults>;

    std::pair<std::size_t, std::size_t> split_fault_count(std::size_t total, double x_share);

    enum class DetectorKind
    {
        oracle,
        blind,
    };

    struct DetectorSpec
    {
        DetectorKind kind = DetectorKind::oracle;
        BlindDetector blind; // used when kind == blind

        bool operator==(const DetectorSpec &other) const
        {
            return kind == other.kind && blind.gamma == other.blind.gamma && blind.epsilon == other.blind.epsilon;
        }
    };

    // paired: trial t of every cell shares waveforms, noise draws and solver
    // starts (fault placement still depends on the fault cell).
    // per_cell: every (snr, fault, trial) triple has an independent stream.
    enum class Seeding
    {
        paired,
        per_cell,
    };

    struct Scenario
    {
        std::string name = "custom";
        ArrayGeometry geometry;
        SubarrayConfig subarray = SubarrayConfig::defaults_for(10);
        std::vector<SourceParams> sources;
        std::vector<double> snr_db{10.0};
        std::size_t snapshots = 500;
        WaveformModel waveform = WaveformModel::gaussian;
        FaultSpec faults = ExplicitFaults{};
        DetectorSpec detector;
        // solver.seed is ignored; every trial derives its own.
        SolverOptions solver;
        std::size_t trials = 100;
        std::uint64_t seed = 1;
        Seeding seeding = Seeding::paired;
        std::string output = "results";

        // Throws ConfigError naming the first invalid field.
        void validate() const;

        std::size_t fault_cells() const;
        // (x, z) fault counts of a fault cell.
        std::pair<std::size_t, std::size_t> fault_counts(std::size_t fault_index) const;
        // Placement for one trial; random specs draw from placement_seed.
        FaultMask fault_mask(std::size_t fault_index, std::uint64_t placement_seed) const;

        bool operator==(const Scenario &) const = default;
    };

    // Solver settings used by the presets: rank K, 4 finalists out of 30
    // screened starts.
    SolverOptions benchmark_solver(std::size_t rank);

    // Four sources at (azimuth, elevation) (58,66), (67,130), (76,86), (85,105).
    std::vector<SourceParams> reference_sources();

    Scenario parse_scenario(const std::string &text);
    Scenario load_scenario(const std::string &path);
    // Canonical, pretty-printed JSON; parse_scenario(serialize_scenario(s)) == s.
    std::string serialize_scenario(const Scenario &s);
    // 16 hex digits of FNV-1a over the compact canonical JSON.
    std::string scenario_hash(const Scenario &s);

    // ideal, moderate, medium, heavy, very_heavy, snr_sweep
    std::vector<std::string> preset_names();
    Scenario preset_scenario(const std::string &name);

} // namespace tcda

#endif // TCDA_SCENARIO_HPP
