// SPDX-License-Identifier: Apache-2.0
//
// Paired 2D direction extraction from the angle factor H (4 x R) and scoring.

#ifndef TCDA_DOA_HPP
#define TCDA_DOA_HPP

#include "tcda/array_sim.hpp"
#include "tcda/pipeline.hpp"
#include "tcda/wcp_als.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace tcda
{
    struct AngleEstimate
    {
        double elevation_theta_deg = 0.0;
        double azimuth_phi_deg = 0.0;
        std::size_t column = 0;

        bool operator==(const AngleEstimate &) const = default;
    };

    // Raised when a column of H has a vanishing reference entry h[0] (relative to
    // the column norm) or a non-finite entry.
    class ExtractionError : public std::runtime_error
    {
    public:
        ExtractionError(std::size_t column, const std::string &what);
        std::size_t column() const noexcept { return column_; }

    private:
        std::size_t column_;
    };

    // Theta = h[1]/h[0], Phi = (h[2]/h[0])^-1, angle = acos(clamp(arg/pi, -1, 1)).
    std::vector<AngleEstimate> extract_angles(const FactorMatrix &h_hat);

    // Diagnostic cross ratios of one column: h[3]/h[2] (another Theta estimate)
    // and h[1]/h[3] (another Phi estimate).
    struct CrossRatios
    {
        cplx theta_alt;
        cplx phi_alt;
    };
    CrossRatios cross_ratios(const FactorMatrix &h_hat, std::size_t column);

    struct ScoredResult
    {
        // Indexed by truth source: error of the estimate assigned to it.
        std::vector<double> elevation_error_deg;
        std::vector<double> azimuth_error_deg;
        // assignment[k] = index into the estimate list matched to truth k
        std::vector<std::size_t> assignment;
        double sum_squared_error = 0.0;
        // sqrt(sum_squared_error / (2K))
        double rmse_deg = 0.0;
    };

    // Minimum total squared error assignment over all permutations (K <= 8).
    ScoredResult match_and_score(std::span<const AngleEstimate> estimates, std::span<const SourceParams> truth);

    struct Estimation
    {
        std::vector<AngleEstimate> angles;
        SolveReport report;
        CPModel model;
        std::optional<ScoredResult> score;
    };

    Estimation estimate_from_tensor(const TargetTensorPair &pair, const SolverOptions &opts,
                                    std::optional<std::span<const SourceParams>> truth = std::nullopt);

} // namespace tcda

#endif // TCDA_DOA_HPP
