// SPDX-License-Identifier: Apache-2.0

#include "tcda/doa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace tcda
{
    namespace
    {
        // |h[0]| below this fraction of the column norm counts as vanishing.
        constexpr double kMinReference = 1e-12;
        constexpr std::size_t kMaxExhaustiveSources = 8;

        double phase_to_angle_deg(cplx ratio)
        {
            const double c = std::clamp(std::arg(ratio) / std::numbers::pi, -1.0, 1.0);
            return std::acos(c) * 180.0 / std::numbers::pi;
        }
    } // namespace

    ExtractionError::ExtractionError(std::size_t column, const std::string &what)
        : std::runtime_error(what), column_(column)
    {
    }

    std::vector<AngleEstimate> extract_angles(const FactorMatrix &h_hat)
    {
        if (h_hat.rows() != 4)
            throw std::invalid_argument("extract_angles expects a 4 x R angle factor, got " +
                                        std::to_string(h_hat.rows()) + " rows");
        std::vector<AngleEstimate> out;
        out.reserve(static_cast<std::size_t>(h_hat.cols()));
        for (Eigen::Index k = 0; k < h_hat.cols(); ++k)
        {
            const cplx h0 = h_hat(0, k);
            if (!h_hat.col(k).allFinite() || !(std::abs(h0) > kMinReference * h_hat.col(k).norm()))
                throw ExtractionError(static_cast<std::size_t>(k),
                                      "angle extraction failed for column " + std::to_string(k) +
                                          ": reference entry vanishes relative to the column");
            const cplx theta = h_hat(1, k) / h0;
            const cplx phi = h0 / h_hat(2, k); // (h[2]/h[0])^-1
            out.push_back({phase_to_angle_deg(theta), phase_to_angle_deg(phi), static_cast<std::size_t>(k)});
        }
        return out;
    }

    CrossRatios cross_ratios(const FactorMatrix &h_hat, std::size_t column)
    {
        const auto k = static_cast<Eigen::Index>(column);
        if (h_hat.rows() != 4 || k >= h_hat.cols())
            throw std::invalid_argument("cross_ratios: bad factor shape or column");
        return {h_hat(3, k) / h_hat(2, k), h_hat(1, k) / h_hat(3, k)};
    }

    ScoredResult match_and_score(std::span<const AngleEstimate> estimates, std::span<const SourceParams> truth)
    {
        const std::size_t K = truth.size();
        if (estimates.size() != K)
            throw std::invalid_argument("match_and_score: " + std::to_string(estimates.size()) + " estimates for " +
                                        std::to_string(K) + " sources");
        if (K == 0)
            throw std::invalid_argument("match_and_score: no sources");
        if (K > kMaxExhaustiveSources)
            throw std::invalid_argument("match_and_score: exhaustive matching supports at most 8 sources");

        // cost[k][e]: squared error when estimate e is assigned to truth k
        std::vector<double> cost(K * K);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t e = 0; e < K; ++e)
            {
                const double dt = estimates[e].elevation_theta_deg - truth[k].elevation_theta_deg;
                const double dp = estimates[e].azimuth_phi_deg - truth[k].azimuth_phi_deg;
                cost[k * K + e] = dt * dt + dp * dp;
            }

        std::vector<std::size_t> perm(K);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::vector<std::size_t> best = perm;
        double best_cost = std::numeric_limits<double>::infinity();
        do
        {
            double c = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                c += cost[k * K + perm[k]];
            if (c < best_cost)
            {
                best_cost = c;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        ScoredResult out;
        out.assignment = best;
        for (std::size_t k = 0; k < K; ++k)
        {
            const auto &e = estimates[best[k]];
            const double dt = std::abs(e.elevation_theta_deg - truth[k].elevation_theta_deg);
            const double dp = std::abs(e.azimuth_phi_deg - truth[k].azimuth_phi_deg);
            out.elevation_error_deg.push_back(dt);
            out.azimuth_error_deg.push_back(dp);
            out.sum_squared_error += dt * dt + dp * dp;
        }
        out.rmse_deg = std::sqrt(out.sum_squared_error / static_cast<double>(2 * K));
        return out;
    }

    Estimation estimate_from_tensor(const TargetTensorPair &pair, const SolverOptions &opts,
                                    std::optional<std::span<const SourceParams>> truth)
    {
        auto [model, report] = als_solve(pair.t_obs, pair.mask, opts);
        Estimation out;
        out.angles = extract_angles(model.H);
        out.report = std::move(report);
        out.model = std::move(model);
        if (truth)
            out.score = match_and_score(out.angles, *truth);
        return out;
    }

} // namespace tcda
