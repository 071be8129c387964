// SPDX-License-Identifier: Apache-2.0
//
// Weighted CP decomposition of an incomplete third-order tensor by
// alternating row-wise least squares.
//
// Objective:  || W .* ([[G, H, P]] - T_obs) ||_F^2
//
// Each row of the factor being updated solves its own weighted normal
// equations. For row i of G with z_(j,k) = h_j .* p_k (the matching row of
// khatri_rao(P, H)):
//
//   g_i^T (sum_{w_ijk=1} z z^H + lambda I) = sum_{w_ijk=1} t_ijk z^H
//
// which is the (T_i W_i Z*)(Z^T W_i Z*)^-1 form with an added ridge. H uses
// z = g_i .* p_k and P uses z = g_i .* h_j.

#ifndef TCDA_WCP_ALS_HPP
#define TCDA_WCP_ALS_HPP

#include "tcda/tensor.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace tcda
{
    enum class CPMode
    {
        g = 1,
        h = 2,
        p = 3,
    };

    struct SolverOptions
    {
        std::size_t rank = 4;
        std::size_t max_iters = 500;
        double rel_fit_tol = 1e-8;
        // Ridge on every normal matrix. Unset means 1e-8 * mean |t_obs|^2 over
        // observed entries.
        std::optional<double> lambda_reg;
        std::size_t restarts = 3;
        // Screening: when screen_starts > restarts, that many random starts run
        // for screen_sweeps sweeps each and only the `restarts` lowest-residual
        // ones continue to convergence. 0 disables screening.
        std::size_t screen_starts = 0;
        std::size_t screen_sweeps = 20;
        std::uint64_t seed = 1;

        void validate() const;
        bool operator==(const SolverOptions &) const = default;
    };

    struct SolveReport
    {
        std::size_t iterations = 0; // sweeps of the chosen restart
        std::size_t total_iterations = 0;
        double residual = 0.0; // weighted_fit of the returned model
        bool converged = false;
        std::size_t restart_index = 0; // start index (seed stream) of the chosen run
        // One entry per start carried to convergence, in start order.
        std::vector<double> restart_residuals;
        std::vector<bool> restart_converged;
        // Rows skipped (no observations or singular normal matrix) in the last sweep.
        std::size_t degenerate_rows = 0;
        double lambda_used = 0.0;
    };

    struct ModeUpdate
    {
        FactorMatrix factor;
        // Rows left unchanged: fully masked, or singular normal matrix with lambda = 0.
        std::vector<std::size_t> degenerate_rows;
    };

    // Entries i.i.d. standard circular complex Gaussian (E|x|^2 = 1).
    CPModel init_factors(const Shape &shape, std::size_t rank, std::uint64_t seed);

    ModeUpdate update_mode(const ComplexTensor &t_obs, const MaskTensor &mask, const CPModel &model, CPMode mode,
                           double lambda_reg);

    // || mask .* (rank1_sum(model) - t_obs) ||_F
    double weighted_fit(const ComplexTensor &t_obs, const MaskTensor &mask, const CPModel &model);

    double default_lambda(const ComplexTensor &t_obs, const MaskTensor &mask);

    // Runs ALS from opts.restarts random starts (after optional screening) and
    // keeps the one with the smallest final residual. Start r is drawn with
    // init_factors(shape, rank, derive_seed(opts.seed, {r})). Stops a start when the relative change of the
    // weighted fit falls below rel_fit_tol, when the fit reaches the rounding
    // floor (1e-12 of the observed norm), or at max_iters. Factors are not
    // normalized.
    std::pair<CPModel, SolveReport> als_solve(const ComplexTensor &t_obs, const MaskTensor &mask,
                                              const SolverOptions &opts);

    // Same iteration from a caller-supplied start; a single run, no restarts.
    std::pair<CPModel, SolveReport> als_refine(const ComplexTensor &t_obs, const MaskTensor &mask, CPModel start,
                                               const SolverOptions &opts);

} // namespace tcda

#endif // TCDA_WCP_ALS_HPP
