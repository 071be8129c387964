// SPDX-License-Identifier: Apache-2.0

#include "tcda/wcp_als.hpp"

#include "tcda/seed.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace tcda
{
    namespace
    {
        using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

        void check_problem(const ComplexTensor &t, const MaskTensor &w, const CPModel &model)
        {
            if (t.order() != 3)
                throw std::invalid_argument("weighted CP expects an order-3 tensor");
            if (w.shape() != t.shape())
                throw std::invalid_argument("mask shape does not match tensor shape");
            if (model.shape() != t.shape())
                throw std::invalid_argument("CP model shape does not match tensor shape");
            if (model.H.cols() != model.G.cols() || model.P.cols() != model.G.cols())
                throw std::invalid_argument("CP model factors disagree on rank");
        }

        // Relative pivot below which a normal matrix is treated as singular.
        constexpr double kSingularPivot = 1e-13;
    } // namespace

    void SolverOptions::validate() const
    {
        if (rank < 1)
            throw std::invalid_argument("solver rank must be at least 1");
        if (!(rel_fit_tol > 0.0))
            throw std::invalid_argument("rel_fit_tol must be positive");
        if (max_iters < 1)
            throw std::invalid_argument("max_iters must be at least 1");
        if (restarts < 1)
            throw std::invalid_argument("restarts must be at least 1");
        if (screen_starts > 0 && screen_sweeps < 1)
            throw std::invalid_argument("screen_sweeps must be at least 1 when screening is enabled");
        if (lambda_reg && !(*lambda_reg >= 0.0))
            throw std::invalid_argument("lambda_reg must be non-negative");
    }

    CPModel init_factors(const Shape &shape, std::size_t rank, std::uint64_t seed)
    {
        if (rank < 1)
            throw std::invalid_argument("init_factors: rank must be at least 1");
        if (shape.size() != 3)
            throw std::invalid_argument("init_factors: expected a third-order shape");
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
        auto draw = [&](std::size_t rows) {
            FactorMatrix f(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rank));
            for (Eigen::Index c = 0; c < f.cols(); ++c)
                for (Eigen::Index r = 0; r < f.rows(); ++r)
                {
                    const double re = normal(rng);
                    const double im = normal(rng);
                    f(r, c) = cplx{re, im};
                }
            return f;
        };
        CPModel m;
        m.G = draw(shape[0]);
        m.H = draw(shape[1]);
        m.P = draw(shape[2]);
        return m;
    }

    ModeUpdate update_mode(const ComplexTensor &t_obs, const MaskTensor &mask, const CPModel &model, CPMode mode,
                           double lambda_reg)
    {
        check_problem(t_obs, mask, model);
        if (!(lambda_reg >= 0.0))
            throw std::invalid_argument("update_mode: lambda_reg must be non-negative");

        const std::size_t I = t_obs.dim(0), J = t_obs.dim(1), K = t_obs.dim(2);
        const auto R = static_cast<std::size_t>(model.rank());
        const RowMajor G = model.G, H = model.H, P = model.P;

        const FactorMatrix &current = mode == CPMode::g ? model.G : (mode == CPMode::h ? model.H : model.P);
        const std::size_t rows = static_cast<std::size_t>(current.rows());

        // Per-row normal matrices N_r = sum conj(z) z^T and right-hand sides
        // b_r = sum conj(z) t, so that N_r x = b_r gives the row.
        std::vector<cplx> normal(rows * R * R, cplx{0.0, 0.0});
        std::vector<cplx> rhs(rows * R, cplx{0.0, 0.0});
        std::vector<std::size_t> counts(rows, 0);
        std::vector<cplx> z(R);

        const auto data = t_obs.data();
        const auto bits = mask.bits();
        std::size_t lin = 0;
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t i = 0; i < I; ++i, ++lin)
                {
                    if (!bits[lin])
                        continue;
                    std::size_t row;
                    const cplx *a;
                    const cplx *b;
                    switch (mode)
                    {
                    case CPMode::g:
                        row = i, a = H.row(static_cast<Eigen::Index>(j)).data(),
                        b = P.row(static_cast<Eigen::Index>(k)).data();
                        break;
                    case CPMode::h:
                        row = j, a = G.row(static_cast<Eigen::Index>(i)).data(),
                        b = P.row(static_cast<Eigen::Index>(k)).data();
                        break;
                    default:
                        row = k, a = G.row(static_cast<Eigen::Index>(i)).data(),
                        b = H.row(static_cast<Eigen::Index>(j)).data();
                        break;
                    }
                    for (std::size_t r = 0; r < R; ++r)
                        z[r] = a[r] * b[r];
                    cplx *nr = &normal[row * R * R];
                    cplx *br = &rhs[row * R];
                    const cplx t = data[lin];
                    for (std::size_t r = 0; r < R; ++r)
                    {
                        const cplx zc = std::conj(z[r]);
                        br[r] += zc * t;
                        // Hermitian: fill the upper triangle, mirror later.
                        for (std::size_t s = r; s < R; ++s)
                            nr[r * R + s] += zc * z[s];
                    }
                    ++counts[row];
                }

        ModeUpdate out{current, {}};
        const auto Ri = static_cast<Eigen::Index>(R);
        Eigen::MatrixXcd A(Ri, Ri);
        Eigen::VectorXcd bvec(Ri);
        for (std::size_t row = 0; row < rows; ++row)
        {
            if (counts[row] == 0)
            {
                out.degenerate_rows.push_back(row);
                continue;
            }
            const cplx *nr = &normal[row * R * R];
            for (std::size_t r = 0; r < R; ++r)
            {
                for (std::size_t s = r; s < R; ++s)
                {
                    A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = nr[r * R + s];
                    A(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r)) = std::conj(nr[r * R + s]);
                }
                A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r)) += lambda_reg;
                bvec(static_cast<Eigen::Index>(r)) = rhs[row * R + r];
            }
            Eigen::LDLT<Eigen::MatrixXcd> ldlt(A);
            const auto d = ldlt.vectorD().cwiseAbs();
            const double dmax = d.maxCoeff();
            if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || d.minCoeff() <= kSingularPivot * dmax)
            {
                out.degenerate_rows.push_back(row);
                continue;
            }
            const Eigen::VectorXcd x = ldlt.solve(bvec);
            if (!x.allFinite())
            {
                out.degenerate_rows.push_back(row);
                continue;
            }
            out.factor.row(static_cast<Eigen::Index>(row)) = x.transpose();
        }
        return out;
    }

    double weighted_fit(const ComplexTensor &t_obs, const MaskTensor &mask, const CPModel &model)
    {
        check_problem(t_obs, mask, model);
        const std::size_t I = t_obs.dim(0), J = t_obs.dim(1), K = t_obs.dim(2);
        const auto R = static_cast<std::size_t>(model.rank());
        const RowMajor G = model.G, H = model.H, P = model.P;
        std::vector<cplx> hp(R);

        double s = 0.0;
        std::size_t lin = 0;
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < J; ++j)
            {
                const cplx *h = H.row(static_cast<Eigen::Index>(j)).data();
                const cplx *p = P.row(static_cast<Eigen::Index>(k)).data();
                for (std::size_t r = 0; r < R; ++r)
                    hp[r] = h[r] * p[r];
                for (std::size_t i = 0; i < I; ++i, ++lin)
                {
                    if (!mask[lin])
                        continue;
                    const cplx *g = G.row(static_cast<Eigen::Index>(i)).data();
                    cplx v{0.0, 0.0};
                    for (std::size_t r = 0; r < R; ++r)
                        v += g[r] * hp[r];
                    s += std::norm(v - t_obs[lin]);
                }
            }
        return std::sqrt(s);
    }

    double default_lambda(const ComplexTensor &t_obs, const MaskTensor &mask)
    {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < t_obs.size(); ++k)
            if (mask[k])
            {
                s += std::norm(t_obs[k]);
                ++n;
            }
        return n ? 1e-8 * s / static_cast<double>(n) : 0.0;
    }

    namespace
    {
        double observed_norm(const ComplexTensor &t, const MaskTensor &w)
        {
            double s = 0.0;
            for (std::size_t k = 0; k < t.size(); ++k)
                if (w[k])
                    s += std::norm(t[k]);
            return std::sqrt(s);
        }

        struct RunResult
        {
            CPModel model;
            std::size_t iterations = 0;
            double residual = 0.0;
            bool converged = false;
            std::size_t degenerate_rows = 0;
        };

        RunResult run_als(const ComplexTensor &t, const MaskTensor &w, CPModel model, const SolverOptions &opts,
                          double lambda, double floor)
        {
            RunResult res;
            double prev = weighted_fit(t, w, model);
            for (std::size_t it = 1; it <= opts.max_iters; ++it)
            {
                std::size_t degenerate = 0;
                for (auto mode : {CPMode::g, CPMode::h, CPMode::p})
                {
                    auto upd = update_mode(t, w, model, mode, lambda);
                    degenerate += upd.degenerate_rows.size();
                    switch (mode)
                    {
                    case CPMode::g: model.G = std::move(upd.factor); break;
                    case CPMode::h: model.H = std::move(upd.factor); break;
                    case CPMode::p: model.P = std::move(upd.factor); break;
                    }
                }
                const double fit = weighted_fit(t, w, model);
                res.iterations = it;
                res.degenerate_rows = degenerate;
                if (!std::isfinite(fit) || !model.all_finite())
                    throw std::runtime_error("ALS produced non-finite factors at sweep " + std::to_string(it));
                if (fit <= floor || std::abs(prev - fit) <= opts.rel_fit_tol * prev)
                {
                    res.converged = true;
                    prev = fit;
                    break;
                }
                prev = fit;
            }
            res.residual = prev;
            res.model = std::move(model);
            return res;
        }
    } // namespace

    std::pair<CPModel, SolveReport> als_refine(const ComplexTensor &t_obs, const MaskTensor &mask, CPModel start,
                                               const SolverOptions &opts)
    {
        opts.validate();
        check_problem(t_obs, mask, start);
        const double lambda = opts.lambda_reg.value_or(default_lambda(t_obs, mask));
        const double floor = 1e-12 * observed_norm(t_obs, mask);
        auto run = run_als(t_obs, mask, std::move(start), opts, lambda, floor);
        SolveReport rep;
        rep.iterations = rep.total_iterations = run.iterations;
        rep.residual = run.residual;
        rep.converged = run.converged;
        rep.restart_residuals = {run.residual};
        rep.restart_converged = {run.converged};
        rep.degenerate_rows = run.degenerate_rows;
        rep.lambda_used = lambda;
        return {std::move(run.model), rep};
    }

    std::pair<CPModel, SolveReport> als_solve(const ComplexTensor &t_obs, const MaskTensor &mask,
                                              const SolverOptions &opts)
    {
        opts.validate();
        if (t_obs.order() != 3)
            throw std::invalid_argument("als_solve expects an order-3 tensor");
        if (mask.shape() != t_obs.shape())
            throw std::invalid_argument("als_solve: mask shape does not match tensor shape");
        const std::size_t floor_count = opts.rank * (t_obs.dim(0) + t_obs.dim(1) + t_obs.dim(2));
        if (mask.observed_count() < floor_count)
            throw std::invalid_argument("als_solve: only " + std::to_string(mask.observed_count()) +
                                        " observed entries, rank " + std::to_string(opts.rank) + " needs at least " +
                                        std::to_string(floor_count));

        const double lambda = opts.lambda_reg.value_or(default_lambda(t_obs, mask));
        const double floor = 1e-12 * observed_norm(t_obs, mask);

        SolveReport rep;
        rep.lambda_used = lambda;

        struct Candidate
        {
            std::size_t index;
            RunResult run;
        };
        std::vector<Candidate> finalists;
        if (opts.screen_starts > opts.restarts)
        {
            SolverOptions screen = opts;
            screen.max_iters = std::min(opts.screen_sweeps, opts.max_iters);
            std::vector<Candidate> pool;
            pool.reserve(opts.screen_starts);
            for (std::size_t r = 0; r < opts.screen_starts; ++r)
            {
                auto start = init_factors(t_obs.shape(), opts.rank, derive_seed(opts.seed, {r}));
                auto run = run_als(t_obs, mask, std::move(start), screen, lambda, floor);
                rep.total_iterations += run.iterations;
                pool.push_back({r, std::move(run)});
            }
            std::stable_sort(pool.begin(), pool.end(),
                             [](const Candidate &a, const Candidate &b) { return a.run.residual < b.run.residual; });
            pool.resize(opts.restarts);
            std::sort(pool.begin(), pool.end(),
                      [](const Candidate &a, const Candidate &b) { return a.index < b.index; });
            for (auto &c : pool)
            {
                if (!c.run.converged && c.run.iterations < opts.max_iters)
                {
                    SolverOptions rest = opts;
                    rest.max_iters = opts.max_iters - c.run.iterations;
                    auto more = run_als(t_obs, mask, std::move(c.run.model), rest, lambda, floor);
                    rep.total_iterations += more.iterations;
                    more.iterations += c.run.iterations;
                    c.run = std::move(more);
                }
                finalists.push_back(std::move(c));
            }
        }
        else
        {
            for (std::size_t r = 0; r < opts.restarts; ++r)
            {
                auto start = init_factors(t_obs.shape(), opts.rank, derive_seed(opts.seed, {r}));
                auto run = run_als(t_obs, mask, std::move(start), opts, lambda, floor);
                rep.total_iterations += run.iterations;
                finalists.push_back({r, std::move(run)});
            }
        }

        std::size_t best = 0;
        for (std::size_t c = 0; c < finalists.size(); ++c)
        {
            rep.restart_residuals.push_back(finalists[c].run.residual);
            rep.restart_converged.push_back(finalists[c].run.converged);
            if (finalists[c].run.residual < finalists[best].run.residual)
                best = c;
        }
        auto &win = finalists[best];
        rep.restart_index = win.index;
        rep.iterations = win.run.iterations;
        rep.residual = win.run.residual;
        rep.converged = win.run.converged;
        rep.degenerate_rows = win.run.degenerate_rows;
        return {std::move(win.run.model), rep};
    }

} // namespace tcda
