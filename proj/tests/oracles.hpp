// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations used only by the tests. Written
// directly from the defining formulas with plain loops; they share no code
// with the library beyond the container types.

#ifndef TCDA_TEST_ORACLES_HPP
#define TCDA_TEST_ORACLES_HPP

#include "tcda/array_sim.hpp"
#include "tcda/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle
{
    using tcda::cplx;

    inline Eigen::MatrixXcd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n(0.0, 1.0);
        Eigen::MatrixXcd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
                m(r, c) = cplx(n(rng), n(rng));
        return m;
    }

    inline tcda::MaskTensor random_mask(const tcda::Shape &shape, double missing, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<std::uint8_t> bits(tcda::shape_numel(shape));
        for (auto &b : bits)
            b = u(rng) < missing ? 0 : 1;
        return tcda::MaskTensor(shape, bits);
    }

    // T[i,j,k] = sum_r G(i,r) H(j,r) P(k,r), first index fastest.
    inline tcda::ComplexTensor cp_entrywise(const Eigen::MatrixXcd &g, const Eigen::MatrixXcd &h,
                                            const Eigen::MatrixXcd &p)
    {
        const auto I = g.rows(), J = h.rows(), K = p.rows();
        tcda::ComplexTensor t({static_cast<std::size_t>(I), static_cast<std::size_t>(J), static_cast<std::size_t>(K)});
        for (Eigen::Index i = 0; i < I; ++i)
            for (Eigen::Index j = 0; j < J; ++j)
                for (Eigen::Index k = 0; k < K; ++k)
                {
                    cplx s = 0.0;
                    for (Eigen::Index r = 0; r < g.cols(); ++r)
                        s += g(i, r) * h(j, r) * p(k, r);
                    t(
                        {static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k)}) = s;
                }
        return t;
    }

    inline double weighted_fit_entrywise(const tcda::ComplexTensor &t, const tcda::MaskTensor &w,
                                         const Eigen::MatrixXcd &g, const Eigen::MatrixXcd &h,
                                         const Eigen::MatrixXcd &p)
    {
        const auto model = cp_entrywise(g, h, p);
        double s = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (w[k])
                s += std::norm(model[k] - t[k]);
        return std::sqrt(s);
    }

    // Row i of the mode-1 factor from the explicit weighted normal equations
    //   g_i^T = (T_i W_i Z*) (Z^T W_i Z* + lambda I)^-1
    // with Z (JK x R) row (j + J k) = h_j .* p_k and W_i = diag of mask row i.
    inline Eigen::MatrixXcd mode1_normal_solution(const tcda::ComplexTensor &t, const tcda::MaskTensor &w,
                                                  const Eigen::MatrixXcd &h, const Eigen::MatrixXcd &p,
                                                  double lambda)
    {
        const auto I = static_cast<Eigen::Index>(t.dim(0)), J = h.rows(), K = p.rows(), R = h.cols();
        Eigen::MatrixXcd z(J * K, R);
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index j = 0; j < J; ++j)
                for (Eigen::Index r = 0; r < R; ++r)
                    z(j + J * k, r) = h(j, r) * p(k, r);
        Eigen::MatrixXcd out(I, R);
        for (Eigen::Index i = 0; i < I; ++i)
        {
            Eigen::MatrixXcd wi = Eigen::MatrixXcd::Zero(J * K, J * K);
            Eigen::RowVectorXcd ti(J * K);
            for (Eigen::Index k = 0; k < K; ++k)
                for (Eigen::Index j = 0; j < J; ++j)
                {
                    const std::size_t lin = static_cast<std::size_t>(i + I * (j + J * k));
                    wi(j + J * k, j + J * k) = w[lin] ? 1.0 : 0.0;
                    ti(j + J * k) = t[lin];
                }
            const Eigen::MatrixXcd lhs =
                z.transpose() * wi * z.conjugate() + lambda * Eigen::MatrixXcd::Identity(R, R);
            const Eigen::RowVectorXcd rhs = ti * wi * z.conjugate();
            out.row(i) = lhs.transpose().fullPivLu().solve(rhs.transpose()).transpose();
        }
        return out;
    }

    // Permutes an order-3 tensor so that `mode` becomes the first mode while
    // the other two keep their relative order, and permutes factors alike.
    inline tcda::ComplexTensor rotate_to_front(const tcda::ComplexTensor &t, int mode)
    {
        const std::size_t I = t.dim(0), J = t.dim(1), K = t.dim(2);
        if (mode == 0)
            return t;
        tcda::Shape s = mode == 1 ? tcda::Shape{J, I, K} : tcda::Shape{K, I, J};
        tcda::ComplexTensor out(s);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t i = 0; i < I; ++i)
                    if (mode == 1)
                        out({j, i, k}) = t({i, j, k});
                    else
                        out({k, i, j}) = t({i, j, k});
        return out;
    }

    inline tcda::MaskTensor rotate_to_front(const tcda::MaskTensor &w, int mode)
    {
        const std::size_t I = w.shape()[0], J = w.shape()[1], K = w.shape()[2];
        if (mode == 0)
            return w;
        tcda::Shape s = mode == 1 ? tcda::Shape{J, I, K} : tcda::Shape{K, I, J};
        std::vector<std::uint8_t> bits(w.size());
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 0; j < J; ++j)
                for (std::size_t i = 0; i < I; ++i)
                {
                    const std::size_t src = i + I * (j + J * k);
                    const std::size_t dst = mode == 1 ? j + J * (i + I * k) : k + K * (i + I * j);
                    bits[dst] = w[src] ? 1 : 0;
                }
        return tcda::MaskTensor(s, bits);
    }

    // Element p (0-based) of the x axis responds with Theta^(p+1), of the z
    // axis with Phi^p, Theta = exp(j pi cos(elevation)), Phi = exp(j pi cos(azimuth)).
    inline cplx theta_of(const tcda::SourceParams &s)
    {
        return std::polar(1.0, std::numbers::pi * std::cos(s.elevation_theta_deg * std::numbers::pi / 180.0));
    }
    inline cplx phi_of(const tcda::SourceParams &s)
    {
        return std::polar(1.0, std::numbers::pi * std::cos(s.azimuth_phi_deg * std::numbers::pi / 180.0));
    }

    // Target tensor computed straight from the snapshots with one loop nest:
    //   Rxz[l,n,l',n'] = (1/N) sum_t x[l+n,t] conj(z[l'+n',t])
    //   R[...,0] = Rxz,  R[a,b,c,d,1] = conj(Rxz[Lx-1-a, Nx-1-b, Lz-1-c, Nz-1-d])
    //   T[i + Lx0 j, c + 2 e, nx + Nx nz + Nx Nz v] = R[i+c, nx, j+e, nz, v]
    inline tcda::ComplexTensor target_from_snapshots(const Eigen::MatrixXcd &x, const Eigen::MatrixXcd &z,
                                                     std::size_t lx, std::size_t lz)
    {
        const std::size_t m = static_cast<std::size_t>(x.rows());
        const std::size_t n_snap = static_cast<std::size_t>(x.cols());
        const std::size_t nx = m - lx + 1, nz = m - lz + 1, lx0 = lx - 1, lz0 = lz - 1;
        auto rxz = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
            cplx s = 0.0;
            for (std::size_t t = 0; t < n_snap; ++t)
                s += x(static_cast<Eigen::Index>(a + b), static_cast<Eigen::Index>(t)) *
                     std::conj(z(static_cast<Eigen::Index>(c + d), static_cast<Eigen::Index>(t)));
            return s / static_cast<double>(n_snap);
        };
        auto r = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d, std::size_t v) {
            if (v == 0)
                return rxz(a, b, c, d);
            return std::conj(rxz(lx - 1 - a, nx - 1 - b, lz - 1 - c, nz - 1 - d));
        };
        tcda::ComplexTensor t({lx0 * lz0, 4, 2 * nx * nz});
        for (std::size_t i = 0; i < lx0; ++i)
            for (std::size_t j = 0; j < lz0; ++j)
                for (std::size_t c = 0; c < 2; ++c)
                    for (std::size_t e = 0; e < 2; ++e)
                        for (std::size_t v = 0; v < 2; ++v)
                            for (std::size_t b = 0; b < nx; ++b)
                                for (std::size_t d = 0; d < nz; ++d)
                                    t({i + lx0 * j, c + 2 * e, b + nx * d + nx * nz * v}) = r(i + c, b, j + e, d, v);
        return t;
    }

    // Validity of every T entry for a fault pattern, by the same index map:
    // x cell (a, b) is valid iff element a+b is alive, likewise for z.
    inline tcda::MaskTensor target_mask_from_faults(const tcda::FaultMask &f, std::size_t lx, std::size_t lz)
    {
        const std::size_t m = f.x.size();
        const std::size_t nx = m - lx + 1, nz = m - lz + 1, lx0 = lx - 1, lz0 = lz - 1;
        auto valid = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d, std::size_t v) {
            if (v == 1)
                a = lx - 1 - a, b = nx - 1 - b, c = lz - 1 - c, d = nz - 1 - d;
            return f.x[a + b] != 0 && f.z[c + d] != 0;
        };
        tcda::Shape shape{lx0 * lz0, 4, 2 * nx * nz};
        std::vector<std::uint8_t> bits(tcda::shape_numel(shape));
        for (std::size_t i = 0; i < lx0; ++i)
            for (std::size_t j = 0; j < lz0; ++j)
                for (std::size_t c = 0; c < 2; ++c)
                    for (std::size_t e = 0; e < 2; ++e)
                        for (std::size_t v = 0; v < 2; ++v)
                            for (std::size_t b = 0; b < nx; ++b)
                                for (std::size_t d = 0; d < nz; ++d)
                                {
                                    const std::size_t lin = (i + lx0 * j) + shape[0] * ((c + 2 * e) +
                                                                                         4 * (b + nx * d + nx * nz * v));
                                    bits[lin] = valid(i + c, b, j + e, d, v) ? 1 : 0;
                                }
        return tcda::MaskTensor(shape, bits);
    }

    // Analytic noiseless target: sum_k sigma_k^2 * outer products of the
    // Vandermonde factors written out elementwise.
    inline tcda::ComplexTensor analytic_target(const std::vector<tcda::SourceParams> &src, std::size_t m,
                                               std::size_t lx, std::size_t lz)
    {
        const std::size_t nx = m - lx + 1, nz = m - lz + 1, lx0 = lx - 1, lz0 = lz - 1;
        tcda::ComplexTensor t({lx0 * lz0, 4, 2 * nx * nz});
        for (const auto &s : src)
        {
            const cplx th = theta_of(s), ph = phi_of(s);
            for (std::size_t i = 0; i < lx0; ++i)
                for (std::size_t j = 0; j < lz0; ++j)
                    for (std::size_t c = 0; c < 2; ++c)
                        for (std::size_t e = 0; e < 2; ++e)
                            for (std::size_t v = 0; v < 2; ++v)
                                for (std::size_t b = 0; b < nx; ++b)
                                    for (std::size_t d = 0; d < nz; ++d)
                                    {
                                        // x element a+b (0-based) -> Theta^(a+b+1); z element c'+d -> Phi^(c'+d)
                                        std::size_t a = i + c, bb = b, cc = j + e, dd = d;
                                        cplx val;
                                        if (v == 0)
                                            val = std::pow(th, static_cast<double>(a + bb + 1)) *
                                                  std::conj(std::pow(ph, static_cast<double>(cc + dd)));
                                        else
                                        {
                                            const std::size_t ra = lx - 1 - a, rb = nx - 1 - bb;
                                            const std::size_t rc = lz - 1 - cc, rd = nz - 1 - dd;
                                            val = std::conj(std::pow(th, static_cast<double>(ra + rb + 1)) *
                                                            std::conj(std::pow(ph, static_cast<double>(rc + rd))));
                                        }
                                        t({i + lx0 * j, c + 2 * e, b + nx * d + nx * nz * v}) += s.power * val;
                                    }
        }
        return t;
    }

    inline double max_abs_diff(const tcda::ComplexTensor &a, const tcda::ComplexTensor &b)
    {
        double m = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            m = std::max(m, std::abs(a[k] - b[k]));
        return m;
    }

} // namespace oracle

#endif // TCDA_TEST_ORACLES_HPP
