// SPDX-License-Identifier: Apache-2.0

#include "tcda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tcda
{
    namespace
    {
        const ModeGroups kTargetGroups = {{0, 2}, {1, 3}, {4}};

        std::string shape_str(const Shape &s)
        {
            std::string out = "(";
            for (std::size_t m = 0; m < s.size(); ++m)
                out += (m ? "," : "") + std::to_string(s[m]);
            return out + ")";
        }

        // Linear index into the augmented R of shape (lx1, nx, lz1, nz, 2).
        struct RIndexer
        {
            std::size_t lx1, nx, lz1, nz;
            std::size_t operator()(std::size_t l, std::size_t n, std::size_t lp, std::size_t np, std::size_t v) const
            {
                return l + lx1 * (n + nx * (lp + lz1 * (np + nz * v)));
            }
        };

        double median_of(std::vector<double> v)
        {
            if (v.empty())
                return 0.0;
            const std::size_t mid = v.size() / 2;
            std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
            const double upper = v[mid];
            if (v.size() % 2)
                return upper;
            const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
            return 0.5 * (lower + upper);
        }
    } // namespace

    SubarrayConfig SubarrayConfig::defaults_for(std::size_t elements)
    {
        const std::size_t half = (elements + 2) / 2; // ceil((M+1)/2)
        const std::size_t l = std::clamp<std::size_t>(half, 2, elements > 3 ? elements - 1 : 2);
        return SubarrayConfig{elements, l, l};
    }

    Shape SubarrayConfig::target_shape() const
    {
        return {lx0() * lz0(), 4, 2 * nx() * nz()};
    }

    void SubarrayConfig::validate() const
    {
        if (elements < 4)
            throw std::invalid_argument("subarray config: M must be at least 4, got " + std::to_string(elements));
        if (lx1 < 2 || lx1 + 1 > elements)
            throw std::invalid_argument("subarray config: lx1 = " + std::to_string(lx1) + " outside [2, M-1]");
        if (lz1 < 2 || lz1 + 1 > elements)
            throw std::invalid_argument("subarray config: lz1 = " + std::to_string(lz1) + " outside [2, M-1]");
    }

    ComplexTensor partition_subarrays(const ComplexMatrix &y, std::size_t subarray_size)
    {
        const auto m = static_cast<std::size_t>(y.rows());
        const auto n = static_cast<std::size_t>(y.cols());
        if (subarray_size < 1 || subarray_size > m)
            throw std::invalid_argument("partition_subarrays: subarray size " + std::to_string(subarray_size) +
                                        " outside [1, " + std::to_string(m) + "]");
        const std::size_t count = m - subarray_size + 1;
        ComplexTensor out({subarray_size, count, n});
        std::size_t k = 0;
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t s = 0; s < count; ++s)
                for (std::size_t l = 0; l < subarray_size; ++l)
                    out[k++] = y(static_cast<Eigen::Index>(l + s), static_cast<Eigen::Index>(t));
        return out;
    }

    ComplexTensor cross_correlation(const ComplexTensor &x_sub, const ComplexTensor &z_sub)
    {
        if (x_sub.order() != 3 || z_sub.order() != 3)
            throw std::invalid_argument("cross_correlation expects order-3 subarray tensors");
        if (x_sub.dim(2) != z_sub.dim(2))
            throw std::invalid_argument("cross_correlation: snapshot counts differ (" + std::to_string(x_sub.dim(2)) +
                                        " vs " + std::to_string(z_sub.dim(2)) + ")");
        const auto n = static_cast<Eigen::Index>(x_sub.dim(2));
        const auto xr = static_cast<Eigen::Index>(x_sub.dim(0) * x_sub.dim(1));
        const auto zr = static_cast<Eigen::Index>(z_sub.dim(0) * z_sub.dim(1));
        Eigen::Map<const ComplexMatrix> xm(x_sub.data().data(), xr, n);
        Eigen::Map<const ComplexMatrix> zm(z_sub.data().data(), zr, n);

        ComplexTensor out({x_sub.dim(0), x_sub.dim(1), z_sub.dim(0), z_sub.dim(1)});
        Eigen::Map<ComplexMatrix> om(out.data().data(), xr, zr);
        om.noalias() = xm * zm.adjoint();
        om /= static_cast<double>(n);
        return out;
    }

    ComplexTensor augment(const ComplexTensor &r_xz, const SubarrayConfig &cfg)
    {
        cfg.validate();
        const Shape expected{cfg.lx1, cfg.nx(), cfg.lz1, cfg.nz()};
        if (r_xz.shape() != expected)
            throw std::invalid_argument("augment: correlation tensor shape " + shape_str(r_xz.shape()) +
                                        " does not satisfy L + N_sub - 1 = M for config " + shape_str(expected));
        const auto reversed = reverse_conjugate(r_xz);
        std::vector<cplx> data;
        data.reserve(2 * r_xz.size());
        data.insert(data.end(), r_xz.data().begin(), r_xz.data().end());
        data.insert(data.end(), reversed.data().begin(), reversed.data().end());
        Shape shape = expected;
        shape.push_back(2);
        return ComplexTensor(std::move(shape), std::move(data));
    }

    ComplexTensor rearrange_to_q(const ComplexTensor &r)
    {
        if (r.order() != 5 || r.dim(4) != 2 || r.dim(0) < 2 || r.dim(2) < 2)
            throw std::invalid_argument("rearrange_to_q: expected shape (L_x1>=2, N_x, L_z1>=2, N_z, 2), got " +
                                        shape_str(r.shape()));
        const std::size_t lx1 = r.dim(0), nx = r.dim(1), lz1 = r.dim(2), nz = r.dim(3);
        const RIndexer ridx{lx1, nx, lz1, nz};
        const std::size_t lx0 = lx1 - 1, lz0 = lz1 - 1;

        ComplexTensor q({lx0, 2, lz0, 2, 2 * nx * nz});
        std::size_t k = 0;
        for (std::size_t v = 0; v < 2; ++v)
            for (std::size_t bz = 0; bz < nz; ++bz)
                for (std::size_t bx = 0; bx < nx; ++bx)
                    for (std::size_t e = 0; e < 2; ++e)
                        for (std::size_t j = 0; j < lz0; ++j)
                            for (std::size_t c = 0; c < 2; ++c)
                                for (std::size_t i = 0; i < lx0; ++i)
                                    q[k++] = r[ridx(i + c, bx, j + e, bz, v)];
        return q;
    }

    ComplexTensor tensorize_to_t(const ComplexTensor &q)
    {
        if (q.order() != 5)
            throw std::invalid_argument("tensorize_to_t expects an order-5 tensor, got order " +
                                        std::to_string(q.order()));
        if (q.dim(1) != 2 || q.dim(3) != 2)
            throw std::invalid_argument("tensorize_to_t: modes 2 and 4 must have length 2, got " +
                                        shape_str(q.shape()));
        return merge_modes(q, kTargetGroups);
    }

    std::vector<std::size_t> target_source_index(const SubarrayConfig &cfg)
    {
        cfg.validate();
        const std::size_t lx0 = cfg.lx0(), lz0 = cfg.lz0(), nx = cfg.nx(), nz = cfg.nz();
        const RIndexer ridx{cfg.lx1, nx, cfg.lz1, nz};

        // Q-level map first, then reorder through the merge.
        std::vector<std::size_t> q_src;
        q_src.reserve(lx0 * lz0 * 4 * 2 * nx * nz);
        for (std::size_t v = 0; v < 2; ++v)
            for (std::size_t bz = 0; bz < nz; ++bz)
                for (std::size_t bx = 0; bx < nx; ++bx)
                    for (std::size_t e = 0; e < 2; ++e)
                        for (std::size_t j = 0; j < lz0; ++j)
                            for (std::size_t c = 0; c < 2; ++c)
                                for (std::size_t i = 0; i < lx0; ++i)
                                    q_src.push_back(ridx(i + c, bx, j + e, bz, v));

        const auto merge = merge_index_map({lx0, 2, lz0, 2, 2 * nx * nz}, kTargetGroups);
        std::vector<std::size_t> out(merge.size());
        for (std::size_t k = 0; k < merge.size(); ++k)
            out[k] = q_src[merge[k]];
        return out;
    }

    MaskTensor detect_mask(const ComplexTensor &t_obs, double gamma, double epsilon)
    {
        if (!(gamma > 0.0))
            throw std::invalid_argument("detect_mask: gamma must be positive");
        std::vector<double> amp(t_obs.size());
        for (std::size_t k = 0; k < amp.size(); ++k)
            amp[k] = std::abs(t_obs[k]);
        const double threshold = median_of(amp) / gamma + epsilon;

        std::vector<std::uint8_t> bits(amp.size());
        for (std::size_t k = 0; k < amp.size(); ++k)
            bits[k] = amp[k] > threshold ? 1 : 0;
        return MaskTensor(t_obs.shape(), std::move(bits));
    }

    MaskTensor propagate_mask_oracle(const FaultMask &faults, const SubarrayConfig &cfg)
    {
        cfg.validate();
        if (faults.x.size() != cfg.elements || faults.z.size() != cfg.elements)
            throw std::invalid_argument("propagate_mask_oracle: fault mask length does not match M = " +
                                        std::to_string(cfg.elements));
        const std::size_t lx1 = cfg.lx1, nx = cfg.nx(), lz1 = cfg.lz1, nz = cfg.nz();

        // A subarray cell (l, n) reads physical element l + n.
        const std::size_t slab = lx1 * nx * lz1 * nz;
        std::vector<std::uint8_t> r_valid(2 * slab);
        std::size_t k = 0;
        for (std::size_t np = 0; np < nz; ++np)
            for (std::size_t lp = 0; lp < lz1; ++lp)
                for (std::size_t n = 0; n < nx; ++n)
                    for (std::size_t l = 0; l < lx1; ++l)
                        r_valid[k++] = (faults.x[l + n] && faults.z[lp + np]) ? 1 : 0;
        // Reversed-conjugate slab: linear index k maps to slab-1-k.
        for (std::size_t s = 0; s < slab; ++s)
            r_valid[slab + s] = r_valid[slab - 1 - s];

        const auto src = target_source_index(cfg);
        std::vector<std::uint8_t> bits(src.size());
        for (std::size_t t = 0; t < src.size(); ++t)
            bits[t] = r_valid[src[t]];
        return MaskTensor(cfg.target_shape(), std::move(bits));
    }

    TargetTensorPair build_target(const SnapshotSet &snapshots, const SubarrayConfig &cfg, const Detector &detector)
    {
        cfg.validate();
        if (snapshots.elements() != cfg.elements || static_cast<std::size_t>(snapshots.z_obs.rows()) != cfg.elements)
            throw std::invalid_argument("build_target: snapshot rows do not match M = " +
                                        std::to_string(cfg.elements));

        const auto x_sub = partition_subarrays(snapshots.x_obs, cfg.lx1);
        const auto z_sub = partition_subarrays(snapshots.z_obs, cfg.lz1);
        const auto r = augment(cross_correlation(x_sub, z_sub), cfg);
        auto t = tensorize_to_t(rearrange_to_q(r));

        MaskTensor mask = std::visit(
            [&](const auto &d) -> MaskTensor {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, BlindDetector>)
                    return detect_mask(t, d.gamma, d.epsilon);
                else
                    return propagate_mask_oracle(d.faults, cfg);
            },
            detector);

        TargetTensorPair out{std::move(t), std::move(mask), cfg, 0.0};
        out.missing_fraction = out.mask.missing_fraction();
        return out;
    }

    CPModel ideal_model(std::span<const SourceParams> sources, const SubarrayConfig &cfg)
    {
        cfg.validate();
        validate_sources(sources);
        const auto K = static_cast<Eigen::Index>(sources.size());
        const auto lx0 = static_cast<Eigen::Index>(cfg.lx0()), lz0 = static_cast<Eigen::Index>(cfg.lz0());
        const auto nx = static_cast<Eigen::Index>(cfg.nx()), nz = static_cast<Eigen::Index>(cfg.nz());
        const double m = static_cast<double>(cfg.elements);

        CPModel model{FactorMatrix(lx0 * lz0, K), FactorMatrix(4, K), FactorMatrix(2 * nx * nz, K)};
        for (Eigen::Index k = 0; k < K; ++k)
        {
            const auto &src = sources[static_cast<std::size_t>(k)];
            // Phase angles of Theta and Phi.
            const double tx = std::numbers::pi * std::cos(src.elevation_theta_deg * std::numbers::pi / 180.0);
            const double tz = std::numbers::pi * std::cos(src.azimuth_phi_deg * std::numbers::pi / 180.0);

            Eigen::VectorXcd ax0(lx0), az0c(lz0), bx(nx), bzc(nz), u(2), h(4);
            for (Eigen::Index i = 0; i < lx0; ++i)
                ax0(i) = std::polar(1.0, tx * static_cast<double>(i + 1));
            for (Eigen::Index j = 0; j < lz0; ++j)
                az0c(j) = std::polar(1.0, -tz * static_cast<double>(j));
            for (Eigen::Index n = 0; n < nx; ++n)
                bx(n) = std::polar(1.0, tx * static_cast<double>(n));
            for (Eigen::Index n = 0; n < nz; ++n)
                bzc(n) = std::polar(1.0, -tz * static_cast<double>(n));
            u << 1.0, std::polar(1.0, -tx * (m + 1.0) + tz * (m - 1.0));
            h << 1.0, std::polar(1.0, tx), std::polar(1.0, -tz), std::polar(1.0, tx - tz);

            model.G.col(k) = kron(az0c, ax0);
            model.H.col(k) = h;
            model.P.col(k) = src.power * kron(u, kron(bzc, bx));
        }
        return model;
    }

    ComplexTensor ideal_target(std::span<const SourceParams> sources, const SubarrayConfig &cfg)
    {
        return rank1_sum(ideal_model(sources, cfg));
    }

} // namespace tcda
