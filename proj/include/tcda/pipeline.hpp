// SPDX-License-Identifier: Apache-2.0
//
// Snapshots -> incomplete third-order virtual tensor.
//
//   partition_subarrays   y (M x N)            -> L x (M-L+1) x N
//   cross_correlation     X, Z                 -> R_xz (L_x1, N_x, L_z1, N_z)
//   augment               R_xz                 -> R    (..., 2) with reversed-conjugate slab
//   rearrange_to_q        R                    -> Q    (L_x0, 2, L_z0, 2, 2 N_x N_z)
//   tensorize_to_t        Q                    -> T    (L_x0 L_z0, 4, 2 N_x N_z)
//
// The noiseless limit of T is the rank-K CP model [[G, H, P]] with
//   g_k = conj(a_z^(0)) (x) a_x^(0),  h_k = [1, Theta, 1/Phi, Theta/Phi],
//   p_k = sigma_k^2 * u_k (x) conj(b_z) (x) b_x,  u_k = [1, Theta^(-M-1) Phi^(M-1)].
// All indices below are 0-based.

#ifndef TCDA_PIPELINE_HPP
#define TCDA_PIPELINE_HPP

#include "tcda/array_sim.hpp"
#include "tcda/tensor.hpp"

#include <span>
#include <variant>

namespace tcda
{
    struct SubarrayConfig
    {
        std::size_t elements = 10; // M
        std::size_t lx1 = 6;       // x subarray size
        std::size_t lz1 = 6;       // z subarray size

        std::size_t nx() const noexcept { return elements + 1 - lx1; }
        std::size_t nz() const noexcept { return elements + 1 - lz1; }
        std::size_t lx0() const noexcept { return lx1 - 1; }
        std::size_t lz0() const noexcept { return lz1 - 1; }

        // ceil((M+1)/2) clipped to [2, M-1], on both axes.
        static SubarrayConfig defaults_for(std::size_t elements);

        // (L_x0 L_z0, 4, 2 N_x N_z)
        Shape target_shape() const;

        // 2 <= L <= M-1 on both axes and M >= 4.
        void validate() const;

        bool operator==(const SubarrayConfig &) const = default;
    };

    ComplexTensor partition_subarrays(const ComplexMatrix &y, std::size_t subarray_size);

    // (1/N) sum_t x[l,n,t] conj(z[l',n',t])
    ComplexTensor cross_correlation(const ComplexTensor &x_sub, const ComplexTensor &z_sub);

    ComplexTensor augment(const ComplexTensor &r_xz, const SubarrayConfig &cfg);

    // Q[i,c,j,e,m] = R[i+c, n_x, j+e, n_z, v] with m = n_x + n_z N_x + v N_x N_z.
    ComplexTensor rearrange_to_q(const ComplexTensor &r);

    // Merge of Q modes {0,2},{1,3},{4}.
    ComplexTensor tensorize_to_t(const ComplexTensor &q);

    // For every linear index of T, the linear index of the augmented R it copies.
    std::vector<std::size_t> target_source_index(const SubarrayConfig &cfg);

    struct BlindDetector
    {
        double gamma = 3.0;
        double epsilon = 1e-12;
    };

    struct OracleDetector
    {
        FaultMask faults;
    };

    using Detector = std::variant<BlindDetector, OracleDetector>;

    // w = |t| > median(|t|)/gamma + epsilon
    MaskTensor detect_mask(const ComplexTensor &t_obs, double gamma, double epsilon);

    // Mask implied by the physical fault pattern, following every index map of
    // the construction.
    MaskTensor propagate_mask_oracle(const FaultMask &faults, const SubarrayConfig &cfg);

    struct TargetTensorPair
    {
        ComplexTensor t_obs;
        MaskTensor mask;
        SubarrayConfig config;
        double missing_fraction = 0.0;
    };

    TargetTensorPair build_target(const SnapshotSet &snapshots, const SubarrayConfig &cfg, const Detector &detector);

    // Factors of the noiseless, infinite-snapshot target tensor.
    CPModel ideal_model(std::span<const SourceParams> sources, const SubarrayConfig &cfg);
    ComplexTensor ideal_target(std::span<const SourceParams> sources, const SubarrayConfig &cfg);

} // namespace tcda

#endif // TCDA_PIPELINE_HPP
