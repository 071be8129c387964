// SPDX-License-Identifier: Apache-2.0
//
// L-shaped array snapshot simulator with sensor failures.
//
// Geometry: two orthogonal half-wavelength ULAs with M elements each. The
// x-axis element p (p = 1..M) responds with Theta^p, Theta = exp(j*pi*cos(theta));
// the z-axis element p (p = 0..M-1) responds with Phi^p, Phi = exp(j*pi*cos(phi)).
// Row r of x_obs / z_obs holds element r+1 / r respectively.

#ifndef TCDA_ARRAY_SIM_HPP
#define TCDA_ARRAY_SIM_HPP

#include "tcda/tensor.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace tcda
{
    struct SourceParams
    {
        double azimuth_phi_deg = 90.0;     // drives Phi (z-axis)
        double elevation_theta_deg = 90.0; // drives Theta (x-axis)
        double power = 1.0;                // sigma_k^2, linear

        bool operator==(const SourceParams &) const = default;
    };

    struct ArrayGeometry
    {
        std::size_t elements = 10; // M, per axis

        void validate() const;
        bool operator==(const ArrayGeometry &) const = default;
    };

    // 1 = functional element, 0 = failed element.
    struct FaultMask
    {
        std::vector<std::uint8_t> x;
        std::vector<std::uint8_t> z;

        static FaultMask healthy(std::size_t elements);
        // Builds a mask from 0-based dead element indices on each axis.
        static FaultMask with_dead(std::size_t elements, const std::vector<std::size_t> &dead_x,
                                   const std::vector<std::size_t> &dead_z);

        std::size_t dead_x() const;
        std::size_t dead_z() const;
        std::vector<std::size_t> dead_indices_x() const;
        std::vector<std::size_t> dead_indices_z() const;

        // Throws unless both axes have M binary entries and at least one live element.
        void validate(std::size_t elements) const;

        bool operator==(const FaultMask &) const = default;
    };

    enum class WaveformModel
    {
        // i.i.d. circular complex Gaussian, variance sigma_k^2
        gaussian,
        // exp(j*2*pi*(k+1)*t/N + j*psi_k) scaled to sigma_k; exactly orthogonal
        // over the record, so the sample correlation equals its expectation
        orthogonal_tones,
    };

    struct SnapshotOptions
    {
        std::size_t snapshots = 500;
        // +infinity disables the noise term
        double snr_db = std::numeric_limits<double>::infinity();
        WaveformModel waveform = WaveformModel::gaussian;
        std::uint64_t seed = 1;
    };

    struct SnapshotSet
    {
        ComplexMatrix x_obs; // M x N
        ComplexMatrix z_obs; // M x N
        // Noise-free source waveforms, K x N (kept for diagnostics)
        ComplexMatrix waveforms;

        std::size_t snapshots() const noexcept { return static_cast<std::size_t>(x_obs.cols()); }
        std::size_t elements() const noexcept { return static_cast<std::size_t>(x_obs.rows()); }
    };

    // exp(j*pi*cos(angle)) for angle in (0, 180) degrees.
    cplx steering_phase(double angle_deg);

    // Steering vectors (M x 1) for one source on each axis.
    Eigen::VectorXcd x_steering(std::size_t elements, const SourceParams &src);
    Eigen::VectorXcd z_steering(std::size_t elements, const SourceParams &src);

    // Noise variance used for a given SNR: mean source power / 10^(snr/10).
    // Falls back to unit reference power when every source power is zero.
    double noise_variance(std::span<const SourceParams> sources, double snr_db);

    void validate_sources(std::span<const SourceParams> sources);

    // x_obs = diag(m_x) x_ideal + w_x, z_obs = diag(m_z) z_ideal + w_z.
    // Deterministic given opts.seed; the mask never changes the random draws.
    SnapshotSet generate_snapshots(const ArrayGeometry &geometry, std::span<const SourceParams> sources,
                                   const FaultMask &mask, const SnapshotOptions &opts);

    // Uniformly random distinct failed elements per axis, deterministic given seed.
    FaultMask random_fault_mask(std::size_t elements, std::size_t faults_x, std::size_t faults_z,
                                std::uint64_t seed);

} // namespace tcda

#endif // TCDA_ARRAY_SIM_HPP
