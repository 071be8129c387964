// SPDX-License-Identifier: Apache-2.0

#include "tcda/array_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace tcda
{
    namespace
    {
        double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

        void check_angle(double angle_deg, const char *what)
        {
            if (!(angle_deg > 0.0 && angle_deg < 180.0))
                throw std::invalid_argument(std::string(what) + " " + std::to_string(angle_deg) +
                                            " deg is outside the open interval (0, 180)");
        }

        // Phase pi*cos(angle) in radians.
        double spatial_phase(double angle_deg) { return std::numbers::pi * std::cos(deg2rad(angle_deg)); }

        void check_binary(const std::vector<std::uint8_t> &v, std::size_t elements, const char *axis)
        {
            if (v.size() != elements)
                throw std::invalid_argument(std::string("fault mask ") + axis + " has " + std::to_string(v.size()) +
                                            " entries, expected " + std::to_string(elements));
            for (auto b : v)
                if (b > 1)
                    throw std::invalid_argument(std::string("fault mask ") + axis + " entries must be 0 or 1");
        }

        std::vector<std::size_t> zeros_of(const std::vector<std::uint8_t> &v)
        {
            std::vector<std::size_t> out;
            for (std::size_t i = 0; i < v.size(); ++i)
                if (!v[i])
                    out.push_back(i);
            return out;
        }
    } // namespace

    void ArrayGeometry::validate() const
    {
        if (elements < 4)
            throw std::invalid_argument("array must have at least 4 elements per axis, got " +
                                        std::to_string(elements));
    }

    FaultMask FaultMask::healthy(std::size_t elements)
    {
        return FaultMask{std::vector<std::uint8_t>(elements, 1), std::vector<std::uint8_t>(elements, 1)};
    }

    FaultMask FaultMask::with_dead(std::size_t elements, const std::vector<std::size_t> &dead_x,
                                   const std::vector<std::size_t> &dead_z)
    {
        auto mask = healthy(elements);
        for (auto i : dead_x)
        {
            if (i >= elements)
                throw std::invalid_argument("dead x element " + std::to_string(i) + " out of range");
            mask.x[i] = 0;
        }
        for (auto i : dead_z)
        {
            if (i >= elements)
                throw std::invalid_argument("dead z element " + std::to_string(i) + " out of range");
            mask.z[i] = 0;
        }
        return mask;
    }

    std::size_t FaultMask::dead_x() const { return zeros_of(x).size(); }
    std::size_t FaultMask::dead_z() const { return zeros_of(z).size(); }
    std::vector<std::size_t> FaultMask::dead_indices_x() const { return zeros_of(x); }
    std::vector<std::size_t> FaultMask::dead_indices_z() const { return zeros_of(z); }

    void FaultMask::validate(std::size_t elements) const
    {
        check_binary(x, elements, "x");
        check_binary(z, elements, "z");
        if (dead_x() == elements)
            throw std::invalid_argument("fault mask leaves no functional x element");
        if (dead_z() == elements)
            throw std::invalid_argument("fault mask leaves no functional z element");
    }

    cplx steering_phase(double angle_deg)
    {
        check_angle(angle_deg, "angle");
        return std::polar(1.0, spatial_phase(angle_deg));
    }

    Eigen::VectorXcd x_steering(std::size_t elements, const SourceParams &src)
    {
        check_angle(src.elevation_theta_deg, "elevation");
        const double ph = spatial_phase(src.elevation_theta_deg);
        Eigen::VectorXcd a(static_cast<Eigen::Index>(elements));
        for (std::size_t p = 0; p < elements; ++p)
            a(static_cast<Eigen::Index>(p)) = std::polar(1.0, ph * static_cast<double>(p + 1));
        return a;
    }

    Eigen::VectorXcd z_steering(std::size_t elements, const SourceParams &src)
    {
        check_angle(src.azimuth_phi_deg, "azimuth");
        const double ph = spatial_phase(src.azimuth_phi_deg);
        Eigen::VectorXcd a(static_cast<Eigen::Index>(elements));
        for (std::size_t p = 0; p < elements; ++p)
            a(static_cast<Eigen::Index>(p)) = std::polar(1.0, ph * static_cast<double>(p));
        return a;
    }

    void validate_sources(std::span<const SourceParams> sources)
    {
        if (sources.empty())
            throw std::invalid_argument("at least one source is required");
        for (const auto &s : sources)
        {
            check_angle(s.azimuth_phi_deg, "azimuth");
            check_angle(s.elevation_theta_deg, "elevation");
            if (!(s.power >= 0.0) || !std::isfinite(s.power))
                throw std::invalid_argument("source power must be finite and non-negative");
        }
    }

    double noise_variance(std::span<const SourceParams> sources, double snr_db)
    {
        if (std::isinf(snr_db) && snr_db > 0)
            return 0.0;
        if (std::isnan(snr_db))
            throw std::invalid_argument("snr_db is NaN");
        double mean_power = 0.0;
        for (const auto &s : sources)
            mean_power += s.power;
        mean_power = sources.empty() ? 0.0 : mean_power / static_cast<double>(sources.size());
        if (mean_power == 0.0)
            mean_power = 1.0;
        return mean_power / std::pow(10.0, snr_db / 10.0);
    }

    SnapshotSet generate_snapshots(const ArrayGeometry &geometry, std::span<const SourceParams> sources,
                                   const FaultMask &mask, const SnapshotOptions &opts)
    {
        geometry.validate();
        validate_sources(sources);
        mask.validate(geometry.elements);
        if (opts.snapshots == 0)
            throw std::invalid_argument("snapshot count must be at least 1");

        const auto M = static_cast<Eigen::Index>(geometry.elements);
        const auto N = static_cast<Eigen::Index>(opts.snapshots);
        const auto K = static_cast<Eigen::Index>(sources.size());

        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);

        ComplexMatrix s(K, N);
        for (Eigen::Index k = 0; k < K; ++k)
        {
            const double sigma = std::sqrt(sources[static_cast<std::size_t>(k)].power);
            if (opts.waveform == WaveformModel::gaussian)
            {
                const double scale = sigma / std::numbers::sqrt2;
                for (Eigen::Index t = 0; t < N; ++t)
                {
                    const double re = normal(rng);
                    const double im = normal(rng);
                    s(k, t) = cplx{re * scale, im * scale};
                }
            }
            else
            {
                const double psi = uniform(rng);
                const double freq = 2.0 * std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(N);
                for (Eigen::Index t = 0; t < N; ++t)
                    s(k, t) = std::polar(sigma, freq * static_cast<double>(t) + psi);
            }
        }

        ComplexMatrix ax(M, K), az(M, K);
        for (Eigen::Index k = 0; k < K; ++k)
        {
            ax.col(k) = x_steering(geometry.elements, sources[static_cast<std::size_t>(k)]);
            az.col(k) = z_steering(geometry.elements, sources[static_cast<std::size_t>(k)]);
        }

        SnapshotSet out;
        out.x_obs = ax * s;
        out.z_obs = az * s;
        for (Eigen::Index p = 0; p < M; ++p)
        {
            if (!mask.x[static_cast<std::size_t>(p)])
                out.x_obs.row(p).setZero();
            if (!mask.z[static_cast<std::size_t>(p)])
                out.z_obs.row(p).setZero();
        }

        const double nv = noise_variance(sources, opts.snr_db);
        if (nv > 0.0)
        {
            const double scale = std::sqrt(nv / 2.0);
            for (auto *obs : {&out.x_obs, &out.z_obs})
                for (Eigen::Index t = 0; t < N; ++t)
                    for (Eigen::Index p = 0; p < M; ++p)
                    {
                        const double re = normal(rng);
                        const double im = normal(rng);
                        (*obs)(p, t) += cplx{re * scale, im * scale};
                    }
        }
        out.waveforms = std::move(s);
        return out;
    }

    FaultMask random_fault_mask(std::size_t elements, std::size_t faults_x, std::size_t faults_z, std::uint64_t seed)
    {
        if (faults_x >= elements || faults_z >= elements)
            throw std::invalid_argument("requested " + std::to_string(faults_x) + "/" + std::to_string(faults_z) +
                                        " faults but each axis has only " + std::to_string(elements) +
                                        " elements (at least one must survive)");
        std::mt19937_64 rng(seed);
        std::vector<std::size_t> order(elements);
        std::iota(order.begin(), order.end(), std::size_t{0});

        auto pick = [&](std::size_t count) {
            auto perm = order;
            std::shuffle(perm.begin(), perm.end(), rng);
            perm.resize(count);
            std::sort(perm.begin(), perm.end());
            return perm;
        };
        const auto dx = pick(faults_x);
        const auto dz = pick(faults_z);
        return FaultMask::with_dead(elements, dx, dz);
    }

} // namespace tcda
