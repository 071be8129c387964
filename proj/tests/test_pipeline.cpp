// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"
#include "tcda/doa.hpp"
#include "tcda/pipeline.hpp"
#include "tcda/scenario.hpp"

#include <doctest.h>

#include <map>

using namespace tcda;

namespace
{
    ComplexMatrix counting_matrix(Eigen::Index rows, Eigen::Index cols)
    {
        ComplexMatrix y(rows, cols);
        for (Eigen::Index t = 0; t < cols; ++t)
            for (Eigen::Index p = 0; p < rows; ++p)
                y(p, t) = cplx(static_cast<double>(p), static_cast<double>(t));
        return y;
    }

    SnapshotSet tones(std::size_t m, const std::vector<SourceParams> &src, const FaultMask &f, std::size_t n = 64)
    {
        SnapshotOptions o;
        o.snapshots = n;
        o.waveform = WaveformModel::orthogonal_tones;
        return generate_snapshots(ArrayGeometry{m}, src, f, o);
    }
} // namespace

TEST_CASE("partition into overlapping subarrays")
{
    const auto y = counting_matrix(4, 3);
    SUBCASE("L = M is a single subarray")
    {
        const auto s = partition_subarrays(y, 4);
        CHECK(s.shape() == Shape{4, 1, 3});
        for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t t = 0; t < 3; ++t)
                CHECK(s({p, 0, t}) == y(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(t)));
    }
    SUBCASE("L = 1 gives one element per subarray")
    {
        const auto s = partition_subarrays(y, 1);
        CHECK(s.shape() == Shape{1, 4, 3});
        for (std::size_t n = 0; n < 4; ++n)
            CHECK(s({0, n, 2}) == y(static_cast<Eigen::Index>(n), 2));
    }
    SUBCASE("M = 4, L = 2")
    {
        const auto s = partition_subarrays(y, 2);
        CHECK(s.shape() == Shape{2, 3, 3});
        CHECK(s({1, 2, 1}) == y(3, 1));
        CHECK(s({0, 1, 0}) == y(1, 0));
    }
    CHECK_THROWS_AS(partition_subarrays(y, 0), std::invalid_argument);
    CHECK_THROWS_AS(partition_subarrays(y, 5), std::invalid_argument);
}

TEST_CASE("cross-correlation")
{
    const auto x = partition_subarrays(counting_matrix(4, 5), 2);
    SUBCASE("zero second array")
    {
        const auto r = cross_correlation(x, partition_subarrays(ComplexMatrix::Zero(4, 5), 2));
        CHECK(r.shape() == Shape{2, 3, 2, 3});
        CHECK(r.frobenius_norm() == 0.0);
    }
    SUBCASE("one snapshot is an outer product")
    {
        ComplexMatrix a = oracle::random_matrix(4, 1, 1), b = oracle::random_matrix(4, 1, 2);
        const auto r = cross_correlation(partition_subarrays(a, 2), partition_subarrays(b, 3));
        CHECK(r.shape() == Shape{2, 3, 3, 2});
        CHECK(std::abs(r({1, 2, 2, 1}) - a(3, 0) * std::conj(b(3, 0))) < 1e-14);
        CHECK(std::abs(r({0, 1, 1, 0}) - a(1, 0) * std::conj(b(1, 0))) < 1e-14);
    }
    SUBCASE("single unit-power tone source")
    {
        const std::vector<SourceParams> src{{58.0, 66.0, 1.0}};
        const auto s = tones(6, src, FaultMask::healthy(6));
        const auto r = cross_correlation(partition_subarrays(s.x_obs, 3), partition_subarrays(s.z_obs, 3));
        const cplx th = oracle::theta_of(src[0]), ph = oracle::phi_of(src[0]);
        for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t n = 0; n < 4; ++n)
                for (std::size_t lp = 0; lp < 3; ++lp)
                    for (std::size_t np = 0; np < 4; ++np)
                    {
                        const cplx expect = std::pow(th, static_cast<double>(l + n + 1)) *
                                            std::conj(std::pow(ph, static_cast<double>(lp + np)));
                        CHECK(std::abs(r({l, n, lp, np}) - expect) < 1e-12);
                    }
    }
    CHECK_THROWS_AS(cross_correlation(x, partition_subarrays(counting_matrix(4, 4), 2)), std::invalid_argument);
}

TEST_CASE("augmentation")
{
    const SubarrayConfig cfg{4, 2, 2};
    SUBCASE("second slab is the reversed conjugate of the first")
    {
        const auto y = oracle::random_matrix(4, 7, 3), w = oracle::random_matrix(4, 7, 4);
        const auto rxz = cross_correlation(partition_subarrays(y, 2), partition_subarrays(w, 2));
        const auto r = augment(rxz, cfg);
        CHECK(r.shape() == Shape{2, 3, 2, 3, 2});
        const auto rc = reverse_conjugate(rxz);
        for (std::size_t k = 0; k < rxz.size(); ++k)
        {
            CHECK(r[k] == rxz[k]);
            CHECK(r[rxz.size() + k] == rc[k]);
        }
    }
    SUBCASE("zero input")
    {
        const auto r = augment(ComplexTensor({2, 3, 2, 3}), cfg);
        CHECK(r.frobenius_norm() == 0.0);
    }
    SUBCASE("single source: slab ratio is the u factor")
    {
        const std::vector<SourceParams> src{{67.0, 130.0, 1.0}};
        const auto s = tones(4, src, FaultMask::healthy(4));
        const auto r =
            augment(cross_correlation(partition_subarrays(s.x_obs, 2), partition_subarrays(s.z_obs, 2)), cfg);
        const cplx scale = std::pow(oracle::theta_of(src[0]), -5.0) * std::pow(oracle::phi_of(src[0]), 3.0);
        const std::size_t half = r.size() / 2;
        for (std::size_t k = 0; k < half; ++k)
            CHECK(std::abs(r[half + k] - scale * r[k]) < 1e-12);
    }
}

TEST_CASE("rearrangement and tensorization")
{
    const SubarrayConfig cfg{4, 2, 2};
    ComplexTensor r({2, 3, 2, 3, 2});
    for (std::size_t k = 0; k < r.size(); ++k)
        r[k] = static_cast<double>(k);
    const auto q = rearrange_to_q(r);
    CHECK(q.shape() == Shape{1, 2, 1, 2, 18});

    // Every Q entry is a copy of an R entry; each R entry is reused one to four times.
    std::map<double, int> uses;
    for (std::size_t k = 0; k < q.size(); ++k)
        ++uses[q[k].real()];
    for (const auto &[value, count] : uses)
    {
        CHECK(value == std::floor(value));
        CHECK(count >= 1);
        CHECK(count <= 4);
    }

    const auto t = tensorize_to_t(q);
    CHECK(t.shape() == Shape{1, 4, 18});
    CHECK(t == merge_modes(q, {{0, 2}, {1, 3}, {4}}));

    const auto src = target_source_index(cfg);
    REQUIRE(src.size() == t.size());
    for (std::size_t k = 0; k < t.size(); ++k)
        CHECK(t[k] == r[src[k]]);

    CHECK(SubarrayConfig::defaults_for(10).target_shape() == Shape{25, 4, 50});
    CHECK(SubarrayConfig::defaults_for(10) == SubarrayConfig{10, 6, 6});
}

TEST_CASE("target tensor matches the direct construction")
{
    const std::vector<SourceParams> src{{58.0, 66.0, 1.0}, {67.0, 130.0, 2.0}};
    SnapshotOptions o;
    o.snapshots = 40;
    o.snr_db = 3.0;
    o.seed = 21;
    const auto s = generate_snapshots(ArrayGeometry{7}, src, FaultMask::with_dead(7, {2}, {5}), o);
    const SubarrayConfig cfg{7, 4, 3};
    const auto pair = build_target(s, cfg, BlindDetector{});
    const auto direct = oracle::target_from_snapshots(s.x_obs, s.z_obs, 4, 3);
    REQUIRE(pair.t_obs.shape() == direct.shape());
    CHECK(oracle::max_abs_diff(pair.t_obs, direct) <= 1e-14 * direct.frobenius_norm());
}

TEST_CASE("noiseless tone snapshots reproduce the analytic target")
{
    const auto src = reference_sources();
    const auto cfg = SubarrayConfig::defaults_for(10);
    const auto s = tones(10, src, FaultMask::healthy(10), 100);
    const auto pair = build_target(s, cfg, BlindDetector{});
    const auto expect = oracle::analytic_target(src, 10, 6, 6);
    CHECK(oracle::max_abs_diff(pair.t_obs, expect) < 1e-12);
    CHECK(oracle::max_abs_diff(ideal_target(src, cfg), expect) < 1e-12);
    CHECK(oracle::max_abs_diff(rank1_sum(ideal_model(src, cfg)), expect) < 1e-12);
    const auto orc = build_target(s, cfg, OracleDetector{FaultMask::healthy(10)});
    CHECK(orc.missing_fraction == 0.0);
}

TEST_CASE("oracle mask propagation")
{
    const SubarrayConfig cfg = SubarrayConfig::defaults_for(10);
    SUBCASE("healthy array")
    {
        const auto w = propagate_mask_oracle(FaultMask::healthy(10), cfg);
        CHECK(w.observed_count() == w.size());
    }
    SUBCASE("every single dead sensor")
    {
        for (std::size_t p = 0; p < 10; ++p)
        {
            const auto fx = FaultMask::with_dead(10, {p}, {});
            const auto fz = FaultMask::with_dead(10, {}, {p});
            CHECK(propagate_mask_oracle(fx, cfg) == oracle::target_mask_from_faults(fx, 6, 6));
            CHECK(propagate_mask_oracle(fz, cfg) == oracle::target_mask_from_faults(fz, 6, 6));
            CHECK(propagate_mask_oracle(fx, cfg).observed_count() < propagate_mask_oracle(FaultMask::healthy(10), cfg).observed_count());
        }
    }
    SUBCASE("random patterns and other subarray sizes")
    {
        for (std::uint64_t seed = 0; seed < 20; ++seed)
        {
            const auto f = random_fault_mask(8, seed % 4, (seed / 4) % 4, seed);
            const SubarrayConfig c{8, 3 + seed % 3, 2 + seed % 5};
            CHECK(propagate_mask_oracle(f, c) == oracle::target_mask_from_faults(f, c.lx1, c.lz1));
        }
    }
    SUBCASE("whole axis dead")
    {
        FaultMask f = FaultMask::healthy(10);
        std::fill(f.x.begin(), f.x.end(), std::uint8_t{0});
        CHECK(propagate_mask_oracle(f, cfg).observed_count() == 0);
    }
    SUBCASE("medium preset")
    {
        const auto s = preset_scenario("medium");
        const auto w = propagate_mask_oracle(s.fault_mask(0, 0), cfg);
        CHECK(w.missing_fraction() == doctest::Approx(0.296).epsilon(0.1));
    }
}

TEST_CASE("blind detector")
{
    SUBCASE("constant amplitude keeps everything")
    {
        ComplexTensor t({3, 4, 5});
        for (std::size_t k = 0; k < t.size(); ++k)
            t[k] = std::polar(2.0, 0.1 * static_cast<double>(k));
        CHECK(detect_mask(t, 3.0, 1e-12).observed_count() == t.size());
    }
    SUBCASE("all zero tensor is all missing")
    {
        CHECK(detect_mask(ComplexTensor({2, 2, 2}), 3.0, 1e-12).observed_count() == 0);
    }
    SUBCASE("noiseless faulty single source equals the oracle mask")
    {
        const std::vector<SourceParams> src{{70.0, 110.0, 1.0}};
        const auto faults = FaultMask::with_dead(10, {0, 3}, {2, 4});
        const auto s = tones(10, src, faults);
        const auto cfg = SubarrayConfig::defaults_for(10);
        const auto blind = build_target(s, cfg, BlindDetector{});
        const auto orc = build_target(s, cfg, OracleDetector{faults});
        CHECK(blind.mask == orc.mask);
        CHECK(blind.t_obs == orc.t_obs);
    }
    SUBCASE("medium preset at 10 dB")
    {
        const auto sc = preset_scenario("medium");
        SnapshotOptions o;
        o.snapshots = 500;
        o.snr_db = 10.0;
        o.seed = 4;
        const auto s = generate_snapshots(sc.geometry, sc.sources, sc.fault_mask(0, 0), o);
        const auto pair = build_target(s, sc.subarray, BlindDetector{});
        CHECK(std::abs(pair.missing_fraction - 0.296) < 0.03);
    }
    CHECK_THROWS_AS(detect_mask(ComplexTensor({2}), 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("noiseless pipeline tensors have the expected rank")
{
    const std::vector<SourceParams> src{{58.0, 66.0, 1.0}, {85.0, 105.0, 1.5}};
    const auto cfg = SubarrayConfig::defaults_for(10);
    const auto pair = build_target(tones(10, src, FaultMask::healthy(10)), cfg, BlindDetector{});
    SolverOptions o;
    o.rank = 2;
    o.max_iters = 2000;
    o.rel_fit_tol = 1e-14;
    o.lambda_reg = 0.0;
    const auto [model, report] = als_solve(pair.t_obs, pair.mask, o);
    CHECK(report.residual < 1e-10 * pair.t_obs.frobenius_norm());
}

TEST_CASE("end to end on a noiseless four-source scene")
{
    const auto src = reference_sources();
    const auto cfg = SubarrayConfig::defaults_for(10);
    const auto pair = build_target(tones(10, src, FaultMask::healthy(10)), cfg, BlindDetector{});
    const auto est = estimate_from_tensor(pair, benchmark_solver(4), std::span<const SourceParams>(src));
    REQUIRE(est.score.has_value());
    for (std::size_t k = 0; k < 4; ++k)
    {
        CHECK(std::abs(est.score->elevation_error_deg[k]) < 1e-3);
        CHECK(std::abs(est.score->azimuth_error_deg[k]) < 1e-3);
    }
}
