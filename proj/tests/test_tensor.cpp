// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"
#include "tcda/tensor.hpp"

#include <doctest.h>

#include <numeric>

using namespace tcda;

TEST_CASE("tensor construction and indexing")
{
    ComplexTensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.order() == 3);
    t({1, 2, 3}) = cplx(5.0, -1.0);
    CHECK(t[1 + 2 * (2 + 3 * 3)] == cplx(5.0, -1.0));
    CHECK_THROWS_AS(t({2, 0, 0}), std::out_of_range);
    CHECK_THROWS_AS(t({0, 0}), std::out_of_range);
    CHECK_THROWS_AS(ComplexTensor({2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(ComplexTensor({2, 2}, std::vector<cplx>(3)), std::invalid_argument);
    CHECK_THROWS_AS(MaskTensor({2}, std::vector<std::uint8_t>{1, 2}), std::invalid_argument);
}

TEST_CASE("rank1_sum of outer products")
{
    SUBCASE("ones")
    {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Ones(2, 1);
        const auto t = rank1_sum({a, a}, {2, 2});
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(t[k] == cplx(1.0, 0.0));
    }
    SUBCASE("basis vectors")
    {
        Eigen::MatrixXcd a(2, 1), b(2, 1);
        a << 1.0, 0.0;
        b << 0.0, 1.0;
        const auto t = rank1_sum({a, b}, {2, 2});
        CHECK(t({0, 1}) == cplx(1.0, 0.0));
        CHECK(t({0, 0}) == cplx(0.0, 0.0));
        CHECK(t({1, 0}) == cplx(0.0, 0.0));
        CHECK(t({1, 1}) == cplx(0.0, 0.0));
    }
    SUBCASE("matches the entrywise triple loop")
    {
        const auto g = oracle::random_matrix(3, 2, 1), h = oracle::random_matrix(4, 2, 2),
                   p = oracle::random_matrix(5, 2, 3);
        const auto fast = rank1_sum(CPModel{g, h, p});
        const auto slow = oracle::cp_entrywise(g, h, p);
        CHECK(oracle::max_abs_diff(fast, slow) <= 1e-12 * slow.frobenius_norm());
    }
    CHECK_THROWS_AS(rank1_sum({oracle::random_matrix(2, 1, 1)}, {3}), std::invalid_argument);
}

TEST_CASE("mode-1 unfolding")
{
    SUBCASE("singleton third mode")
    {
        ComplexTensor t({2, 2, 1}, {1.0, 2.0, 3.0, 4.0});
        const auto u = unfold_mode1(t);
        CHECK(u(0, 0) == cplx(1.0));
        CHECK(u(1, 0) == cplx(2.0));
        CHECK(u(0, 1) == cplx(3.0));
        CHECK(u(1, 1) == cplx(4.0));
    }
    SUBCASE("shape")
    {
        const auto u = unfold_mode1(ComplexTensor({3, 4, 5}));
        CHECK(u.rows() == 3);
        CHECK(u.cols() == 20);
    }
    SUBCASE("equals G (P kr H)^T for a rank-2 model")
    {
        const auto g = oracle::random_matrix(3, 2, 4), h = oracle::random_matrix(4, 2, 5),
                   p = oracle::random_matrix(5, 2, 6);
        const auto u = unfold_mode1(oracle::cp_entrywise(g, h, p));
        const Eigen::MatrixXcd expect = g * khatri_rao(p, h).transpose();
        CHECK((u - expect).norm() <= 1e-12 * expect.norm());
    }
}

TEST_CASE("Khatri-Rao product")
{
    SUBCASE("angle vector from two length-2 factors")
    {
        const cplx th = std::polar(1.0, 0.7), ph = std::polar(1.0, -0.3);
        Eigen::MatrixXcd e(2, 1), c(2, 1);
        e << 1.0, 1.0 / ph;
        c << 1.0, th;
        const auto h = khatri_rao(e, c);
        REQUIRE(h.rows() == 4);
        CHECK(std::abs(h(0, 0) - 1.0) < 1e-15);
        CHECK(std::abs(h(1, 0) - th) < 1e-15);
        CHECK(std::abs(h(2, 0) - 1.0 / ph) < 1e-15);
        CHECK(std::abs(h(3, 0) - th / ph) < 1e-15);
    }
    SUBCASE("ones")
    {
        const auto k = khatri_rao(Eigen::MatrixXcd::Ones(2, 1), Eigen::MatrixXcd::Ones(3, 1));
        CHECK(k.rows() == 6);
        CHECK((k - Eigen::MatrixXcd::Ones(6, 1)).norm() == 0.0);
    }
    SUBCASE("per-column Kronecker")
    {
        const auto a = oracle::random_matrix(3, 2, 7), b = oracle::random_matrix(2, 2, 8);
        const auto k = khatri_rao(a, b);
        for (Eigen::Index r = 0; r < 2; ++r)
            for (Eigen::Index i = 0; i < 3; ++i)
                for (Eigen::Index j = 0; j < 2; ++j)
                    CHECK(k(j + 2 * i, r) == a(i, r) * b(j, r));
    }
    CHECK_THROWS_AS(khatri_rao(oracle::random_matrix(2, 2, 1), oracle::random_matrix(2, 3, 1)),
                    std::invalid_argument);
}

TEST_CASE("merge and split modes")
{
    SUBCASE("target layout shape")
    {
        ComplexTensor q({5, 2, 5, 2, 50});
        const auto t = merge_modes(q, {{0, 2}, {1, 3}, {4}});
        CHECK(t.shape() == Shape{25, 4, 50});
    }
    SUBCASE("singleton groups are the identity")
    {
        const auto g = oracle::random_matrix(3, 1, 9), h = oracle::random_matrix(2, 1, 10),
                   p = oracle::random_matrix(4, 1, 11);
        const auto t = oracle::cp_entrywise(g, h, p);
        CHECK(merge_modes(t, {{0}, {1}, {2}}) == t);
    }
    SUBCASE("first listed mode varies fastest")
    {
        ComplexTensor t({2, 3, 4});
        for (std::size_t k = 0; k < t.size(); ++k)
            t[k] = static_cast<double>(k);
        const auto m = merge_modes(t, {{2, 0}, {1}});
        CHECK(m.shape() == Shape{8, 3});
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t k = 0; k < 4; ++k)
                    CHECK(m({k + 4 * i, j}) == t({i, j, k}));
    }
    SUBCASE("roundtrip is bitwise")
    {
        const Shape shape{3, 2, 4, 2, 5};
        ComplexTensor t(shape);
        std::mt19937_64 rng(12);
        std::normal_distribution<double> n;
        for (auto &v : t.data())
            v = cplx(n(rng), n(rng));
        const ModeGroups groups{{0, 2}, {1, 3}, {4}};
        const auto merged = merge_modes(t, groups);
        CHECK(split_modes(merged, groups, shape) == t);
        const auto map = merge_index_map(shape, groups);
        std::vector<std::size_t> sorted = map;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> expect(sorted.size());
        std::iota(expect.begin(), expect.end(), 0);
        CHECK(sorted == expect);
    }
    CHECK_THROWS_AS(merge_modes(ComplexTensor({2, 2}), {{0}, {0}}), std::invalid_argument);
    CHECK_THROWS_AS(merge_modes(ComplexTensor({2, 2}), {{0}}), std::invalid_argument);
}

TEST_CASE("reverse_conjugate")
{
    SUBCASE("palindromic real data is a fixed point")
    {
        ComplexTensor t({2, 2}, {1.0, 2.0, 2.0, 1.0});
        CHECK(reverse_conjugate(t) == t);
    }
    SUBCASE("involution")
    {
        ComplexTensor t({3, 2, 2});
        for (std::size_t k = 0; k < t.size(); ++k)
            t[k] = cplx(static_cast<double>(k), 1.0 - static_cast<double>(k * k));
        CHECK(reverse_conjugate(reverse_conjugate(t)) == t);
    }
    SUBCASE("Vandermonde rank-1 tensor picks up the u factor")
    {
        // M = 4, L = 2 on both axes. Entry [l,n,l',n'] = Theta^(l+n+1) conj(Phi^(l'+n')).
        const std::size_t m = 4, l = 2, n = m - l + 1;
        const cplx th = std::polar(1.0, 0.9), ph = std::polar(1.0, -1.4);
        ComplexTensor r({l, n, l, n});
        for (std::size_t a = 0; a < l; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t c = 0; c < l; ++c)
                    for (std::size_t d = 0; d < n; ++d)
                        r({a, b, c, d}) = std::pow(th, static_cast<double>(a + b + 1)) *
                                          std::conj(std::pow(ph, static_cast<double>(c + d)));
        const auto rc = reverse_conjugate(r);
        const cplx scale = std::pow(th, -static_cast<double>(m + 1)) * std::pow(ph, static_cast<double>(m - 1));
        for (std::size_t k = 0; k < r.size(); ++k)
            CHECK(std::abs(rc[k] - scale * r[k]) < 1e-13);
    }
}

TEST_CASE("hadamard products")
{
    const auto g = oracle::random_matrix(2, 1, 13), h = oracle::random_matrix(3, 1, 14),
               p = oracle::random_matrix(2, 1, 15);
    const auto a = oracle::cp_entrywise(g, h, p);
    CHECK(hadamard(a, MaskTensor(a.shape(), 1)) == a);
    const auto z = hadamard(a, MaskTensor(a.shape(), 0));
    for (std::size_t k = 0; k < z.size(); ++k)
        CHECK(z[k] == cplx(0.0));
    const auto b = oracle::cp_entrywise(p, h, g);
    const auto ab = hadamard(a, b);
    for (std::size_t k = 0; k < ab.size(); ++k)
        CHECK(ab[k] == a[k] * b[k]);
    CHECK_THROWS_AS(hadamard(a, ComplexTensor({2, 2})), std::invalid_argument);
}
