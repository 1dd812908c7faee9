#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hq/symfun.hpp"
#include "oracles.hpp"

using namespace hq;
using namespace hq::symfun;

TEST_CASE("sigma conventions and anchors")
{
    Vec lam{5.0, -2.0, 7.0};
    CHECK(sigma(0, lam) == 1.0);
    CHECK(sigma(-1, lam) == 0.0);
    CHECK(sigma(3, Vec{1.0, 1.0, 1.0}) == Catch::Approx(1.0));
    CHECK(sigma(2, Vec{1.0, 2.0, 3.0}) == Catch::Approx(11.0));
    CHECK_THROWS_AS(sigma(4, lam), index_range_error);
    CHECK_THROWS_AS(sigma(-2, lam), index_range_error);
}

TEST_CASE("sigma_reduced anchors and the deletion identity")
{
    Vec lam{1.0, 2.0, 3.0};
    CHECK(sigma_reduced(1, 2, lam) == Catch::Approx(3.0));  // drop the third entry
    CHECK(sigma_reduced(0, 0, lam) == 1.0);
    CHECK(sigma_reduced(0, 1, lam) == 1.0);
    CHECK_THROWS_AS(sigma_reduced(1, 5, lam), index_range_error);
    CHECK_THROWS_AS(sigma_reduced(3, 0, lam), index_range_error);

    // sigma_2 = sigma_{2;1} + lam_1 sigma_{1;1} = 6 + 1*5
    const double lhs = sigma(2, lam);
    const double rhs = sigma_reduced(2, 0, lam) + lam[0] * sigma_reduced(1, 0, lam);
    CHECK(sigma_reduced(2, 0, lam) == Catch::Approx(6.0));
    CHECK(sigma_reduced(1, 0, lam) == Catch::Approx(5.0));
    CHECK(lhs == Catch::Approx(rhs));
}

TEST_CASE("gamma cone membership")
{
    CHECK(in_gamma_k(3, Vec{1.0, 1.0, 1.0}));
    CHECK_FALSE(in_gamma_k(2, Vec{-1.0, 2.0, 2.0}));  // sigma_2 = 0 exactly
    CHECK(in_gamma_k(1, Vec{-1.0, 2.0, 2.0}));
    CHECK_THROWS_AS(in_gamma_k(0, Vec{1.0}), index_range_error);
}

TEST_CASE("quotient value anchors")
{
    QuotientIndices q321{3, 2, 1};
    CHECK(quotient_value(q321, Vec{1.0, 1.0, 1.0}) == Catch::Approx(1.0));

    QuotientIndices q330{3, 3, 0};
    CHECK(quotient_value(q330, Vec{2.0, 2.0, 2.0}) == Catch::Approx(8.0));

    // the isotropic witness normalizes the quotient to one
    for (int n = 3; n <= 7; ++n)
        for (int k = 1; k <= n; ++k)
            for (int l = 0; l < k; ++l) {
                QuotientIndices idx{n, k, l};
                const double c = c_star(idx);
                CHECK(quotient_value(idx, Vec(std::size_t(n), c)) ==
                      Catch::Approx(1.0).epsilon(1e-12));
            }

    CHECK_THROWS_AS(quotient_value(q321, Vec{-1.0, -1.0, 5.0}), admissibility_error);
}

TEST_CASE("euler weighted gradient matches homogeneity")
{
    QuotientIndices q321{3, 2, 1};
    CHECK(euler_weighted_gradient(q321, Vec{1.0, 1.0, 1.0}) == Catch::Approx(1.0));

    QuotientIndices q330{3, 3, 0};
    CHECK(euler_weighted_gradient(q330, Vec{2.0, 2.0, 2.0}) == Catch::Approx(24.0));

    oracle::Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.uniform_int(3, 7);
        QuotientIndices idx{n, 0, 0};
        idx.k = rng.uniform_int(1, n);
        idx.l = rng.uniform_int(0, idx.k - 1);
        Vec lam = rng.vector(std::size_t(n), 0.1, 3.0);  // positive cone is inside Gamma_k
        const double e = euler_weighted_gradient(idx, lam);
        const double q = quotient_value(idx, lam);
        CHECK(e / q == Catch::Approx(double(idx.degree())).epsilon(1e-10));
    }
}

TEST_CASE("analytic partials agree with central differences")
{
    oracle::Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.uniform_int(3, 6);
        QuotientIndices idx{n, 0, 0};
        idx.k = rng.uniform_int(1, n);
        idx.l = rng.uniform_int(0, idx.k - 1);
        Vec lam = rng.vector(std::size_t(n), 0.3, 2.5);
        const Vec grad = quotient_partials(idx, lam);
        const double h = 1e-6;
        for (std::size_t i = 0; i < lam.size(); ++i) {
            Vec lp = lam, lm = lam;
            lp[i] += h;
            lm[i] -= h;
            const double fd = (quotient_value(idx, lp) - quotient_value(idx, lm)) / (2.0 * h);
            CHECK(grad[i] == Catch::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("eigen-weighted extremal ratios")
{
    SpdDiagonal iso = SpdDiagonal::isotropic(3, 1.0);
    CHECK(h_cap(2, iso) == Catch::Approx(2.0 / 3.0));
    CHECK(h_cap(3, iso) == Catch::Approx(1.0));

    SpdDiagonal d123 = SpdDiagonal::of(Vec{1.0, 2.0, 3.0});
    CHECK(h_floor(1, d123) == Catch::Approx(1.0 / 6.0));
    CHECK(h_floor(0, d123) == 0.0);
    CHECK(h_cap(3, d123) == Catch::Approx(1.0));  // H_n is identically one

    // the maximizing index is the largest eigenvalue
    const double direct = sigma_reduced(1, 2, d123.a) * d123.a[2] / sigma(2, d123.a);
    CHECK(h_cap(2, d123) == Catch::Approx(direct));

    oracle::Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = rng.uniform_int(3, 8);
        SpdDiagonal A = SpdDiagonal::of(rng.vector(std::size_t(n), 0.2, 4.0));
        for (int k = 1; k <= n - 1; ++k) {
            const double hk = h_cap(k, A);
            CHECK(hk >= double(k) / double(n) - 1e-12);
            CHECK(hk < 1.0);
        }
        // monotonicity in the order
        for (int k = 2; k <= n; ++k)
            CHECK(h_cap(k - 1, A) <= h_cap(k, A) + 1e-12);
    }
}

TEST_CASE("Newtonian inequality on reduced vectors")
{
    oracle::Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = rng.uniform_int(3, 8);
        Vec a = rng.vector(std::size_t(n), 0.05, 5.0);
        std::sort(a.begin(), a.end());
        const std::size_t top = a.size() - 1;
        for (int k = 1; k <= n - 2; ++k) {
            const double mid = sigma_reduced(k, top, a);
            const double up = sigma_reduced(k + 1, top, a);
            const double dn = sigma_reduced(k - 1, top, a);
            CHECK(up * dn <= mid * mid * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("membership anchors")
{
    QuotientIndices q521{5, 2, 1};
    Membership m1 = membership(q521, SpdDiagonal::isotropic(5, 0.5));
    CHECK(m1.in_A);
    CHECK(m1.in_script_A);
    CHECK(m1.in_tilde_A);
    CHECK(m1.h_k == Catch::Approx(0.4));
    CHECK(c_star(q521) == Catch::Approx(0.5));

    QuotientIndices q321{3, 2, 1};
    Membership m2 = membership(q321, SpdDiagonal::isotropic(3, 1.0));
    CHECK(m2.in_A);
    CHECK_FALSE(m2.in_script_A);  // H_2 = 2/3 >= 1/2
    CHECK_FALSE(index_condition_holds(q321));

    QuotientIndices q330{3, 3, 0};
    Membership m3 = membership(q330, SpdDiagonal::isotropic(3, 1.0));
    CHECK(m3.in_A);
    CHECK(m3.in_script_A);  // H_3 = 1 < 3/2

    // script membership implies tilde membership implies plain membership
    oracle::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.uniform_int(3, 7);
        QuotientIndices idx{n, 0, 0};
        idx.k = rng.uniform_int(1, n);
        idx.l = rng.uniform_int(0, idx.k - 1);
        Vec a = rng.vector(std::size_t(n), 0.3, 2.0);
        // normalize onto the quotient-one surface
        SpdDiagonal A0 = SpdDiagonal::of(a);
        const double q = quotient_value(idx, A0.spectrum().values);
        const double t = std::pow(q, -1.0 / double(idx.degree()));
        for (double& v : a) v *= t;
        Membership m = membership(idx, SpdDiagonal::of(a));
        CHECK(m.in_A);
        if (m.in_script_A) CHECK(m.in_tilde_A);
        if (m.in_tilde_A) CHECK(m.in_A);
    }
}

TEST_CASE("c_star anchors")
{
    CHECK(c_star(QuotientIndices{3, 3, 0}) == Catch::Approx(1.0));
    CHECK(c_star(QuotientIndices{3, 2, 0}) == Catch::Approx(1.0 / std::sqrt(3.0)));
    CHECK(c_star(QuotientIndices{5, 2, 1}) == Catch::Approx(0.5));
}

TEST_CASE("index condition matches the isotropic witness exactly")
{
    for (int n = 3; n <= 10; ++n) {
        for (int k = 1; k <= n; ++k) {
            for (int l = 0; l < k; ++l) {
                QuotientIndices idx{n, k, l};
                const Membership m = membership(idx, SpdDiagonal::isotropic(n, c_star(idx)));
                INFO("n=" << n << " k=" << k << " l=" << l);
                CHECK(m.in_script_A == index_condition_holds(idx));
            }
        }
    }
}

TEST_CASE("symmetric function identities against enumeration")
{
    oracle::Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = rng.uniform_int(3, 8);
        Vec lam = rng.vector(std::size_t(n), -3.0, 3.0);
        for (int k = 1; k <= n; ++k) {
            const double direct = sigma(k, lam);
            const double scale = std::max(1e-30, oracle::sigma_scale(k, lam));

            // against the subset-enumeration oracle
            CHECK(std::abs(direct - oracle::sigma_enum(k, lam)) <= 1e-12 * scale);

            // sigma_k = (1/k) sum_i lam_i sigma_{k-1;i}
            double acc = 0.0;
            for (std::size_t i = 0; i < lam.size(); ++i)
                acc += lam[i] * sigma_reduced(k - 1, i, lam);
            CHECK(std::abs(direct - acc / k) <= 1e-12 * std::max(scale, std::abs(acc / k)));

            // sigma_k = sigma_{k;i} + lam_i sigma_{k-1;i}, every i
            // (the first term vanishes at k = n, where the reduced vector is short)
            for (std::size_t i = 0; i < lam.size(); ++i) {
                const double head = k <= n - 1 ? sigma_reduced(k, i, lam) : 0.0;
                const double split = head + lam[i] * sigma_reduced(k - 1, i, lam);
                CHECK(std::abs(direct - split) <= 1e-12 * scale);
            }
        }
    }
}
