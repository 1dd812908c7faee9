#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hq/barrier.hpp"
#include "oracles.hpp"

using namespace hq;
using namespace hq::barrier;
using symfun::QuotientIndices;
using symfun::SpdDiagonal;

namespace {

ExteriorProblem ball_problem(double radius, std::size_t n_xi = 128)
{
    ExteriorProblem prob;
    prob.idx = QuotientIndices{3, 3, 0};
    prob.A = SpdDiagonal::isotropic(3, 1.0);  // c*(3,3,0) = 1
    prob.D = Ellipsoid::ball(3, radius);
    prob.phi = [](std::span<const double>) { return 0.0; };
    prob.env = construct::SourceEnvelope::power_law(0.0, 4.0, 2.0);
    prob.G_sup = 1.0;
    prob.n_xi = n_xi;
    return prob;
}

} // namespace

TEST_CASE("ellipsoid geometry")
{
    Ellipsoid e{Vec{1.0, 2.0, 3.0}};
    Vec u{1.0, 0.0, 0.0};
    CHECK(e.gauge_radius(u) == Catch::Approx(1.0));
    Vec v{0.0, 0.0, 1.0};
    CHECK(e.gauge_radius(v) == Catch::Approx(3.0));
    Vec x = e.surface_point(v);
    CHECK(e.level(x) == Catch::Approx(1.0));
    Vec nrm = e.outward_normal(x);
    CHECK(nrm[2] == Catch::Approx(1.0));

    SpdDiagonal A = SpdDiagonal::of(Vec{2.0, 1.0, 1.0});
    CHECK(level_set_radius(A, 1.0, u) == Catch::Approx(1.0));
    CHECK(level_set_radius(A, 2.0, v) == Catch::Approx(2.0));
}

TEST_CASE("barrier on the unit ball with flat data")
{
    ExteriorProblem prob = ball_problem(1.0);
    Vec xi{0.0, 0.0, 1.0};
    const BarrierRecord rec = build_barrier(prob, xi);

    // the apex lands on the inward ray; the first accepted push reflects xi
    CHECK(rec.x_bar[0] == Catch::Approx(0.0).margin(1e-14));
    CHECK(rec.x_bar[1] == Catch::Approx(0.0).margin(1e-14));
    CHECK(rec.x_bar[2] < 0.0);

    // closed form on the sphere: -coef * t * |x - xi|^2 with t = push - 1
    const double t = rec.push - 1.0;
    oracle::Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        Vec x = rng.direction(3);
        double d2 = 0.0;
        for (int i = 0; i < 3; ++i) d2 += (x[std::size_t(i)] - xi[std::size_t(i)]) *
                                          (x[std::size_t(i)] - xi[std::size_t(i)]);
        CHECK(rec.value(x, prob.A) == Catch::Approx(-rec.coef * t * d2).margin(1e-12));
    }

    // the Hessian spectrum gives back the saturated source bound exactly
    Vec spectrum(3, 2.0 * rec.coef * prob.A.a[0]);
    CHECK(symfun::quotient_value(prob.idx, spectrum) == Catch::Approx(prob.G_sup));
}

TEST_CASE("constant boundary data only shifts the barrier")
{
    ExteriorProblem flat = ball_problem(1.0);
    ExteriorProblem lifted = ball_problem(1.0);
    lifted.phi = [](std::span<const double>) { return 2.5; };

    Vec xi{1.0, 0.0, 0.0};
    const BarrierRecord a = build_barrier(flat, xi);
    const BarrierRecord b = build_barrier(lifted, xi);
    CHECK(b.x_bar[0] == Catch::Approx(a.x_bar[0]));
    Vec probe{0.0, 1.0, 0.0};
    CHECK(b.value(probe, flat.A) == Catch::Approx(a.value(probe, flat.A) + 2.5));
}

TEST_CASE("linear boundary data needs the tangential correction")
{
    ExteriorProblem prob = ball_problem(1.0);
    Vec ell{0.3, -0.2, 0.1};
    prob.phi = [ell](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += ell[i] * x[i];
        return s;
    };

    Vec xi{0.0, 0.0, 1.0};
    const BarrierRecord rec = build_barrier(prob, xi);
    CHECK(rec.value(xi, prob.A) == Catch::Approx(prob.phi(xi)).margin(1e-12));

    // independent verification mesh, far denser than the construction mesh
    oracle::Rng rng(99);
    for (int trial = 0; trial < 4000; ++trial) {
        Vec x = rng.direction(3);
        double d2 = 0.0;
        for (int i = 0; i < 3; ++i) d2 += (x[std::size_t(i)] - xi[std::size_t(i)]) *
                                          (x[std::size_t(i)] - xi[std::size_t(i)]);
        if (d2 < 0.05 * 0.05) continue;
        CHECK(rec.value(x, prob.A) <= prob.phi(x) + 1e-12);
    }
}

TEST_CASE("surface precondition is enforced")
{
    ExteriorProblem prob = ball_problem(1.0);
    Vec off{0.0, 0.0, 1.5};
    CHECK_THROWS_AS(build_barrier(prob, off), evaluation_domain_error);
}

TEST_CASE("envelope, shell extrema and boundary match")
{
    ExteriorProblem prob = ball_problem(2.0);  // D(1) inside ball(2) inside D(2)
    prob.validate_geometry();

    const BarrierEnvelope env = barrier_envelope(prob);
    CHECK(env.m_s0 <= env.M_s0);
    CHECK(env.M_s0 >= 0.0);            // each barrier touches phi = 0 on the boundary
    CHECK(env.boundary_max_dev <= 1e-9);

    // doubling the mesh barely moves the shell extrema
    ExteriorProblem dense = ball_problem(2.0, 256);
    const BarrierEnvelope env2 = barrier_envelope(dense);
    CHECK(std::abs(env2.m_s0 - env.m_s0) < 1e-4);
    CHECK(std::abs(env2.M_s0 - env.M_s0) < 1e-4);
}

TEST_CASE("geometry validation rejects a too-small domain")
{
    ExteriorProblem prob = ball_problem(1.0);  // D(1) has radius sqrt(2) > 1
    CHECK_THROWS_AS(prob.validate_geometry(), configuration_error);
}

TEST_CASE("splice threshold and the spliced subsolution")
{
    ExteriorProblem prob = ball_problem(2.0);
    const BarrierEnvelope env = barrier_envelope(prob);
    const CStarReport rep = compute_c_star(prob, env);
    CHECK(rep.c_star >= rep.M_s0);
    CHECK(rep.c_star >= rep.mu_alpha);

    CHECK_THROWS_AS(splice_subsolution(prob, env, rep, rep.c_star - 0.5),
                    configuration_error);

    const double c = rep.c_star + 1.0;
    const SplicedSubsolution spliced = splice_subsolution(prob, env, rep, c);
    CHECK(spliced.s_bar > prob.env.s0);
    CHECK(spliced.sub.mu() == Catch::Approx(c).margin(1e-9));

    // boundary values match phi on the construction mesh
    for (const BarrierRecord& b : env.barriers)
        CHECK(std::abs(spliced.value(b.xi) - b.phi_xi) <= 1e-9);

    // continuity across both interfaces along random directions
    oracle::Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        Vec u = rng.direction(3);
        for (double s_if : {prob.env.s0, spliced.s_bar}) {
            const double r = level_set_radius(prob.A, s_if, u);
            Vec inside(3), outside(3);
            for (int i = 0; i < 3; ++i) {
                inside[std::size_t(i)] = (r - 1e-7) * u[std::size_t(i)];
                outside[std::size_t(i)] = (r + 1e-7) * u[std::size_t(i)];
            }
            CHECK(std::abs(spliced.value(inside) - spliced.value(outside)) <= 1e-5);
        }
    }

    // ordering chain under the supersolution
    const double c2 = construct::SuperFamily::c2_for(prob.idx, prob.A, prob.env, c);
    CHECK(c2 >= c);
    construct::SuperFamily sup(prob.idx, prob.A, prob.env, c2);
    for (int trial = 0; trial < 60; ++trial) {
        Vec u = rng.direction(3);
        const double s = 1.0 + std::pow(10.0, rng.uniform(0.0, 3.0));
        if (s <= prob.env.s0) continue;
        Vec x(3);
        const double r = level_set_radius(prob.A, s, u);
        for (int i = 0; i < 3; ++i) x[std::size_t(i)] = r * u[std::size_t(i)];
        CHECK(spliced.value(x) <= sup.value(s) + 1e-9);
    }

    // far field: the spliced function approaches the quadratic plus c
    for (double s : {1e3, 1e5, 1e7}) {
        Vec x{std::sqrt(2.0 * s), 0.0, 0.0};
        const double dev = std::abs(spliced.value(x) - (s + c));
        CHECK(dev <= 2.0 * spliced.sub.tail(s) + 1e-12);
    }
}
