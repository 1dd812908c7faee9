#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hq/construct.hpp"
#include "hq/errors.hpp"
#include "hq/linalg.hpp"
#include "hq/symfun.hpp"

namespace hq::barrier {

using construct::SourceEnvelope;
using construct::SubFamily;
using construct::SuperFamily;
using symfun::QuotientIndices;
using symfun::SpdDiagonal;

/// Axis-aligned ellipsoid about the origin: sum (x_i / d_i)^2 <= 1.
struct Ellipsoid {
    Vec axes;

    static Ellipsoid ball(int n, double radius)
    {
        return Ellipsoid{Vec(std::size_t(n), radius)};
    }

    int n() const { return int(axes.size()); }

    double level(std::span<const double> x) const
    {
        double q = 0.0;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const double r = x[i] / axes[i];
            q += r * r;
        }
        return q;
    }

    /// Radius of the boundary along the unit direction u.
    double gauge_radius(std::span<const double> u) const
    {
        double q = 0.0;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const double r = u[i] / axes[i];
            q += r * r;
        }
        return 1.0 / std::sqrt(q);
    }

    Vec surface_point(std::span<const double> u) const
    {
        const double rho = gauge_radius(u);
        Vec x(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) x[i] = rho * u[i];
        return x;
    }

    Vec outward_normal(std::span<const double> x) const
    {
        Vec g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / (axes[i] * axes[i]);
        const double nrm = norm2(g);
        for (double& v : g) v /= nrm;
        return g;
    }
};

/// Radius of the quadratic sublevel boundary {x'Ax/2 = s} along unit u.
inline double level_set_radius(const SpdDiagonal& A, double s, std::span<const double> u)
{
    double q = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) q += A.a[i] * u[i] * u[i];
    return std::sqrt(2.0 * s / q);
}

/// Deterministic unit-direction mesh: Fibonacci sphere in dimension 3,
/// seeded Gaussian directions elsewhere; coordinate axes always included.
inline std::vector<Vec> direction_mesh(int n, std::size_t count, std::uint64_t seed = 0)
{
    std::vector<Vec> dirs;
    dirs.reserve(count + 2 * std::size_t(n));
    if (n == 3) {
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (double(i) + 0.5) / double(count);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = 2.0 * std::acos(-1.0) * double(i) / golden;
            dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
        }
    } else {
        std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
        std::normal_distribution<double> gauss(0.0, 1.0);
        while (dirs.size() < count) {
            Vec u(std::size_t(n), 0.0);
            for (double& v : u) v = gauss(rng);
            const double nrm = norm2(u);
            if (nrm < 1e-8) continue;
            for (double& v : u) v /= nrm;
            dirs.push_back(std::move(u));
        }
    }
    for (int i = 0; i < n; ++i) {
        Vec plus(std::size_t(n), 0.0), minus(std::size_t(n), 0.0);
        plus[std::size_t(i)] = 1.0;
        minus[std::size_t(i)] = -1.0;
        dirs.push_back(std::move(plus));
        dirs.push_back(std::move(minus));
    }
    return dirs;
}

/// Instance data of the exterior Dirichlet problem on an ellipsoidal hole.
struct ExteriorProblem {
    QuotientIndices idx;
    SpdDiagonal A;
    Ellipsoid D;
    std::function<double(std::span<const double>)> phi;
    std::function<Vec(std::span<const double>)> grad_phi;  // optional, else finite differences
    SourceEnvelope env = SourceEnvelope::constant_one();
    double G_sup = 1.0;  // sup of the source over the exterior domain
    double s_bar = 0.0;  // outer splice level; 0 requests the automatic search
    std::size_t n_xi = 512;
    std::size_t verify_factor = 4;
    std::uint64_t seed = 0;

    void validate() const
    {
        idx.validate();
        if (A.n() != idx.n || D.n() != idx.n)
            throw index_range_error("ExteriorProblem: dimension mismatch");
        if (!(G_sup > 0.0)) throw configuration_error("ExteriorProblem: G_sup must be positive");
        if (!phi) throw configuration_error("ExteriorProblem: boundary data phi not set");
    }

    /// D(1) inside D inside D(s0), checked along a direction mesh.
    void validate_geometry() const
    {
        validate();
        for (const Vec& u : direction_mesh(idx.n, 256, seed)) {
            const double r_inner = level_set_radius(A, 1.0, u);
            const double r_dom = D.gauge_radius(u);
            const double r_outer = level_set_radius(A, env.s0, u);
            if (r_inner > r_dom * (1.0 + 1e-12))
                throw configuration_error("ExteriorProblem: D(1) not contained in D");
            if (r_dom > r_outer * (1.0 + 1e-12))
                throw configuration_error("ExteriorProblem: D not contained in D(s0)");
        }
    }

    Vec gradient_phi(std::span<const double> x) const
    {
        if (grad_phi) return grad_phi(x);
        Vec g(x.size());
        Vec p(x.begin(), x.end());
        const double h = 1e-6 * (1.0 + norm2(x));
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double keep = p[i];
            p[i] = keep + h;
            const double fp = phi(p);
            p[i] = keep - h;
            const double fm = phi(p);
            p[i] = keep;
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    }
};

/// One boundary barrier: the convex quadratic with Hessian G^{1/(k-l)} A
/// touching the boundary data at xi from below.
struct BarrierRecord {
    Vec xi;
    Vec x_bar;
    double coef = 0.0;  // G_sup^{1/(k-l)} / 2
    double phi_xi = 0.0;
    double push = 0.0;       // accepted normal-push parameter
    double x_bar_norm = 0.0; // reported |x_bar|

    double value(std::span<const double> x, const SpdDiagonal& A) const
    {
        double qx = 0.0, qxi = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dx = x[i] - x_bar[i];
            const double dxi = xi[i] - x_bar[i];
            qx += A.a[i] * dx * dx;
            qxi += A.a[i] * dxi * dxi;
        }
        return phi_xi + coef * (qx - qxi);
    }
};

namespace detail {

inline std::vector<Vec> boundary_mesh(const ExteriorProblem& prob, std::size_t count)
{
    std::vector<Vec> pts;
    for (const Vec& u : direction_mesh(prob.idx.n, count, prob.seed + 1))
        pts.push_back(prob.D.surface_point(u));
    return pts;
}

inline double cap_radius(const ExteriorProblem& prob, std::size_t verify_count)
{
    double r_max = 0.0;
    for (double d : prob.D.axes) r_max = std::max(r_max, d);
    // nominal mesh spacing of `verify_count` points on a sphere of that radius
    return 2.5 * r_max * std::sqrt(4.0 / double(verify_count));
}

} // namespace detail

/// Construct the barrier at xi: anchor the quadratic's gradient to the
/// tangential gradient of phi, then push the apex along the inward A-ray
/// until the barrier sits below phi on a dense boundary mesh (a cap of
/// radius mesh_h about xi excluded, margin quadratic in the distance).
inline BarrierRecord build_barrier(const ExteriorProblem& prob, const Vec& xi,
                                   double margin = 1e-8)
{
    prob.validate();
    if (std::abs(prob.D.level(xi) - 1.0) > 1e-10)
        throw evaluation_domain_error("build_barrier: xi must lie on the boundary of D");

    const std::size_t n = xi.size();
    BarrierRecord rec;
    rec.xi = xi;
    rec.coef = std::pow(prob.G_sup, 1.0 / double(prob.idx.degree())) / 2.0;
    rec.phi_xi = prob.phi(xi);

    const Vec normal = prob.D.outward_normal(xi);
    Vec grad = prob.gradient_phi(xi);
    const double gn = dot(grad, normal);
    Vec tangential(n);
    for (std::size_t i = 0; i < n; ++i) tangential[i] = grad[i] - gn * normal[i];

    const std::size_t verify_count = prob.verify_factor * prob.n_xi;
    const std::vector<Vec> mesh = detail::boundary_mesh(prob, verify_count);
    const double mesh_h = detail::cap_radius(prob, verify_count);

    Vec base(n);  // A^{-1} (tangential gradient) / (2 coef)
    for (std::size_t i = 0; i < n; ++i)
        base[i] = tangential[i] / (prob.A.a[i] * 2.0 * rec.coef);
    Vec ray(n);  // inward ray in the A-metric
    for (std::size_t i = 0; i < n; ++i) ray[i] = normal[i] / prob.A.a[i];

    Vec worst_point;
    double worst_excess = 0.0;
    for (double gamma = 1.0; gamma <= std::ldexp(1.0, 40); gamma *= 2.0) {
        rec.x_bar.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            rec.x_bar[i] = xi[i] - base[i] - gamma / (2.0 * rec.coef) * ray[i];
        bool ok = true;
        worst_excess = 0.0;
        for (const Vec& x : mesh) {
            Vec d(n);
            for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - xi[i];
            const double dist = norm2(d);
            if (dist <= mesh_h) continue;
            const double excess =
                rec.value(x, prob.A) - (prob.phi(x) - margin * dist * dist);
            if (excess > 0.0) {
                ok = false;
                if (excess > worst_excess) {
                    worst_excess = excess;
                    worst_point = x;
                }
            }
        }
        if (ok) {
            rec.push = gamma;
            rec.x_bar_norm = norm2(rec.x_bar);
            return rec;
        }
    }
    std::string where;
    for (double v : worst_point) where += std::to_string(v) + " ";
    throw barrier_construction_error("build_barrier: verification failed up to the push cap; "
                                     "worst boundary point [ " + where + "], excess " +
                                     std::to_string(worst_excess));
}

/// Upper envelope of the boundary barriers plus the shell extrema m_s0, M_s0.
struct BarrierEnvelope {
    std::vector<BarrierRecord> barriers;
    SpdDiagonal A;
    double m_s0 = 0.0;
    double M_s0 = 0.0;
    double boundary_max_dev = 0.0;  // max |envelope - phi| over the xi mesh

    double value(std::span<const double> x) const
    {
        double best = -std::numeric_limits<double>::infinity();
        for (const BarrierRecord& b : barriers) best = std::max(best, b.value(x, A));
        return best;
    }
};

inline BarrierEnvelope barrier_envelope(const ExteriorProblem& prob)
{
    prob.validate_geometry();
    BarrierEnvelope env;
    env.A = prob.A;

    const std::vector<Vec> xi_dirs = direction_mesh(prob.idx.n, prob.n_xi, prob.seed);
    for (const Vec& u : xi_dirs)
        env.barriers.push_back(build_barrier(prob, prob.D.surface_point(u)));

    // shell mesh between the two interface surfaces, both included
    const std::vector<Vec> dirs = direction_mesh(prob.idx.n, prob.n_xi, prob.seed + 2);
    constexpr int levels = 7;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Vec& u : dirs) {
        const double r0 = prob.D.gauge_radius(u);
        const double r1 = level_set_radius(prob.A, prob.env.s0, u);
        for (int j = 0; j < levels; ++j) {
            const double r = r0 + (r1 - r0) * double(j) / double(levels - 1);
            Vec x(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) x[i] = r * u[i];
            for (const BarrierRecord& b : env.barriers) {
                const double v = b.value(x, prob.A);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    env.m_s0 = lo;
    env.M_s0 = hi;

    for (const BarrierRecord& b : env.barriers)
        env.boundary_max_dev =
            std::max(env.boundary_max_dev, std::abs(env.value(b.xi) - b.phi_xi));
    return env;
}

struct CStarReport {
    double c_star = 0.0;
    double alpha = 0.0;
    double mu_alpha = 0.0;
    double m_s0 = 0.0;
    double M_s0 = 0.0;
    double s_bar = 0.0;          // outer splice interface baked into the threshold
    double envelope_at_bar = 0.0;  // max of the barrier envelope on that interface
};

inline constexpr double c_star_pad = 1e-6;

namespace detail {

inline double envelope_max_on_level(const ExteriorProblem& prob, const BarrierEnvelope& env,
                                    double s)
{
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& u : direction_mesh(prob.idx.n, prob.n_xi, prob.seed + 3)) {
        Vec x(u.size());
        const double r = level_set_radius(prob.A, s, u);
        for (std::size_t i = 0; i < u.size(); ++i) x[i] = r * u[i];
        best = std::max(best, env.value(x));
    }
    return best;
}

} // namespace detail

/// Splice threshold. The anchor starts one above the curvature threshold and
/// is raised until the profile anchored at m_s0 dominates every barrier on
/// the fixed outer interface; beyond max(mu(anchor, m_s0), M_s0) every c then
/// admits the c1 inversion, the super-over-sub ordering on the inner
/// interface, and both splice inequalities.
inline CStarReport compute_c_star(const ExteriorProblem& prob, const BarrierEnvelope& env)
{
    CStarReport rep;
    rep.m_s0 = env.m_s0;
    rep.M_s0 = env.M_s0;
    rep.s_bar = prob.s_bar > 0.0 ? prob.s_bar : 2.0 * prob.env.s0;
    rep.envelope_at_bar = detail::envelope_max_on_level(prob, env, rep.s_bar);

    const double alpha0 = construct::alpha_anchor(prob.idx, prob.A, prob.env);
    const double target = rep.envelope_at_bar + 1e-6 * (1.0 + std::abs(rep.envelope_at_bar));
    auto profile_at_bar = [&](double c1) {
        return SubFamily(prob.idx, prob.A, prob.env, c1, env.m_s0).value(rep.s_bar);
    };

    double alpha = alpha0;
    double grow = 1.0;
    while (profile_at_bar(alpha) < target) {
        alpha = alpha0 + grow;
        grow *= 2.0;
        if (grow > std::ldexp(1.0, 60))
            throw numerical_error("compute_c_star: could not dominate the barrier envelope "
                                  "on the outer interface");
    }
    if (alpha > alpha0) {
        // shave the bracket so the threshold is not needlessly inflated
        double lo = std::max(alpha0, alpha - grow / 4.0);
        double hi = alpha;
        for (int it = 0; it < 40 && hi - lo > 1e-3 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (profile_at_bar(mid) < target ? lo : hi) = mid;
        }
        alpha = hi;
    }
    rep.alpha = alpha;
    rep.mu_alpha = SubFamily(prob.idx, prob.A, prob.env, alpha, env.m_s0).mu();
    rep.c_star = std::max(rep.mu_alpha, rep.M_s0) + c_star_pad;

    // probe the downstream ordering once, just above the threshold
    const double c_probe = rep.c_star + 1.0;
    const double c1 = construct::invert_c1(prob.idx, prob.A, prob.env, env.m_s0, c_probe);
    SubFamily sub(prob.idx, prob.A, prob.env, c1, env.m_s0);
    const double c2 = SuperFamily::c2_for(prob.idx, prob.A, prob.env, c_probe);
    SuperFamily sup(prob.idx, prob.A, prob.env, c2);
    if (!(sup.value(prob.env.s0) >= sub.value(prob.env.s0) - 1e-9))
        throw numerical_error("compute_c_star: ordering probe failed on the inner interface");
    return rep;
}

/// The spliced global subsolution: barrier envelope inside D(s0), pointwise
/// max of envelope and profile between the interfaces, profile outside.
struct SplicedSubsolution {
    BarrierEnvelope envelope;
    SubFamily sub;
    double s0;
    double s_bar;
    double c;

    double value(std::span<const double> x) const
    {
        const double s = gsym::s_of(envelope.A, x);
        if (s <= s0) return envelope.value(x);
        if (s <= s_bar) return std::max(sub.value(s), envelope.value(x));
        return sub.value(s);
    }
};

inline SplicedSubsolution splice_subsolution(const ExteriorProblem& prob,
                                             const BarrierEnvelope& env,
                                             const CStarReport& rep, double c)
{
    if (!(c > rep.c_star))
        throw configuration_error("splice_subsolution: requires c > c_star = " +
                                  std::to_string(rep.c_star));
    const double c1 = construct::invert_c1(prob.idx, prob.A, prob.env, env.m_s0, c);
    SubFamily sub(prob.idx, prob.A, prob.env, c1, env.m_s0);

    const std::vector<Vec> dirs = direction_mesh(prob.idx.n, prob.n_xi, prob.seed + 3);

    // inner interface: the profile must start below the envelope
    for (const Vec& u : dirs) {
        Vec x(u.size());
        const double r = level_set_radius(prob.A, prob.env.s0, u);
        for (std::size_t i = 0; i < u.size(); ++i) x[i] = r * u[i];
        if (!(sub.value(prob.env.s0) <= env.value(x) + 1e-9))
            throw configuration_error("splice_subsolution: inner splice inequality failed");
    }

    // outer interface: start from the level baked into the threshold and keep
    // growing if mesh wiggle still leaves a barrier above the profile
    double s_bar = rep.s_bar > 0.0 ? rep.s_bar : 2.0 * prob.env.s0;
    const double s_bar_max = prob.env.s0 * std::ldexp(1.0, 20);
    while (true) {
        double envelope_max = -std::numeric_limits<double>::infinity();
        for (const Vec& u : dirs) {
            Vec x(u.size());
            const double r = level_set_radius(prob.A, s_bar, u);
            for (std::size_t i = 0; i < u.size(); ++i) x[i] = r * u[i];
            envelope_max = std::max(envelope_max, env.value(x));
        }
        if (sub.value(s_bar) >= envelope_max - 1e-9) break;
        s_bar *= 2.0;
        if (s_bar > s_bar_max)
            throw configuration_error("splice_subsolution: outer splice inequality "
                                      "unsatisfiable below the s_bar cap");
    }

    return SplicedSubsolution{env, std::move(sub), prob.env.s0, s_bar, c};
}

} // namespace hq::barrier
