#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hq/errors.hpp"
#include "hq/linalg.hpp"
#include "hq/radial_operator.hpp"
#include "hq/symfun.hpp"

namespace hq::viscosity {

using symfun::QuotientIndices;

/// Sampled scalar function on a strictly increasing 1-D grid.
struct GridFunction1D {
    Vec coords;
    Vec vals;
    std::vector<std::uint8_t> boundary_mask;  // nonzero marks boundary nodes

    static GridFunction1D on(Vec coords, Vec vals)
    {
        if (coords.size() != vals.size() || coords.size() < 2)
            throw index_range_error("GridFunction1D: need matching coords/vals, size >= 2");
        for (std::size_t i = 1; i < coords.size(); ++i)
            if (!(coords[i] > coords[i - 1]))
                throw index_range_error("GridFunction1D: coords must be strictly increasing");
        for (double v : vals)
            if (!std::isfinite(v)) throw index_range_error("GridFunction1D: values must be finite");
        GridFunction1D g;
        g.coords = std::move(coords);
        g.vals = std::move(vals);
        g.boundary_mask.assign(g.coords.size(), 0);
        g.boundary_mask.front() = 1;
        g.boundary_mask.back() = 1;
        return g;
    }

    template <class F>
    static GridFunction1D sample(F&& f, const Vec& coords)
    {
        Vec v(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i) v[i] = f(coords[i]);
        return on(coords, std::move(v));
    }

    double osc() const
    {
        const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        return *hi - *lo;
    }

    std::size_t size() const { return coords.size(); }
};

namespace detail {

/// Best value of the quadratic-penalized objective around grid node j:
/// a three-point parabola through (y, m(y)) refines the grid argmax, exactly
/// so when the sampled function is itself quadratic.
inline double refine_quadratic(const Vec& y, const Vec& m, std::size_t j)
{
    double best = m[j];
    if (j == 0 || j + 1 >= y.size()) return best;
    const double x0 = y[j - 1], x1 = y[j], x2 = y[j + 1];
    const double f0 = m[j - 1], f1 = m[j], f2 = m[j + 1];
    const double d01 = (f1 - f0) / (x1 - x0);
    const double d12 = (f2 - f1) / (x2 - x1);
    const double curv2 = (d12 - d01) / (x2 - x0);  // half the second derivative
    if (!(curv2 < 0.0)) return best;               // not a concave cap
    const double vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curv2);
    if (vertex < x0 || vertex > x2) return best;
    // Newton form through the three samples: f0 + d01 (x-x0) + curv2 (x-x0)(x-x1)
    const double refined = f0 + d01 * (vertex - x0) + curv2 * (vertex - x0) * (vertex - x1);
    return std::max(best, refined);
}

enum class EnvelopeKind { Sup, Inf };

inline GridFunction1D quadratic_envelope(const GridFunction1D& u, double eps, double omega0,
                                         EnvelopeKind kind)
{
    if (!(eps > 0.0)) throw index_range_error("convolution: eps must be positive");
    const double width = u.coords.back() - u.coords.front();
    if (!(2.0 * eps < width))
        throw evaluation_domain_error("convolution: eps too large for the domain width");
    if (omega0 <= 0.0) omega0 = u.osc();
    omega0 = std::max(omega0, 1e-300);
    const double m = omega0 / (eps * eps);

    // objective samples as a function of y, for a fixed x:
    //   sup:  u(y) - m (x-y)^2      inf:  -( -u(y) - m (x-y)^2 )
    Vec coords_out, vals_out;
    for (std::size_t ix = 0; ix < u.size(); ++ix) {
        const double x = u.coords[ix];
        const double dist = std::min(x - u.coords.front(), u.coords.back() - x);
        if (!(dist > eps)) continue;  // restrict to the eps-shrunken domain
        Vec obj(u.size());
        for (std::size_t iy = 0; iy < u.size(); ++iy) {
            const double d = x - u.coords[iy];
            const double s = kind == EnvelopeKind::Sup ? u.vals[iy] : -u.vals[iy];
            obj[iy] = s - m * d * d;
        }
        std::size_t jbest = 0;
        for (std::size_t iy = 1; iy < u.size(); ++iy)
            if (obj[iy] > obj[jbest]) jbest = iy;
        const double refined = refine_quadratic(u.coords, obj, jbest);
        coords_out.push_back(x);
        vals_out.push_back(kind == EnvelopeKind::Sup ? refined : -refined);
    }
    if (coords_out.size() < 2)
        throw evaluation_domain_error("convolution: shrunken domain has fewer than two nodes");
    return GridFunction1D::on(std::move(coords_out), std::move(vals_out));
}

} // namespace detail

/// Quadratic-penalized upper envelope u_eps^+ restricted to the eps-shrunken
/// domain; semi-convex with second differences >= -2 omega0 / eps^2.
inline GridFunction1D sup_convolution(const GridFunction1D& u, double eps, double omega0 = 0.0)
{
    return detail::quadratic_envelope(u, eps, omega0, detail::EnvelopeKind::Sup);
}

/// Mirror image: quadratic-penalized lower envelope, semi-concave.
inline GridFunction1D inf_convolution(const GridFunction1D& v, double eps, double omega0 = 0.0)
{
    return detail::quadratic_envelope(v, eps, omega0, detail::EnvelopeKind::Inf);
}

/// Verify the strict-subsolution gain of the scaling u -> u/t on samples of a
/// G-Sym profile w(s) with isotropic matrix a*I: the operator residual of the
/// scaled profile must exceed (1-t)(k-l) inf g at every interior node.
inline bool scale_subsolution_check(const GridFunction1D& w, double t, const QuotientIndices& idx,
                                    double a, double g_inf, double tol = 1e-6)
{
    if (!(t > 0.0 && t < 1.0)) throw index_range_error("scale_subsolution_check: t in (0,1)");
    idx.validate();
    const double gain = (1.0 - t) * double(idx.degree()) * g_inf;
    for (std::size_t i = 1; i + 1 < w.size(); ++i) {
        const double hl = w.coords[i] - w.coords[i - 1];
        const double hr = w.coords[i + 1] - w.coords[i];
        const double d = hl * hr * (hl + hr);
        const double w1 = (hl * hl * w.vals[i + 1] + (hr * hr - hl * hl) * w.vals[i] -
                           hr * hr * w.vals[i - 1]) /
                          d;
        const double w2 =
            2.0 * (hl * w.vals[i + 1] - (hl + hr) * w.vals[i] + hr * w.vals[i - 1]) / d;
        const Vec spec = radial::hessian_spectrum(idx.n, a, w.coords[i], w1 / t, w2 / t);
        if (!symfun::in_gamma_k(idx.k, spec))
            throw admissibility_error("scale_subsolution_check: scaled spectrum left Gamma_k");
        const double op = radial::radial_operator(idx, a, w.coords[i], w1 / t, w2 / t);
        const double residual = op - g_inf;
        if (residual < gain - tol) return false;
    }
    return true;
}

enum class Verdict { PASS, FAIL };

struct ComparisonCertificate {
    double max_interior_excess = 0.0;
    double boundary_excess = 0.0;
    double tail_excess = 0.0;   // only meaningful in unbounded mode
    double tol = 0.0;
    Verdict verdict = Verdict::FAIL;
    std::size_t grid_nodes = 0;
    double grid_lo = 0.0;
    double grid_hi = 0.0;

    nlohmann::json to_json() const
    {
        return {{"verdict", verdict == Verdict::PASS ? "PASS" : "FAIL"},
                {"max_interior_excess", max_interior_excess},
                {"boundary_excess", boundary_excess},
                {"tail_excess", tail_excess},
                {"tol", tol},
                {"grid_meta",
                 {{"nodes", grid_nodes}, {"lo", grid_lo}, {"hi", grid_hi}}}};
    }
};

struct ComparisonRequest {
    bool sub_residual_certified = false;    // caller vouches S >= g for u
    bool super_residual_certified = false;  // caller vouches S <= g for v
    bool unbounded = false;                 // corollary mode: inner boundary + far tail
    double tol_override = 0.0;
};

/// Discrete comparison check: interior excess of u - v against its boundary
/// excess (bounded mode), or u <= v globally given inner-boundary ordering and
/// vanishing far tail (unbounded mode). Checks, never proves.
inline ComparisonCertificate comparison_certificate(const GridFunction1D& u,
                                                    const GridFunction1D& v,
                                                    const ComparisonRequest& req)
{
    if (!req.sub_residual_certified || !req.super_residual_certified)
        throw configuration_error("comparison_certificate: residual certificates missing; "
                                  "this check requires caller-certified residual signs");
    if (u.size() != v.size())
        throw index_range_error("comparison_certificate: grids must match");
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u.coords[i] != v.coords[i])
            throw index_range_error("comparison_certificate: grids must match");

    ComparisonCertificate cert;
    cert.grid_nodes = u.size();
    cert.grid_lo = u.coords.front();
    cert.grid_hi = u.coords.back();
    const double scale = std::max(u.osc(), v.osc());
    cert.tol = req.tol_override > 0.0 ? req.tol_override : 1e-7 * (1.0 + scale);

    double interior = -std::numeric_limits<double>::infinity();
    double boundary = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u.vals[i] - v.vals[i];
        if (u.boundary_mask[i])
            boundary = std::max(boundary, d);
        else
            interior = std::max(interior, d);
    }
    cert.max_interior_excess = interior;
    cert.boundary_excess = boundary;

    if (!req.unbounded) {
        cert.verdict = interior <= boundary + cert.tol ? Verdict::PASS : Verdict::FAIL;
        return cert;
    }

    // corollary mode: u <= v on the inner boundary, u - v -> 0 along the tail,
    // then u <= v up to the level still visible at the truncation.
    const double tail_lo = u.coords.back() / 10.0;
    std::size_t head_idx = u.size() - 1;
    double tail_max = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u.coords[i] < tail_lo) continue;
        head_idx = std::min(head_idx, i);
        tail_max = std::max(tail_max, std::abs(u.vals[i] - v.vals[i]));
    }
    cert.tail_excess = tail_max;

    const double head = std::abs(u.vals[head_idx] - v.vals[head_idx]);
    const double last = std::abs(u.vals.back() - v.vals.back());
    const bool tail_vanishing = tail_max <= cert.tol || last <= 0.8 * head + cert.tol;

    const double inner_boundary = u.vals.front() - v.vals.front();
    double everywhere = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i)
        everywhere = std::max(everywhere, u.vals[i] - v.vals[i]);
    const bool ordered = inner_boundary <= cert.tol && everywhere <= cert.tol + last;
    cert.verdict = tail_vanishing && ordered ? Verdict::PASS : Verdict::FAIL;
    return cert;
}

} // namespace hq::viscosity
