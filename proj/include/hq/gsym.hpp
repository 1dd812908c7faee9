#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>

#include "hq/eigen_sym.hpp"
#include "hq/errors.hpp"
#include "hq/symfun.hpp"

namespace hq::gsym {

using symfun::QuotientIndices;
using symfun::SpdDiagonal;
using symfun::Spectrum;

/// Scalar profile w of the generalized-radial variable s = x'Ax/2, carrying
/// its first two derivatives. u(x) := w(s) has the two-term Hessian formula
/// evaluated by sigma_of_gsym_hessian below.
struct GSymProfile {
    SpdDiagonal A;
    std::function<double(double)> w_prime;
    std::function<double(double)> w_second;
    double s_lo = 1.0;
    double s_hi = std::numeric_limits<double>::infinity();
    int admissible_k = 0;  // 0 when no admissibility is claimed
};

inline double s_of(const SpdDiagonal& A, std::span<const double> x)
{
    if (x.size() != A.a.size())
        throw index_range_error("s_of: point dimension != matrix dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += A.a[i] * x[i] * x[i];
    return 0.5 * s;
}

namespace detail {

inline double checked_s(const GSymProfile& p, std::span<const double> x)
{
    const double s = s_of(p.A, x);
    if (!(s > 0.0))
        throw evaluation_domain_error("gsym: s = 0 (profile may be singular at the origin)");
    if (s < p.s_lo || s > p.s_hi)
        throw evaluation_domain_error("gsym: s outside the profile domain");
    return s;
}

/// sum_i sigma_{m-1;i}(a) (a_i x_i)^2, the anisotropic weight in the formula.
inline double rank_one_weight(int m, const SpdDiagonal& A, std::span<const double> x)
{
    if (m - 1 < 0) return 0.0;
    double t = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double axi = A.a[i] * x[i];
        t += symfun::sigma_reduced(m - 1, i, A.a) * axi * axi;
    }
    return t;
}

inline double sigma_formula(int m, const SpdDiagonal& A, double w1, double w2,
                            std::span<const double> x)
{
    const double base = symfun::sigma(m, A.a) * ipow(w1, m);
    if (m == 0) return 1.0;
    return base + w2 * ipow(w1, m - 1) * rank_one_weight(m, A, x);
}

} // namespace detail

/// sigma_m of the Hessian spectrum of u(x) = w(x'Ax/2) by the closed formula
/// sigma_m(a) w'^m + w'' w'^{m-1} sum_i sigma_{m-1;i}(a)(a_i x_i)^2.
inline double sigma_of_gsym_hessian(int m, const GSymProfile& p, std::span<const double> x)
{
    const int n = p.A.n();
    if (m < 0 || m > n) throw index_range_error("sigma_of_gsym_hessian: m out of range");
    const double s = detail::checked_s(p, x);
    return detail::sigma_formula(m, p.A, p.w_prime(s), p.w_second(s), x);
}

/// Quotient sigma_k / sigma_l of the Hessian of the profile at x. Requires the
/// Hessian spectrum to lie in Gamma_k, checked through the closed formula.
inline double quotient_of_gsym(const QuotientIndices& idx, const GSymProfile& p,
                               std::span<const double> x)
{
    idx.validate();
    if (p.A.n() != idx.n) throw index_range_error("quotient_of_gsym: dimension mismatch");
    const double s = detail::checked_s(p, x);
    const double w1 = p.w_prime(s);
    const double w2 = p.w_second(s);
    for (int m = 1; m <= idx.k; ++m)
        if (!(detail::sigma_formula(m, p.A, w1, w2, x) > 0.0))
            throw admissibility_error("quotient_of_gsym: Hessian spectrum not in Gamma_k");
    const double num = detail::sigma_formula(idx.k, p.A, w1, w2, x);
    const double den = idx.l == 0 ? 1.0 : detail::sigma_formula(idx.l, p.A, w1, w2, x);
    return num / den;
}

/// Dense Hessian w' A + w'' (Ax)(Ax)^T of the profile at x.
inline Matrix dense_hessian(const GSymProfile& p, std::span<const double> x)
{
    const double s = detail::checked_s(p, x);
    const double w1 = p.w_prime(s);
    const double w2 = p.w_second(s);
    const std::size_t n = p.A.a.size();
    Matrix h(n);
    for (std::size_t i = 0; i < n; ++i) {
        h(i, i) = w1 * p.A.a[i];
        for (std::size_t j = 0; j < n; ++j)
            h(i, j) += w2 * (p.A.a[i] * x[i]) * (p.A.a[j] * x[j]);
    }
    return h;
}

/// Independent route: eigenvalues of the dense Hessian. Feeding these to
/// symfun::sigma must reproduce sigma_of_gsym_hessian.
inline Spectrum dense_hessian_oracle(const GSymProfile& p, std::span<const double> x)
{
    const EigenSym es = jacobi_eigensystem(dense_hessian(p, x), /*want_vectors=*/false);
    return Spectrum{es.values};
}

/// Scale the direction u onto the level surface x'Ax/2 = s.
inline Vec point_at_level(const SpdDiagonal& A, std::span<const double> u, double s)
{
    double q = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) q += A.a[i] * u[i] * u[i];
    if (!(q > 0.0)) throw evaluation_domain_error("point_at_level: zero direction");
    const double r = std::sqrt(2.0 * s / q);
    Vec x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) x[i] = r * u[i];
    return x;
}

} // namespace hq::gsym
