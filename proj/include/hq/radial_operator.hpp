#pragma once

#include <cmath>
#include <string>

#include "hq/errors.hpp"
#include "hq/linalg.hpp"
#include "hq/symfun.hpp"

namespace hq::radial {

using symfun::QuotientIndices;

/// Hessian spectrum of the profile w(s) with isotropic matrix a*I:
/// a w' with multiplicity n-1, plus a w' + 2 a s w''.
inline Vec hessian_spectrum(int n, double a, double s, double w1, double w2)
{
    Vec spec(std::size_t(n), a * w1);
    const double odd = a * w1 + 2.0 * a * s * w2;
    spec.back() = odd;
    std::sort(spec.begin(), spec.end());
    return spec;
}

namespace detail {

/// sigma_m of the isotropic G-Sym Hessian, closed coefficients:
/// C_n^m a^m w1^m + 2 s a^m C_{n-1}^{m-1} w1^{m-1} w2, with the m = 0 case 1.
inline double sigma_closed(int n, int m, double a, double s, double w1, double w2)
{
    if (m == 0) return 1.0;
    const double am = ipow(a, m);
    return binomial(n, m) * am * ipow(w1, m) +
           2.0 * s * am * binomial(n - 1, m - 1) * ipow(w1, m - 1) * w2;
}

inline double sigma_closed_dw1(int n, int m, double a, double s, double w1, double w2)
{
    if (m == 0) return 0.0;
    const double am = ipow(a, m);
    double d = binomial(n, m) * am * m * ipow(w1, m - 1);
    if (m >= 2) d += 2.0 * s * am * binomial(n - 1, m - 1) * (m - 1) * ipow(w1, m - 2) * w2;
    return d;
}

inline double sigma_closed_dw2(int n, int m, double a, double s, double w1, double /*w2*/)
{
    if (m == 0) return 0.0;
    return 2.0 * s * ipow(a, m) * binomial(n - 1, m - 1) * ipow(w1, m - 1);
}

} // namespace detail

/// Quotient operator value on the isotropic radial reduction.
inline double radial_operator(const QuotientIndices& idx, double a, double s, double w1,
                              double w2)
{
    idx.validate();
    if (!(w1 > 0.0)) throw admissibility_error("radial_operator: requires w' > 0");
    const double num = detail::sigma_closed(idx.n, idx.k, a, s, w1, w2);
    const double den = detail::sigma_closed(idx.n, idx.l, a, s, w1, w2);
    if (!(den > 0.0))
        throw admissibility_error("radial_operator: nonpositive denominator at s = " +
                                  std::to_string(s));
    return num / den;
}

struct OperatorJet {
    double value;
    double d_w1;
    double d_w2;
};

/// Operator value plus analytic partials in (w', w''), for Newton's method.
inline OperatorJet radial_operator_jet(const QuotientIndices& idx, double a, double s, double w1,
                                       double w2)
{
    if (!(w1 > 0.0)) throw admissibility_error("radial_operator_jet: requires w' > 0");
    const double num = detail::sigma_closed(idx.n, idx.k, a, s, w1, w2);
    const double den = detail::sigma_closed(idx.n, idx.l, a, s, w1, w2);
    if (!(den > 0.0)) throw admissibility_error("radial_operator_jet: nonpositive denominator");
    const double n1 = detail::sigma_closed_dw1(idx.n, idx.k, a, s, w1, w2);
    const double n2 = detail::sigma_closed_dw2(idx.n, idx.k, a, s, w1, w2);
    const double d1 = detail::sigma_closed_dw1(idx.n, idx.l, a, s, w1, w2);
    const double d2 = detail::sigma_closed_dw2(idx.n, idx.l, a, s, w1, w2);
    OperatorJet jet;
    jet.value = num / den;
    jet.d_w1 = (n1 * den - num * d1) / (den * den);
    jet.d_w2 = (n2 * den - num * d2) / (den * den);
    return jet;
}

/// Full Gamma_k admissibility of the radial profile jet at one point.
inline bool admissible_jet(const QuotientIndices& idx, double a, double s, double w1, double w2)
{
    if (!(w1 > 0.0)) return false;
    for (int m = 1; m <= idx.k; ++m)
        if (!(detail::sigma_closed(idx.n, m, a, s, w1, w2) > 0.0)) return false;
    if (idx.l > 0 && !(detail::sigma_closed(idx.n, idx.l, a, s, w1, w2) > 0.0)) return false;
    return true;
}

} // namespace hq::radial
