#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hq/errors.hpp"
#include "hq/linalg.hpp"

namespace hq::symfun {

/// The dimension/index triple (n, k, l) of the quotient operator sigma_k / sigma_l.
struct QuotientIndices {
    int n = 0;
    int k = 0;
    int l = 0;

    void validate() const
    {
        if (n < 3) throw index_range_error("QuotientIndices: n must be >= 3");
        if (!(0 <= l && l < k && k <= n))
            throw index_range_error("QuotientIndices: need 0 <= l < k <= n");
    }

    int degree() const { return k - l; }  // homogeneity of the quotient
};

/// Two-branch index condition guaranteeing the strict admissible set is nonempty:
/// l <= n-3 when k >= l+2, and l < n/2 - 1 when k = l+1.
inline bool index_condition_holds(const QuotientIndices& idx)
{
    idx.validate();
    if (idx.k >= idx.l + 2) return idx.l <= idx.n - 3;
    return 2 * idx.l + 2 < idx.n;
}

/// Isotropy constant: c*(k,l) = (C_n^l / C_n^k)^{1/(k-l)}, so that
/// the quotient of the spectrum c*(k,l)*(1,...,1) equals one.
inline double c_star(const QuotientIndices& idx)
{
    idx.validate();
    return std::pow(binomial(idx.n, idx.l) / binomial(idx.n, idx.k),
                    1.0 / double(idx.degree()));
}

/// Eigenvalue vector, kept sorted ascending.
struct Spectrum {
    Vec values;

    static Spectrum of(Vec v)
    {
        std::sort(v.begin(), v.end());
        return Spectrum{std::move(v)};
    }

    int n() const { return int(values.size()); }
    std::span<const double> span() const { return values; }
};

/// All elementary symmetric polynomials e_0..e_jmax of lam by the
/// one-element-at-a-time recurrence e_j += lam_i * e_{j-1}.
inline Vec sigma_all(std::span<const double> lam, int jmax)
{
    const int n = int(lam.size());
    if (jmax < 0) jmax = n;
    jmax = std::min(jmax, n);
    Vec e(std::size_t(jmax) + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::min(jmax, i + 1); j >= 1; --j) e[j] += lam[i] * e[j - 1];
    return e;
}

/// sigma_j(lam). By convention sigma_0 = 1 and sigma_{-1} = 0.
inline double sigma(int j, std::span<const double> lam)
{
    const int n = int(lam.size());
    if (j == -1) return 0.0;
    if (j < -1 || j > n)
        throw index_range_error("sigma: j out of range [-1, n], got " + std::to_string(j));
    if (j == 0) return 1.0;
    return sigma_all(lam, j)[std::size_t(j)];
}

/// sigma_j of lam with entry i (0-based) removed.
inline double sigma_reduced(int j, std::size_t i, std::span<const double> lam)
{
    const int n = int(lam.size());
    if (i >= lam.size()) throw index_range_error("sigma_reduced: entry index out of range");
    if (j == -1) return 0.0;
    if (j < -1 || j > n - 1)
        throw index_range_error("sigma_reduced: j out of range [-1, n-1]");
    Vec rest;
    rest.reserve(lam.size() - 1);
    for (std::size_t t = 0; t < lam.size(); ++t)
        if (t != i) rest.push_back(lam[t]);
    return sigma(j, rest);
}

/// sigma_j of every one-entry-deleted vector, j fixed.
inline Vec sigma_reduced_all_entries(int j, std::span<const double> lam)
{
    Vec out(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) out[i] = sigma_reduced(j, i, lam);
    return out;
}

/// Membership of lam in the cone Gamma_k: sigma_j(lam) > 0 for all 1 <= j <= k.
inline bool in_gamma_k(int k, std::span<const double> lam)
{
    const int n = int(lam.size());
    if (k < 1 || k > n) throw index_range_error("in_gamma_k: k out of range [1, n]");
    const Vec e = sigma_all(lam, k);
    for (int j = 1; j <= k; ++j)
        if (!(e[std::size_t(j)] > 0.0)) return false;
    return true;
}

/// sigma_k(lam) / sigma_l(lam), defined only on Gamma_k.
inline double quotient_value(const QuotientIndices& idx, std::span<const double> lam)
{
    idx.validate();
    if (int(lam.size()) != idx.n)
        throw index_range_error("quotient_value: spectrum length != n");
    if (!in_gamma_k(idx.k, lam))
        throw admissibility_error("quotient_value: spectrum not in Gamma_k");
    const Vec e = sigma_all(lam, idx.k);
    const double den = e[std::size_t(idx.l)];
    if (!(den > 0.0))
        throw admissibility_error("quotient_value: nonpositive denominator");
    return e[std::size_t(idx.k)] / den;
}

/// Gradient of the quotient in the eigenvalues, from the analytic partials
/// d sigma_j / d lam_i = sigma_{j-1} of the deleted vector.
inline Vec quotient_partials(const QuotientIndices& idx, std::span<const double> lam)
{
    idx.validate();
    if (!in_gamma_k(idx.k, lam))
        throw admissibility_error("quotient_partials: spectrum not in Gamma_k");
    const Vec e = sigma_all(lam, idx.k);
    const double sk = e[std::size_t(idx.k)];
    const double sl = e[std::size_t(idx.l)];
    Vec out(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) {
        const double dk = sigma_reduced(idx.k - 1, i, lam);
        const double dl = sigma_reduced(idx.l - 1, i, lam);
        out[i] = (dk * sl - sk * dl) / (sl * sl);
    }
    return out;
}

/// Euler sum  sum_i lam_i * d(sigma_k/sigma_l)/d lam_i; equals
/// (k - l) * quotient_value by homogeneity.
inline double euler_weighted_gradient(const QuotientIndices& idx, std::span<const double> lam)
{
    const Vec grad = quotient_partials(idx, lam);
    return dot(lam, grad);
}

/// Positive diagonal matrix, the normal form every anisotropic problem is
/// reduced to.
struct SpdDiagonal {
    Vec a;

    static SpdDiagonal of(Vec v)
    {
        for (double x : v)
            if (!(x > 0.0))
                throw admissibility_error("SpdDiagonal: entries must be strictly positive");
        return SpdDiagonal{std::move(v)};
    }

    static SpdDiagonal isotropic(int n, double value)
    {
        return of(Vec(std::size_t(n), value));
    }

    int n() const { return int(a.size()); }

    Spectrum spectrum() const { return Spectrum::of(a); }
};

/// H_k(A) = max_i sigma_{k-1;i}(a) a_i / sigma_k(a); lies in [k/n, 1) for
/// k < n and equals 1 at k = n.
inline double h_cap(int k, const SpdDiagonal& A)
{
    const int n = A.n();
    if (k < 1 || k > n) throw index_range_error("h_cap: k out of range [1, n]");
    const double sk = sigma(k, A.a);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < A.a.size(); ++i)
        best = std::max(best, sigma_reduced(k - 1, i, A.a) * A.a[i] / sk);
    return best;
}

/// h_l(A) = min_i sigma_{l-1;i}(a) a_i / sigma_l(a), with h_0 = 0.
inline double h_floor(int l, const SpdDiagonal& A)
{
    const int n = A.n();
    if (l < 0 || l > n) throw index_range_error("h_floor: l out of range [0, n]");
    if (l == 0) return 0.0;
    const double sl = sigma(l, A.a);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < A.a.size(); ++i)
        best = std::min(best, sigma_reduced(l - 1, i, A.a) * A.a[i] / sl);
    return best;
}

struct Membership {
    bool in_A = false;         // S_{k,l}(A) = 1
    bool in_script_A = false;  // additionally H_k(A) < (k-l)/2
    bool in_tilde_A = false;   // additionally H_k(A) - h_l(A) < (k-l)/2
    double quotient = 0.0;
    double h_k = 0.0;
    double h_l = 0.0;
};

inline constexpr double tol_membership = 1e-9;
// Guard band for the strict inequalities defining the script/tilde sets.
// Boundary configurations (isotropic witnesses with H_k = (k-l)/2 exactly)
// must not flip sign under rounding of the sigma ratios.
inline constexpr double tol_strict = 1e-12;

inline Membership membership(const QuotientIndices& idx, const SpdDiagonal& A)
{
    idx.validate();
    if (A.n() != idx.n) throw index_range_error("membership: dimension mismatch");
    Membership m;
    m.quotient = quotient_value(idx, A.a);
    m.h_k = h_cap(idx.k, A);
    m.h_l = h_floor(idx.l, A);
    const double half_gap = 0.5 * double(idx.degree());
    m.in_A = std::abs(m.quotient - 1.0) <= tol_membership;
    m.in_script_A = m.in_A && (m.h_k < half_gap - tol_strict);
    m.in_tilde_A = m.in_A && (m.h_k - m.h_l < half_gap - tol_strict);
    return m;
}

} // namespace hq::symfun
