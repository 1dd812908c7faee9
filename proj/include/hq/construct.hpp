#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hq/eigen_sym.hpp"
#include "hq/errors.hpp"
#include "hq/gsym.hpp"
#include "hq/quadrature.hpp"
#include "hq/source_envelope.hpp"
#include "hq/symfun.hpp"

namespace hq::construct {

using symfun::QuotientIndices;
using symfun::SpdDiagonal;

inline constexpr double safety_pad = 1e-8;

/// integral of H t^{H-1} g_bar(t) over [1, s] for the upper envelope of env.
inline double inner_antiderivative(double H, const SourceEnvelope& env, double s)
{
    if (!(s >= 1.0)) throw evaluation_domain_error("inner_antiderivative: s must be >= 1");
    if (!(H > 0.0)) throw evaluation_domain_error("inner_antiderivative: H must be > 0");
    return env.inner_int_bar(H, s);
}

namespace detail {

struct ValueWithError {
    double value = 0.0;
    double error = 0.0;
};

/// Far-field representation shared by both profile families:
///   (w')^p = 1 + u(s),  u(s) = s^{-H} E(s),  E(s) = a + b * power_ratio(delta, s),
/// valid for s >= s_valid. delta = H - beta/2 snapped to 0 in the log branch.
struct TailKernel {
    double H = 0.0;
    int p = 1;
    double beta_half = 0.0;
    double delta = 0.0;
    double a = 0.0;
    double b = 0.0;
    double s_valid = 1.0;

    double E(double s) const { return a + b * power_ratio(delta, s); }
    double excess_pow(double s) const { return std::pow(s, -H) * E(s); }
    double wprime(double s) const { return std::exp(std::log1p(excess_pow(s)) / p); }
    double wprime_excess(double s) const { return std::expm1(std::log1p(excess_pow(s)) / p); }

    /// integral over [S, inf) of the leading term u/p of w' - 1.
    double lead_tail(double S) const
    {
        const double head = a * std::pow(S, 1.0 - H) / (H - 1.0);
        double phi;
        if (delta == 0.0) {
            const double L = std::log(S);
            phi = std::pow(S, 1.0 - H) * (L / (H - 1.0) + 1.0 / ((H - 1.0) * (H - 1.0)));
        } else {
            const double num = (H - 1.0) * std::expm1(delta * std::log(S)) + delta;
            phi = std::pow(S, 1.0 - H) * num / (delta * (H - 1.0) * (H - 1.0 - delta));
        }
        return (head + b * phi) / p;
    }

    /// bound on |integral over [S, inf) of (w'-1) - lead_tail(S)|.
    double resid_bound(double S) const
    {
        const double q = std::min(H, beta_half);
        const double U = std::abs(a) + std::abs(b);
        const double r = 2.0 * q - 1.0;
        const double L1 = 1.0 + std::log(S);
        const double J = std::pow(S, -r) * (L1 * L1 / r + 2.0 * L1 / (r * r) + 2.0 / (r * r * r));
        return 2.0 * U * U * J;
    }

    double pick_cut(double s, double tol) const
    {
        double S = std::max(4.0 * s, 1e4);
        while (resid_bound(S) > tol && S < 3e12) S *= 4.0;
        return S;
    }

    /// integral over [s, inf) of (w' - 1), s >= s_valid.
    ValueWithError tail(double s, double tol = 1e-12) const
    {
        const double S = pick_cut(s, tol);
        QuadResult q = integrate_geometric([this](double t) { return wprime_excess(t); }, s, S,
                                           0.25 * tol, 1e-14);
        ValueWithError out;
        out.value = q.value + lead_tail(S);
        out.error = q.error + resid_bound(S);
        return out;
    }
};

} // namespace detail

/// Smallest c1 making the curvature factor of the family positive on all of
/// [1, inf), evaluated from the endpoint/limit values of its closed form and
/// padded so strict negativity of w'' survives rounding.
inline double threshold_c1(const QuotientIndices& idx, const SpdDiagonal& A,
                           const SourceEnvelope& env)
{
    idx.validate();
    const double hk = symfun::h_cap(idx.k, A);
    const double H = double(idx.degree()) / (2.0 * hk);
    if (!(H > 1.0))
        throw admissibility_error("threshold_c1: requires H_k(A) < (k-l)/2");
    double raw;
    if (env.C0 == 0.0) {
        raw = 1.0;
    } else if (env.log_branch(H) || H > env.beta / 2.0) {
        raw = 1.0 + env.C0;
    } else {
        raw = std::max(1.0 + env.C0,
                       1.0 + env.C0 * H / (env.beta / 2.0 - H));
    }
    const double padded = raw + safety_pad;

    // sanity sweep: just above the threshold the curvature factor stays positive
    const double c1_probe = padded + 1e-6;
    for (double s : geomspace(1.0, 1e8, 33)) {
        const double E = c1_probe - 1.0 + env.C0 * H * power_ratio(env.delta_of(H), s);
        const double G = E - env.C0 * std::pow(s, env.delta_of(H));
        if (!(G > 0.0))
            throw numerical_error("threshold_c1: positivity sweep failed at s = " +
                                  std::to_string(s));
    }
    return padded;
}

/// The decreasing-slope profile family solving
///   (w')^{k-l} + 2 H_k(A) w'' (w')^{k-l-1} s = g_bar(s),  s > 1,
/// by variation of constants; a uniformly k-convex subsolution of the
/// quotient equation outside the s0 sublevel set.
class SubFamily {
public:
    SubFamily(QuotientIndices idx, SpdDiagonal A, SourceEnvelope env, double c1, double c2)
        : idx_(idx), A_(std::move(A)), env_(std::move(env)), c1_(c1), c2_(c2)
    {
        idx_.validate();
        const symfun::Membership m = symfun::membership(idx_, A_);
        if (!m.in_script_A)
            throw admissibility_error("SubFamily: A must lie in the strict admissible set "
                                      "(quotient one, H_k < (k-l)/2)");
        hk_ = m.h_k;
        H_ = double(idx_.degree()) / (2.0 * hk_);
        c_tilde_ = threshold_c1(idx_, A_, env_);
        // The family closes up at c1 = 1 + C0 (curvature <= 0, zero exactly in
        // the source-free case); strict negativity needs c1 above c_tilde_.
        if (!(c1_ >= 1.0 + env_.C0 - 1e-12))
            throw threshold_error("SubFamily: c1 below the family bound " +
                                  std::to_string(1.0 + env_.C0) + " (strict threshold " +
                                  std::to_string(c_tilde_) + ")");
        kernel_.H = H_;
        kernel_.p = idx_.degree();
        kernel_.beta_half = env_.beta / 2.0;
        kernel_.delta = env_.delta_of(H_);
        kernel_.a = c1_ - 1.0;
        kernel_.b = env_.C0 * H_;
        kernel_.s_valid = 1.0;
        const detail::ValueWithError t0 = kernel_.tail(env_.s0);
        mu_ = c2_ - env_.s0 + t0.value;
        mu_error_ = t0.error;
    }

    const QuotientIndices& indices() const { return idx_; }
    const SpdDiagonal& matrix() const { return A_; }
    const SourceEnvelope& envelope() const { return env_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    double h_k() const { return hk_; }
    double script_exponent() const { return H_; }  // (k-l) / (2 H_k)
    double c_tilde() const { return c_tilde_; }
    double mu() const { return mu_; }
    double mu_error() const { return mu_error_; }
    bool log_case() const { return env_.C0 > 0.0 && env_.log_branch(H_); }

    struct Deriv {
        double w1;
        double w2;
    };

    Deriv w_prime(double s) const
    {
        if (!(s >= 1.0)) throw evaluation_domain_error("SubFamily: s must be >= 1");
        const double w1 = kernel_.wprime(s);
        const double G = kernel_.E(s) - env_.C0 * std::pow(s, kernel_.delta);
        const double w2 = -std::pow(s, -H_ - 1.0) / (2.0 * hk_) *
                          std::exp((1.0 - idx_.degree()) * std::log(w1)) * G;
        return {w1, w2};
    }

    /// integral over [s, inf) of (w' - 1).
    double tail(double s, double tol = 1e-12) const { return kernel_.tail(s, tol).value; }

    double value(double s) const
    {
        if (!(s >= 1.0)) throw evaluation_domain_error("SubFamily: s must be >= 1");
        return s + mu_ - kernel_.tail(s).value;
    }

    double ode_residual(double s) const
    {
        const Deriv d = w_prime(s);
        const int p = idx_.degree();
        return ipow(d.w1, p) + 2.0 * hk_ * d.w2 * ipow(d.w1, p - 1) * s - env_.g_bar(s);
    }

    gsym::GSymProfile profile() const
    {
        gsym::GSymProfile p;
        p.A = A_;
        p.w_prime = [*this](double s) { return w_prime(s).w1; };
        p.w_second = [*this](double s) { return w_prime(s).w2; };
        p.s_lo = 1.0;
        p.admissible_k = idx_.k;
        return p;
    }

    nlohmann::json to_json() const
    {
        return {{"n", idx_.n},      {"k", idx_.k},       {"l", idx_.l},
                {"a", A_.a},        {"C0", env_.C0},     {"beta", env_.beta},
                {"s0", env_.s0},    {"c1", c1_},         {"c2", c2_},
                {"mu", mu_}};
    }

private:
    QuotientIndices idx_;
    SpdDiagonal A_;
    SourceEnvelope env_;
    double c1_;
    double c2_;
    double hk_ = 0.0;
    double H_ = 0.0;
    double c_tilde_ = 0.0;
    double mu_ = 0.0;
    double mu_error_ = 0.0;
    detail::TailKernel kernel_;
};

/// Increasing-slope counterpart driven by the minorant, with the integration
/// constant of the slope set to zero; a supersolution on s >= 1 whose slope
/// vanishes at s = 1 (Hessian spectrum touches the cone boundary there).
class SuperFamily {
public:
    SuperFamily(QuotientIndices idx, SpdDiagonal A, SourceEnvelope env, double c2)
        : idx_(idx), A_(std::move(A)), env_(std::move(env)), c2_(c2)
    {
        idx_.validate();
        const symfun::Membership m = symfun::membership(idx_, A_);
        if (!m.in_script_A)
            throw admissibility_error("SuperFamily: A must lie in the strict admissible set");
        hk_ = m.h_k;
        H_ = double(idx_.degree()) / (2.0 * hk_);

        kernel_.H = H_;
        kernel_.p = idx_.degree();
        kernel_.beta_half = env_.beta / 2.0;
        kernel_.delta = env_.delta_of(H_);
        kernel_.b = -env_.C0 * H_;
        kernel_.s_valid = env_.s0;
        const double Eu_s0 = env_.inner_int_under(H_, env_.s0) - std::pow(env_.s0, H_);
        kernel_.a = Eu_s0 + env_.C0 * H_ * power_ratio(kernel_.delta, env_.s0);

        const detail::ValueWithError t1 = tail_with_error(1.0);
        mu_bar_ = c2_ - 1.0 + t1.value;
        mu_error_ = t1.error;
    }

    const QuotientIndices& indices() const { return idx_; }
    const SpdDiagonal& matrix() const { return A_; }
    const SourceEnvelope& envelope() const { return env_; }
    double c2() const { return c2_; }
    double h_k() const { return hk_; }
    double script_exponent() const { return H_; }
    double mu_bar() const { return mu_bar_; }
    double mu_error() const { return mu_error_; }
    bool log_case() const { return env_.C0 > 0.0 && env_.log_branch(H_); }

    /// Slope of the profile; zero at s = 1 by construction.
    double w1(double s) const
    {
        if (!(s >= 1.0)) throw evaluation_domain_error("SuperFamily: s must be >= 1");
        if (s == 1.0) return 0.0;
        if (s >= env_.s0) return kernel_.wprime(s);
        const double inner = env_.inner_int_under(H_, s);
        return std::exp((std::log(inner) - H_ * std::log(s)) / idx_.degree());
    }

    double w2(double s) const
    {
        if (!(s >= 1.0)) throw evaluation_domain_error("SuperFamily: s must be >= 1");
        const double slope = w1(s);
        if (!(slope > 0.0))
            throw evaluation_domain_error("SuperFamily: curvature undefined at the "
                                          "degenerate inner edge s = 1");
        const double inner = s >= env_.s0 ? std::pow(s, H_) + kernel_.E(s)
                                          : env_.inner_int_under(H_, s);
        const double G = inner - std::pow(s, H_) * env_.g_under(s);
        return -std::pow(s, -H_ - 1.0) / (2.0 * hk_) *
               std::exp((1.0 - idx_.degree()) * std::log(slope)) * G;
    }

    struct Eval {
        double w;
        double w1;
        double w2;
    };

    Eval at(double s) const
    {
        Eval e;
        e.w = value(s);
        e.w1 = w1(s);
        if (s > 1.0) {
            e.w2 = w2(s);
        } else if (idx_.degree() == 1) {
            e.w2 = env_.g_under(1.0) / (2.0 * hk_);  // limit value of the curvature
        } else {
            // curvature blows up like (s-1)^{1/(k-l)-1} at the degenerate edge
            e.w2 = std::numeric_limits<double>::infinity();
        }
        return e;
    }

    double tail(double s, double tol = 1e-12) const { return tail_with_error(s, tol).value; }

    double value(double s) const
    {
        if (!(s >= 1.0)) throw evaluation_domain_error("SuperFamily: s must be >= 1");
        return s + mu_bar_ - tail_with_error(s).value;
    }

    double ode_residual(double s) const
    {
        const double slope = w1(s);
        const double curv = w2(s);
        const int p = idx_.degree();
        return ipow(slope, p) + 2.0 * hk_ * curv * ipow(slope, p - 1) * s - env_.g_under(s);
    }

    gsym::GSymProfile profile() const
    {
        gsym::GSymProfile p;
        p.A = A_;
        p.w_prime = [*this](double s) { return w1(s); };
        p.w_second = [*this](double s) { return w2(s); };
        p.s_lo = 1.0;
        p.admissible_k = idx_.k;
        return p;
    }

    nlohmann::json to_json() const
    {
        return {{"n", idx_.n},   {"k", idx_.k},   {"l", idx_.l},  {"a", A_.a},
                {"C0", env_.C0}, {"beta", env_.beta}, {"s0", env_.s0},
                {"c1", 0.0},     {"c2", c2_},     {"mu", mu_bar_}};
    }

    /// c2 achieving mu_bar(c2) = c; always >= c since the minorant is <= 1.
    static double c2_for(const QuotientIndices& idx, const SpdDiagonal& A,
                         const SourceEnvelope& env, double c)
    {
        SuperFamily probe(idx, A, env, 0.0);
        return c + 1.0 - probe.tail(1.0);
    }

private:
    detail::ValueWithError tail_with_error(double s, double tol = 1e-12) const
    {
        detail::ValueWithError out;
        const double split = std::max(s, env_.s0);
        if (s < split) {
            QuadResult q = integrate([this](double t) { return w1(t) - 1.0; }, s, split,
                                     0.25 * tol, 1e-14);
            out.value += q.value;
            out.error += q.error;
        }
        const detail::ValueWithError k = kernel_.tail(split, tol);
        out.value += k.value;
        out.error += k.error;
        return out;
    }

    QuotientIndices idx_;
    SpdDiagonal A_;
    SourceEnvelope env_;
    double c2_;
    double hk_ = 0.0;
    double H_ = 0.0;
    double mu_bar_ = 0.0;
    double mu_error_ = 0.0;
    detail::TailKernel kernel_;
};

/// Anchor value for the monotone c1 inversion: one above the threshold.
inline double alpha_anchor(const QuotientIndices& idx, const SpdDiagonal& A,
                           const SourceEnvelope& env)
{
    return threshold_c1(idx, A, env) + 1.0;
}

/// Slope and curvature of the decreasing family, spec-facing free form.
inline SubFamily::Deriv sub_w_prime(const SubFamily& f, double s) { return f.w_prime(s); }

struct SuperEval {
    double w;
    double w1;
    double w2;
};

inline SuperEval super_w(const SuperFamily& f, double s)
{
    const SuperFamily::Eval e = f.at(s);
    return {e.w, e.w1, e.w2};
}

/// mu(c1, c2) of the decreasing-slope family.
inline detail::ValueWithError mu_sub_with_error(const QuotientIndices& idx, const SpdDiagonal& A,
                                                const SourceEnvelope& env, double c1, double c2)
{
    SubFamily f(idx, A, env, c1, c2);
    return {f.mu(), f.mu_error()};
}

inline double mu_sub(const SubFamily& f) { return f.mu(); }

/// Solve mu(c1, m_s0) = c for c1 on (alpha, inf); bracketing plus a
/// safeguarded secant on the strictly increasing map.
inline double invert_c1(const QuotientIndices& idx, const SpdDiagonal& A,
                        const SourceEnvelope& env, double m_s0, double c,
                        double tol = 1e-10)
{
    const double alpha = alpha_anchor(idx, A, env);
    auto mu_of = [&](double c1) { return SubFamily(idx, A, env, c1, m_s0).mu(); };

    double lo = alpha;
    double f_lo = mu_of(lo) - c;
    if (f_lo > 0.0)
        throw range_error("invert_c1: target below attainable range, mu(alpha, m_s0) = " +
                          std::to_string(f_lo + c));

    double hi = alpha + 1.0;
    double f_hi = mu_of(hi) - c;
    int grow = 0;
    while (f_hi < 0.0) {
        lo = hi;
        f_lo = f_hi;
        hi = alpha + (hi - alpha) * 2.0;
        f_hi = mu_of(hi) - c;
        if (++grow > 80)
            throw numerical_error("invert_c1: failed to bracket the target");
    }

    double x = hi;
    double fx = f_hi;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(fx) <= tol) return x;
        double trial = x - fx * (hi - lo) / (f_hi - f_lo);
        if (!(trial > lo && trial < hi)) trial = 0.5 * (lo + hi);
        const double f_trial = mu_of(trial) - c;
        if (f_trial > 0.0) {
            hi = trial;
            f_hi = f_trial;
        } else {
            lo = trial;
            f_lo = f_trial;
        }
        x = trial;
        fx = f_trial;
    }
    throw numerical_error("invert_c1: secant/bisection did not reach tolerance");
}

struct SuperInversion {
    double mu_bar;
    double c2_of_c;
};

/// mu_bar at the given c2, plus the c2 achieving mu_bar = c.
inline SuperInversion mu_super_and_invert_c2(const QuotientIndices& idx, const SpdDiagonal& A,
                                             const SourceEnvelope& env, double c2, double c)
{
    SuperFamily f(idx, A, env, c2);
    return {f.mu_bar(), SuperFamily::c2_for(idx, A, env, c)};
}

struct AsymptoticCertificate {
    double exponent_fit = 0.0;
    bool log_case = false;
    bool exact_flag = false;
    double max_weighted_err = 0.0;
    double fit_residual = 0.0;
};

namespace detail {

template <class TailFn>
AsymptoticCertificate certify_rate(TailFn&& tail_of, double H, double beta, bool log_case)
{
    AsymptoticCertificate cert;
    cert.log_case = log_case;
    const Vec ss = geomspace(1e2, 1e6, 25);
    Vec xs, ys;
    const double m = std::min(beta / 2.0, H);
    double max_err = 0.0;
    for (double s : ss) {
        const double err = std::abs(tail_of(s));
        max_err = std::max(max_err, err);
        const double weight = log_case ? std::pow(s, H - 1.0) / std::log(s)
                                       : std::pow(s, m - 1.0);
        cert.max_weighted_err = std::max(cert.max_weighted_err, weight * err);
        if (err > 0.0) {
            const double y = log_case ? std::log(err / std::log(s)) : std::log(err);
            xs.push_back(std::log(s));
            ys.push_back(y);
        }
    }
    if (max_err <= 1e-13) {
        cert.exact_flag = true;
        return cert;
    }
    // least squares slope of y against x
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = double(n) * sxx - sx * sx;
    cert.exponent_fit = (double(n) * sxy - sx * sy) / denom;
    const double intercept = (sy - cert.exponent_fit * sx) / double(n);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (intercept + cert.exponent_fit * xs[i]);
        rss += r * r;
    }
    cert.fit_residual = std::sqrt(rss / double(n));
    return cert;
}

} // namespace detail

inline AsymptoticCertificate asymptotic_certificate(const SubFamily& f)
{
    return detail::certify_rate([&f](double s) { return f.tail(s); }, f.script_exponent(),
                                f.envelope().beta, f.log_case());
}

inline AsymptoticCertificate asymptotic_certificate(const SuperFamily& f)
{
    return detail::certify_rate([&f](double s) { return f.tail(s); }, f.script_exponent(),
                                f.envelope().beta, f.log_case());
}

/// Outcome of the pointwise sub/supersolution checks of one family.
struct FamilyCertificate {
    bool pass = true;
    double max_residual = 0.0;        // |ODE residual| / g_envelope
    double worst_curvature = 0.0;     // max w'' for sub (want < 0), min for super (want >= 0)
    double min_sigma = 0.0;           // min over sampled sigma_m, m <= k
    double min_margin = 0.0;          // quotient vs envelope, signed toward validity
    double min_slope_combination = 0.0;  // w' + 2 H_k w'' s, sub only
    std::string detail;

    nlohmann::json to_json() const
    {
        return {{"pass", pass},
                {"max_residual", max_residual},
                {"worst_curvature", worst_curvature},
                {"min_sigma", min_sigma},
                {"min_margin", min_margin},
                {"min_slope_combination", min_slope_combination},
                {"detail", detail}};
    }
};

namespace detail {

inline std::vector<Vec> random_directions(int n, std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc909ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> dirs;
    dirs.reserve(count);
    while (dirs.size() < count) {
        Vec u(std::size_t(n), 0.0);
        for (double& v : u) v = gauss(rng);
        const double nrm = norm2(u);
        if (nrm < 1e-8) continue;
        for (double& v : u) v /= nrm;
        dirs.push_back(std::move(u));
    }
    return dirs;
}

} // namespace detail

/// Sampled verification that the family is a uniformly k-convex subsolution:
/// ODE residual at machine scale, strictly negative curvature, positive
/// sigma_m through order k, quotient above the upper envelope and the source.
inline FamilyCertificate certify_subsolution(const SubFamily& f, std::uint64_t seed = 0,
                                             std::size_t n_points = 50)
{
    FamilyCertificate cert;
    const SourceEnvelope& env = f.envelope();
    const QuotientIndices& idx = f.indices();
    const gsym::GSymProfile prof = f.profile();
    const Vec ss = geomspace(env.s0, 1e3 * env.s0, n_points);
    const std::vector<Vec> dirs = detail::random_directions(idx.n, n_points, seed);
    cert.worst_curvature = -std::numeric_limits<double>::infinity();
    cert.min_sigma = std::numeric_limits<double>::infinity();
    cert.min_margin = std::numeric_limits<double>::infinity();
    cert.min_slope_combination = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < ss.size(); ++i) {
        const double s = ss[i];
        const double gbar = env.g_bar(s);
        const SubFamily::Deriv d = f.w_prime(s);
        cert.max_residual = std::max(cert.max_residual, std::abs(f.ode_residual(s)) / gbar);
        cert.worst_curvature = std::max(cert.worst_curvature, d.w2);
        cert.min_slope_combination =
            std::min(cert.min_slope_combination, d.w1 + 2.0 * f.h_k() * d.w2 * s);

        const Vec x = gsym::point_at_level(f.matrix(), dirs[i], s);
        for (int m = 1; m <= idx.k; ++m)
            cert.min_sigma = std::min(cert.min_sigma, gsym::sigma_of_gsym_hessian(m, prof, x));
        const double q = gsym::quotient_of_gsym(idx, prof, x);
        const double g_here = env.g(s);
        cert.min_margin = std::min({cert.min_margin, q - gbar * (1.0 - 1e-10) + 1e-12,
                                    gbar - g_here + 1e-12});
    }
    cert.pass = cert.max_residual <= 1e-8 && cert.worst_curvature < 0.0 &&
                cert.min_sigma > 0.0 && cert.min_margin >= 0.0 &&
                cert.min_slope_combination > 0.0;
    if (!cert.pass) cert.detail = "subsolution check failed";
    return cert;
}

/// Mirror checks for the supersolution: nonnegative curvature, slope in (0,1],
/// quotient below the minorant and the source.
inline FamilyCertificate certify_supersolution(const SuperFamily& f, std::uint64_t seed = 0,
                                               std::size_t n_points = 50)
{
    FamilyCertificate cert;
    const SourceEnvelope& env = f.envelope();
    const QuotientIndices& idx = f.indices();
    const gsym::GSymProfile prof = f.profile();
    const Vec ss = geomspace(1.0 + 1e-4, 1e3 * env.s0, n_points);
    const std::vector<Vec> dirs = detail::random_directions(idx.n, n_points, seed + 1);
    cert.worst_curvature = std::numeric_limits<double>::infinity();
    cert.min_sigma = std::numeric_limits<double>::infinity();
    cert.min_margin = std::numeric_limits<double>::infinity();
    double max_slope = 0.0;

    for (std::size_t i = 0; i < ss.size(); ++i) {
        const double s = ss[i];
        const double gu = env.g_under(s);
        cert.max_residual =
            std::max(cert.max_residual, std::abs(f.ode_residual(s)) / std::max(gu, 1e-6));
        const double w2 = f.w2(s);
        cert.worst_curvature = std::min(cert.worst_curvature, w2);
        max_slope = std::max(max_slope, f.w1(s));

        const Vec x = gsym::point_at_level(f.matrix(), dirs[i], s);
        for (int m = 1; m <= idx.k; ++m)
            cert.min_sigma = std::min(cert.min_sigma, gsym::sigma_of_gsym_hessian(m, prof, x));
        const double q = gsym::quotient_of_gsym(idx, prof, x);
        const double g_here = env.g(s);
        cert.min_margin = std::min({cert.min_margin, gu * (1.0 + 1e-10) - q + 1e-12,
                                    g_here - gu + 1e-12});
    }
    cert.min_slope_combination = max_slope;  // reused to report sup w' <= 1
    cert.pass = cert.max_residual <= 1e-8 && cert.worst_curvature >= 0.0 &&
                cert.min_sigma > 0.0 && cert.min_margin >= 0.0 &&
                max_slope <= 1.0 + 1e-12;
    if (!cert.pass) cert.detail = "supersolution check failed";
    return cert;
}

struct NormalizedProblem {
    SpdDiagonal A;     // sorted eigenvalues of the input
    Matrix rotation;   // columns are eigenvectors; input = Q diag Q^T
    Vec b_rotated;     // linear coefficient in rotated coordinates
};

/// Orthogonal reduction of a general SPD quadratic-plus-linear problem to the
/// diagonal, zero-linear normal form used throughout.
inline NormalizedProblem normalize_problem(const Matrix& a_full, const Vec& b)
{
    const std::size_t n = a_full.size();
    if (b.size() != n) throw index_range_error("normalize_problem: dimension mismatch");
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a_full(i, j)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a_full(i, j) - a_full(j, i)) > 1e-12 * std::max(scale, 1.0))
                throw admissibility_error("normalize_problem: matrix must be symmetric");

    EigenSym es = jacobi_eigensystem(a_full, /*want_vectors=*/true);
    for (double v : es.values)
        if (!(v > 0.0))
            throw admissibility_error("normalize_problem: matrix must be positive definite");

    NormalizedProblem out;
    out.A = SpdDiagonal::of(es.values);
    out.rotation = es.vectors;
    Vec br(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) br[j] += es.vectors(i, j) * b[i];
    out.b_rotated = std::move(br);
    return out;
}

} // namespace hq::construct
