#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hq/construct.hpp"
#include "hq/errors.hpp"
#include "hq/linalg.hpp"
#include "hq/radial_operator.hpp"
#include "hq/viscosity.hpp"

namespace hq::radial {

using construct::SourceEnvelope;
using construct::SubFamily;
using construct::SuperFamily;
using symfun::SpdDiagonal;
using viscosity::GridFunction1D;
using viscosity::Verdict;

enum class Mesh { Uniform, Geometric };

/// Dirichlet problem for the isotropic radial reduction on [s_in, s_out].
struct RadialProblem {
    QuotientIndices idx;
    double a = 1.0;
    double s_in = 1.0;
    double s_out = 10.0;
    std::function<double(double)> g;
    double bc_in = 0.0;
    double bc_out = 0.0;
    std::function<double(double)> initial;  // optional admissible initial profile
    Mesh mesh = Mesh::Uniform;

    void validate() const
    {
        idx.validate();
        if (!(a > 0.0)) throw admissibility_error("RadialProblem: a must be positive");
        if (!(1.0 <= s_in && s_in < s_out))
            throw evaluation_domain_error("RadialProblem: need 1 <= s_in < s_out");
        if (!g) throw configuration_error("RadialProblem: source g not set");
    }
};

struct ConvergenceStep {
    int iter;
    double residual;
    double damping;
};

struct RadialSolution {
    Vec s;
    Vec w;
    Vec w1;
    Vec w2;
    Vec residual;
    double residual_norm = 0.0;
    double rounding_floor = 0.0;  // estimated attainable residual in this arithmetic
    std::vector<std::uint8_t> admissible;
    std::vector<ConvergenceStep> log;

    GridFunction1D grid() const
    {
        GridFunction1D g = GridFunction1D::on(s, w);
        return g;
    }

    nlohmann::json log_json() const
    {
        nlohmann::json j = nlohmann::json::array();
        for (const ConvergenceStep& st : log)
            j.push_back({{"iter", st.iter}, {"residual", st.residual}, {"damping", st.damping}});
        return j;
    }
};

namespace detail {

inline void thomas_solve(Vec& lower, Vec& diag, Vec& upper, Vec& rhs)
{
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

struct Stencil {
    double w1;
    double w2;
};

/// Three-point derivative weights on a possibly nonuniform grid, exact for
/// quadratics.
struct StencilWeights {
    double a_prev, a_mid, a_next;  // first derivative
    double b_prev, b_mid, b_next;  // second derivative

    static StencilWeights at(double h_left, double h_right)
    {
        const double d = h_left * h_right * (h_left + h_right);
        StencilWeights w;
        w.a_next = h_left * h_left / d;
        w.a_mid = (h_right * h_right - h_left * h_left) / d;
        w.a_prev = -h_right * h_right / d;
        w.b_next = 2.0 * h_left / d;
        w.b_mid = -2.0 * (h_left + h_right) / d;
        w.b_prev = 2.0 * h_right / d;
        return w;
    }
};

inline Stencil stencil(const Vec& s, const Vec& w, std::size_t i)
{
    const StencilWeights sw = StencilWeights::at(s[i] - s[i - 1], s[i + 1] - s[i]);
    return {sw.a_prev * w[i - 1] + sw.a_mid * w[i] + sw.a_next * w[i + 1],
            sw.b_prev * w[i - 1] + sw.b_mid * w[i] + sw.b_next * w[i + 1]};
}

} // namespace detail

namespace detail {

inline std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

} // namespace detail

/// Damped Newton iteration on the three-point discretization of
/// radial_operator(s, w', w'') = g(s). The unknown is the deviation from the
/// boundary chord, which keeps the difference stencils well scaled on large
/// domains. Iterates stay admissible: the step is shrunk until every node
/// keeps its Hessian spectrum in Gamma_k.
inline RadialSolution solve_bvp(const RadialProblem& prob, int N, double tol = 1e-9,
                                int max_iter = 60)
{
    prob.validate();
    if (N < 8) throw configuration_error("solve_bvp: need at least 8 intervals");

    const std::size_t nodes = std::size_t(N) + 1;
    Vec s = prob.mesh == Mesh::Geometric ? geomspace(prob.s_in, prob.s_out, nodes)
                                         : linspace(prob.s_in, prob.s_out, nodes);

    const double chord = (prob.bc_out - prob.bc_in) / (prob.s_out - prob.s_in);
    auto line = [&](double x) { return prob.bc_in + chord * (x - prob.s_in); };

    Vec v(nodes, 0.0);  // unknown deviation: w = line + v
    if (prob.initial) {
        for (std::size_t i = 0; i < nodes; ++i) v[i] = prob.initial(s[i]) - line(s[i]);
        v.front() = 0.0;
        v.back() = 0.0;
    }

    auto jet_at = [&](const Vec& cand, std::size_t i) {
        const detail::Stencil st = detail::stencil(s, cand, i);
        return detail::Stencil{chord + st.w1, st.w2};
    };

    auto all_admissible = [&](const Vec& cand) {
        for (std::size_t i = 1; i + 1 < nodes; ++i) {
            const detail::Stencil st = jet_at(cand, i);
            if (!admissible_jet(prob.idx, prob.a, s[i], st.w1, st.w2)) return false;
        }
        return true;
    };

    auto residual_of = [&](const Vec& cand, Vec& out) {
        double norm = 0.0;
        for (std::size_t i = 1; i + 1 < nodes; ++i) {
            const detail::Stencil st = jet_at(cand, i);
            const double r = radial_operator(prob.idx, prob.a, s[i], st.w1, st.w2) - prob.g(s[i]);
            out[i] = r;
            norm = std::max(norm, std::abs(r));
        }
        return norm;
    };

    if (!all_admissible(v))
        throw initialization_error("solve_bvp: initial guess not admissible");

    RadialSolution sol;
    Vec F(nodes, 0.0);
    double norm = residual_of(v, F);
    sol.log.push_back({0, norm, 1.0});

    double floor_est = 0.0;
    double best_recent = norm;
    int since_progress = 0;

    for (int iter = 1; iter <= max_iter && norm > tol; ++iter) {
        // tridiagonal Jacobian of the interior residuals, plus a running
        // estimate of the rounding floor of the residual evaluation
        const std::size_t m = nodes - 2;
        Vec lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m, 0.0);
        floor_est = 0.0;
        for (std::size_t i = 1; i + 1 < nodes; ++i) {
            const detail::Stencil st = jet_at(v, i);
            const auto sw = detail::StencilWeights::at(s[i] - s[i - 1], s[i + 1] - s[i]);
            const OperatorJet jet = radial_operator_jet(prob.idx, prob.a, s[i], st.w1, st.w2);
            const double dm = jet.d_w1 * sw.a_prev + jet.d_w2 * sw.b_prev;
            const double dc = jet.d_w1 * sw.a_mid + jet.d_w2 * sw.b_mid;
            const double dp = jet.d_w1 * sw.a_next + jet.d_w2 * sw.b_next;
            const std::size_t r = i - 1;
            if (r > 0) lower[r] = dm;
            diag[r] = dc;
            if (r + 1 < m) upper[r] = dp;
            rhs[r] = -F[i];

            const double vmag =
                std::max({std::abs(v[i - 1]), std::abs(v[i]), std::abs(v[i + 1]), 1.0});
            const double eps = std::numeric_limits<double>::epsilon();
            floor_est = std::max(floor_est,
                                 4.0 * eps * vmag *
                                     (std::abs(jet.d_w2) * std::abs(sw.b_mid) +
                                      std::abs(jet.d_w1) * std::abs(sw.a_next)));
        }
        detail::thomas_solve(lower, diag, upper, rhs);

        double alpha = 1.0;
        bool accepted = false;
        Vec trial = v;
        Vec Ftrial(nodes, 0.0);
        for (int halving = 0; halving <= 20; ++halving) {
            for (std::size_t i = 1; i + 1 < nodes; ++i) trial[i] = v[i] + alpha * rhs[i - 1];
            if (all_admissible(trial)) {
                const double norm_trial = residual_of(trial, Ftrial);
                if (norm_trial <= (1.0 - 1e-4 * alpha) * norm) {
                    v = trial;
                    F = Ftrial;
                    norm = norm_trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        sol.log.push_back({iter, norm, accepted ? alpha : 0.0});
        if (!accepted) {
            if (norm <= std::max(tol, 8.0 * floor_est)) break;  // at the arithmetic floor
            throw nonconvergence_error("solve_bvp: line search failed at iter " +
                                       std::to_string(iter) + ", residual " + detail::sci(norm) +
                                       " (floor estimate " + detail::sci(floor_est) + ")");
        }
        if (norm < 1e-2 * best_recent) {
            best_recent = norm;
            since_progress = 0;
        } else if (++since_progress >= 30) {
            throw nonconvergence_error("solve_bvp: stagnation, residual " + detail::sci(norm) +
                                       " after " + std::to_string(iter) + " iterations");
        }
    }
    if (norm > std::max(tol, 8.0 * floor_est))
        throw nonconvergence_error("solve_bvp: residual " + detail::sci(norm) +
                                   " above tolerance after " + std::to_string(max_iter) +
                                   " iterations");

    Vec w(nodes);
    for (std::size_t i = 0; i < nodes; ++i) w[i] = line(s[i]) + v[i];
    w.front() = prob.bc_in;
    w.back() = prob.bc_out;
    sol.rounding_floor = floor_est;

    sol.residual = std::move(F);
    sol.residual_norm = norm;
    sol.w1.assign(nodes, 0.0);
    sol.w2.assign(nodes, 0.0);
    sol.admissible.assign(nodes, 1);
    for (std::size_t i = 1; i + 1 < nodes; ++i) {
        const detail::Stencil st = detail::stencil(s, v, i);
        sol.w1[i] = chord + st.w1;
        sol.w2[i] = st.w2;
        sol.admissible[i] =
            admissible_jet(prob.idx, prob.a, s[i], sol.w1[i], sol.w2[i]) ? 1 : 0;
    }
    // one-sided slopes at the ends, curvature copied inward
    sol.w1.front() = chord + (v[1] - v[0]) / (s[1] - s[0]);
    sol.w1.back() = chord + (v[nodes - 1] - v[nodes - 2]) / (s[nodes - 1] - s[nodes - 2]);
    sol.w2.front() = sol.w2[1];
    sol.w2.back() = sol.w2[nodes - 2];
    sol.s = std::move(s);
    sol.w = std::move(w);
    return sol;
}

struct SandwichCertificate {
    Verdict verdict = Verdict::FAIL;
    double max_lower_violation = 0.0;  // positive means the sub profile pokes above w_h
    double max_upper_violation = 0.0;
    std::size_t worst_node = 0;
    double tol = 0.0;

    nlohmann::json to_json() const
    {
        return {{"verdict", verdict == Verdict::PASS ? "PASS" : "FAIL"},
                {"max_lower_violation", max_lower_violation},
                {"max_upper_violation", max_upper_violation},
                {"worst_node", worst_node},
                {"tol", tol}};
    }
};

/// Nodewise check of sub <= w_h <= super for a converged radial solution.
inline SandwichCertificate sandwich_certify(const RadialProblem& prob, const RadialSolution& sol,
                                            const SubFamily& sub, const SuperFamily& sup,
                                            double tol = 0.0)
{
    if (sub.indices().n != prob.idx.n || sup.indices().n != prob.idx.n)
        throw configuration_error("sandwich_certify: family dimensions disagree with problem");
    SandwichCertificate cert;
    double scale = 1.0;
    for (double v : sol.w) scale = std::max(scale, std::abs(v));
    cert.tol = tol > 0.0 ? tol : 1e-6 * scale;

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sol.s.size(); ++i) {
        const double lo = sub.value(sol.s[i]);
        const double hi = sup.value(sol.s[i]);
        const double lower_violation = lo - sol.w[i];
        const double upper_violation = sol.w[i] - hi;
        cert.max_lower_violation = std::max(cert.max_lower_violation, lower_violation);
        cert.max_upper_violation = std::max(cert.max_upper_violation, upper_violation);
        const double v = std::max(lower_violation, upper_violation);
        if (v > worst) {
            worst = v;
            cert.worst_node = i;
        }
    }
    cert.verdict = (cert.max_lower_violation <= cert.tol && cert.max_upper_violation <= cert.tol)
                       ? Verdict::PASS
                       : Verdict::FAIL;
    return cert;
}

/// CSV dump of a solution, optionally with the bracketing profiles.
inline void write_solution_csv(std::ostream& os, const RadialSolution& sol,
                               const SubFamily* sub = nullptr, const SuperFamily* sup = nullptr)
{
    os << "s,w,w1,w2,residual";
    if (sub) os << ",sub";
    if (sup) os << ",super";
    os << "\n";
    char buf[64];
    auto put = [&os, &buf](double v, bool lead_comma = true) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        if (lead_comma) os << ',';
        os << buf;
    };
    for (std::size_t i = 0; i < sol.s.size(); ++i) {
        put(sol.s[i], false);
        put(sol.w[i]);
        put(sol.w1[i]);
        put(sol.w2[i]);
        put(sol.residual[i]);
        if (sub) put(sub->value(sol.s[i]));
        if (sup) put(sup->value(sol.s[i]));
        os << "\n";
    }
}

enum class BcMode { Asymptote, Subsolution };

struct FarFieldRequest {
    QuotientIndices idx;
    double a = 1.0;
    SourceEnvelope env = SourceEnvelope::constant_one();
    double c = 0.0;
    double m_inner = 0.0;  // c2 anchor of the subsolution used for the inner data
    std::vector<double> s_outs = {1e2, 1e3, 1e4};
    int nodes = 6000;
    BcMode inner_bc = BcMode::Subsolution;
    BcMode outer_bc = BcMode::Asymptote;
};

struct FarFieldRate {
    double exponent_fit = 0.0;
    double predicted = 0.0;  // 1 - min(beta/2, (k-l)/(2 H_k)), the certified envelope rate
    bool log_case = false;
    bool exact_flag = false;
    double offset = 0.0;     // fitted constant absorbed by the truncation boundary
    double amplitude = 0.0;  // fitted coefficient of the power mode
    double rss = 0.0;
    double max_weighted_dev = 0.0;  // sup over the band of the envelope-weighted deviation
    std::vector<double> residual_norms;
};

/// Fit the decay exponent of |w_h - s - c| from a sequence of truncated
/// solves; the model carries a free constant for the mode injected by the
/// outer Dirichlet truncation.
inline FarFieldRate far_field_rate(const FarFieldRequest& req)
{
    req.idx.validate();
    if (req.s_outs.size() < 2)
        throw range_error("far_field_rate: need at least two expanding domains");

    const SpdDiagonal A = SpdDiagonal::isotropic(req.idx.n, req.a);
    const double hk = symfun::h_cap(req.idx.k, A);
    const double H = double(req.idx.degree()) / (2.0 * hk);
    const bool log_case =
        req.env.C0 > 0.0 && std::abs(H - req.env.beta / 2.0) <= construct::branch_eps;

    std::optional<SubFamily> sub;
    if (req.inner_bc == BcMode::Subsolution || req.outer_bc == BcMode::Subsolution) {
        const double c1 = construct::invert_c1(req.idx, A, req.env, req.m_inner, req.c);
        sub.emplace(req.idx, A, req.env, c1, req.m_inner);
    }

    FarFieldRate out;
    out.log_case = log_case;
    out.predicted = 1.0 - std::min(req.env.beta / 2.0, H);

    double s_out_max = 0.0;
    RadialSolution largest;
    for (double s_out : req.s_outs) {
        RadialProblem prob;
        prob.idx = req.idx;
        prob.a = req.a;
        prob.s_in = req.env.s0;
        prob.s_out = s_out;
        prob.mesh = Mesh::Geometric;
        prob.g = [env = req.env](double s) { return env.g(s); };
        prob.bc_in = req.inner_bc == BcMode::Asymptote ? prob.s_in + req.c
                                                       : sub->value(prob.s_in);
        prob.bc_out = req.outer_bc == BcMode::Asymptote ? s_out + req.c
                                                        : sub->value(s_out);
        if (sub) {
            prob.initial = [f = *sub](double s) { return f.value(s); };
        }
        RadialSolution sol = solve_bvp(prob, req.nodes);
        out.residual_norms.push_back(sol.residual_norm);
        if (s_out > s_out_max) {
            s_out_max = s_out;
            largest = std::move(sol);
        }
    }

    // sample band clear of both boundaries
    const double fit_lo = std::max(4.0 * req.env.s0, 20.0);
    const double fit_hi = s_out_max / 8.0;

    const double m_rate = std::min(req.env.beta / 2.0, H);
    Vec xs, ys;
    double max_abs = 0.0;
    for (double target : geomspace(fit_lo, std::max(fit_hi, 2.0 * fit_lo), 60)) {
        const auto it = std::lower_bound(largest.s.begin(), largest.s.end(), target);
        const std::size_t i = std::size_t(it - largest.s.begin());
        if (i == 0 || i >= largest.s.size()) continue;
        const double s = largest.s[i];
        const double y = largest.w[i] - s - req.c;
        xs.push_back(s);
        ys.push_back(y);
        max_abs = std::max(max_abs, std::abs(y));
        const double weight =
            log_case ? std::pow(s, m_rate - 1.0) / std::log(s) : std::pow(s, m_rate - 1.0);
        out.max_weighted_dev = std::max(out.max_weighted_dev, weight * std::abs(y));
    }
    if (max_abs <= 1e-10 * (1.0 + std::abs(req.c))) {
        out.exact_flag = true;
        return out;
    }
    if (!(fit_hi / fit_lo >= 10.0))
        throw range_error("far_field_rate: insufficient decade span in the fit band");

    // least squares over p of  y = B + K s^p ln s + K2 s^p  (the plain power
    // carries the truncation-injected mode; no ln term outside the log case)
    const std::size_t nb = log_case ? 3 : 2;
    auto fit_for = [&](double p, Vec& coef) {
        double ata[3][3] = {};
        double aty[3] = {};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double sp = std::pow(xs[i], p);
            const double basis[3] = {1.0, log_case ? sp * std::log(xs[i]) : sp, sp};
            for (std::size_t r = 0; r < nb; ++r) {
                aty[r] += basis[r] * ys[i];
                for (std::size_t c = 0; c < nb; ++c) ata[r][c] += basis[r] * basis[c];
            }
        }
        // tiny Gaussian elimination with partial pivoting
        std::size_t perm[3] = {0, 1, 2};
        for (std::size_t col = 0; col < nb; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < nb; ++r)
                if (std::abs(ata[perm[r]][col]) > std::abs(ata[perm[piv]][col])) piv = r;
            std::swap(perm[col], perm[piv]);
            const double d = ata[perm[col]][col];
            for (std::size_t r = col + 1; r < nb; ++r) {
                const double f = ata[perm[r]][col] / d;
                for (std::size_t c = col; c < nb; ++c) ata[perm[r]][c] -= f * ata[perm[col]][c];
                aty[perm[r]] -= f * aty[perm[col]];
            }
        }
        coef.assign(nb, 0.0);
        for (std::size_t col = nb; col-- > 0;) {
            double acc = aty[perm[col]];
            for (std::size_t c = col + 1; c < nb; ++c) acc -= ata[perm[col]][c] * coef[c];
            coef[col] = acc / ata[perm[col]][col];
        }
        double rss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double sp = std::pow(xs[i], p);
            const double basis[3] = {1.0, log_case ? sp * std::log(xs[i]) : sp, sp};
            double fitv = 0.0;
            for (std::size_t r = 0; r < nb; ++r) fitv += coef[r] * basis[r];
            rss += (ys[i] - fitv) * (ys[i] - fitv);
        }
        return rss;
    };

    const double p_lo = 1.0 - std::max(req.env.beta / 2.0, H) - 1.0;
    double best_p = p_lo, best_rss = std::numeric_limits<double>::infinity();
    Vec best_coef;
    for (double p = p_lo; p <= -1e-3; p += 0.005) {
        Vec coef;
        const double rss = fit_for(p, coef);
        if (rss < best_rss) {
            best_rss = rss;
            best_p = p;
            best_coef = coef;
        }
    }
    out.exponent_fit = best_p;
    out.offset = best_coef.empty() ? 0.0 : best_coef[0];
    out.amplitude = best_coef.size() > 1 ? best_coef[1] : 0.0;
    out.rss = best_rss;
    return out;
}

} // namespace hq::radial
