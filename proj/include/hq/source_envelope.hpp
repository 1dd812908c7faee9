#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "hq/errors.hpp"
#include "hq/linalg.hpp"
#include "hq/quadrature.hpp"

namespace hq::construct {

/// (s^delta - 1)/delta, continuous through delta = 0 where it equals ln s.
inline double power_ratio(double delta, double s)
{
    const double L = std::log(s);
    if (delta == 0.0) return L;
    return std::expm1(delta * L) / delta;
}

/// Width of the branch window treated as the logarithmic case.
inline constexpr double branch_eps = 1e-9;

/// Radial right-hand-side data: the source g as a function of s = x'Ax/2,
/// the constants (C0, beta, s0) of its power-law envelopes, the upper
/// envelope 1 + C0 s^{-beta/2}, and an increasing minorant that matches
/// 1 - C0 s^{-beta/2} beyond s0.
///
/// The minorant is assembled as: constant floor on [1, blend_lo], a monotone
/// cubic blend on [blend_lo, s0], the power tail beyond. All antiderivatives
/// used by the profile families stay closed-form this way.
class SourceEnvelope {
public:
    static SourceEnvelope power_law(double C0, double beta, double s0)
    {
        return from_radial([C0, beta](double s) { return 1.0 + C0 * std::pow(s, -beta / 2.0); },
                           C0, beta, s0);
    }

    static SourceEnvelope constant_one() { return power_law(0.0, 4.0, 2.0); }

    static SourceEnvelope from_radial(std::function<double(double)> g, double C0, double beta,
                                      double s0)
    {
        if (!(C0 >= 0.0)) throw configuration_error("SourceEnvelope: C0 must be >= 0");
        if (!(beta > 2.0)) throw configuration_error("SourceEnvelope: beta must be > 2");
        if (!(s0 >= 1.0)) throw configuration_error("SourceEnvelope: s0 must be >= 1");
        SourceEnvelope env;
        env.g = std::move(g);
        env.C0 = C0;
        env.beta = beta;
        env.s0 = s0;
        env.build_minorant();
        env.validate_samples();
        return env;
    }

    std::function<double(double)> g;  // source as a function of s >= 1
    double C0 = 0.0;
    double beta = 4.0;
    double s0 = 2.0;

    double g_bar(double s) const { return 1.0 + C0 * std::pow(s, -beta / 2.0); }

    double g_under(double s) const
    {
        if (s >= s0) return 1.0 - C0 * std::pow(s, -beta / 2.0);
        if (s <= blend_lo_) return floor_;
        return ((blend_[3] * s + blend_[2]) * s + blend_[1]) * s + blend_[0];
    }

    double floor_level() const { return floor_; }
    double blend_lo() const { return blend_lo_; }

    bool log_branch(double H) const { return std::abs(H - beta / 2.0) <= branch_eps; }

    /// Effective exponent offset H - beta/2, snapped to 0 inside the branch window.
    double delta_of(double H) const { return log_branch(H) ? 0.0 : H - beta / 2.0; }

    /// integral of H t^{H-1} g_bar(t) over [1, s], closed form.
    double inner_int_bar(double H, double s) const
    {
        const double L = std::log(s);
        return std::expm1(H * L) + C0 * H * power_ratio(delta_of(H), s);
    }

    /// integral of H t^{H-1} g_under(t) over [1, s], closed form per piece.
    double inner_int_under(double H, double s) const
    {
        double acc = 0.0;
        const double lo1 = 1.0;
        const double hi1 = std::min(s, blend_lo_);
        if (hi1 > lo1) acc += floor_ * (std::pow(hi1, H) - std::pow(lo1, H));
        const double lo2 = std::max(1.0, blend_lo_);
        const double hi2 = std::min(s, s0);
        if (hi2 > lo2) {
            for (int j = 0; j < 4; ++j) {
                if (blend_[std::size_t(j)] == 0.0) continue;
                acc += blend_[std::size_t(j)] * H / (H + j) *
                       (std::pow(hi2, H + j) - std::pow(lo2, H + j));
            }
        }
        if (s > s0) {
            const double d = delta_of(H);
            acc += std::pow(s, H) - std::pow(s0, H) -
                   C0 * H * (power_ratio(d, s) - power_ratio(d, s0));
        }
        return acc;
    }

private:
    void build_minorant()
    {
        const double y0 = 1.0 - C0 * std::pow(s0, -beta / 2.0);
        if (!(y0 > 0.0))
            throw configuration_error("SourceEnvelope: minorant nonpositive at onset, "
                                      "need 1 - C0 s0^{-beta/2} > 0");
        double inf_g = y0;
        for (double s : linspace(1.0, s0, 257)) inf_g = std::min(inf_g, g(s));
        floor_ = std::min(inf_g, y0);
        if (!(floor_ > 0.0))
            throw configuration_error("SourceEnvelope: source must be bounded below by "
                                      "a positive constant");

        blend_lo_ = 0.5 * s0;
        const double h = s0 - blend_lo_;
        if (h <= 0.0 || floor_ == y0) {
            // flat floor straight into the tail
            blend_lo_ = s0;
            blend_ = {floor_, 0.0, 0.0, 0.0};
            return;
        }
        const double secant = (y0 - floor_) / h;
        double d1 = C0 * (beta / 2.0) * std::pow(s0, -beta / 2.0 - 1.0);
        d1 = std::min(d1, 3.0 * secant);  // Fritsch-Carlson clamp keeps the blend monotone

        // Hermite data (blend_lo_, floor_, slope 0) -> (s0, y0, slope d1) in monomials.
        const double c0 = floor_;
        const double c1 = 0.0;
        const double c2 = 3.0 * (y0 - floor_) - h * d1;
        const double c3 = -2.0 * (y0 - floor_) + h * d1;
        blend_ = {0.0, 0.0, 0.0, 0.0};
        const std::array<double, 4> ct = {c0, c1, c2, c3};
        for (int pdeg = 0; pdeg < 4; ++pdeg) {
            for (int j = 0; j <= pdeg; ++j) {
                blend_[std::size_t(j)] += ct[std::size_t(pdeg)] * binomial(pdeg, j) *
                                          ipow(-blend_lo_, pdeg - j) / ipow(h, pdeg);
            }
        }
    }

    void validate_samples() const
    {
        for (double s : geomspace(s0, 1e8 * s0, 129)) {
            if (g(s) > g_bar(s) * (1.0 + 1e-12) + 1e-12)
                throw configuration_error("SourceEnvelope: g exceeds its upper envelope at s = " +
                                          std::to_string(s));
        }
        for (double s : geomspace(1.0, 1e8 * s0, 257)) {
            const double gu = g_under(s);
            if (gu > g(s) * (1.0 + 1e-12) + 1e-12)
                throw configuration_error("SourceEnvelope: minorant exceeds g at s = " +
                                          std::to_string(s));
            if (!(gu > 0.0))
                throw configuration_error("SourceEnvelope: minorant not positive at s = " +
                                          std::to_string(s));
        }
        const Vec grid = linspace(1.0, 4.0 * s0, 257);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (g_under(grid[i]) < g_under(grid[i - 1]) - 1e-12)
                throw configuration_error("SourceEnvelope: minorant must be nondecreasing");
        }
    }

    double floor_ = 1.0;
    double blend_lo_ = 1.0;
    std::array<double, 4> blend_ = {1.0, 0.0, 0.0, 0.0};  // monomial coefficients on [blend_lo_, s0]
};

} // namespace hq::construct
