#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "hq/errors.hpp"

namespace hq {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    int evaluations = 0;
    bool converged = true;

    QuadResult& operator+=(const QuadResult& o)
    {
        value += o.value;
        error += o.error;
        evaluations += o.evaluations;
        converged = converged && o.converged;
        return *this;
    }
};

namespace detail {

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
inline constexpr std::array<double, 8> gk15_nodes = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};

inline constexpr std::array<double, 8> gk15_wk = {
    0.02293532201052922, 0.06309209262997855, 0.10479001032225018, 0.14065325971552592,
    0.16900472663926790, 0.19035057806478540, 0.20443294007529889, 0.20948214108472783};

inline constexpr std::array<double, 4> gk15_wg = {
    0.12948496616886969, 0.27970539148927666, 0.38183005050511894, 0.41795918367346938};

} // namespace detail

/// Single Gauss–Kronrod 15/7 panel with the QUADPACK-style error estimate.
template <class F>
QuadResult gk15(F&& f, double a, double b)
{
    using namespace detail;
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);

    double resk = 0.0;
    double resg = 0.0;
    std::array<double, 15> fv{};

    const double f_center = f(c);
    fv[14] = f_center;
    resk += gk15_wk[7] * f_center;
    resg += gk15_wg[3] * f_center;

    for (int i = 0; i < 7; ++i) {
        const double dx = h * gk15_nodes[i];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        fv[2 * i] = f1;
        fv[2 * i + 1] = f2;
        resk += gk15_wk[i] * (f1 + f2);
        if (i % 2 == 1) resg += gk15_wg[i / 2] * (f1 + f2);
    }

    const double reskh = resk * 0.5;
    double resasc = gk15_wk[7] * std::abs(f_center - reskh);
    for (int i = 0; i < 7; ++i)
        resasc += gk15_wk[i] * (std::abs(fv[2 * i] - reskh) + std::abs(fv[2 * i + 1] - reskh));
    resasc *= std::abs(h);

    QuadResult r;
    r.value = resk * h;
    r.evaluations = 15;
    double err = std::abs((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    r.error = err;
    return r;
}

/// Globally adaptive bisection on [a, b] driven by the panel error estimates.
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol = 1e-12,
                     double rel_tol = 1e-12, int max_panels = 4000)
{
    struct Seg {
        double a, b, value, error;
        bool operator<(const Seg& o) const { return error < o.error; }
    };

    QuadResult first = gk15(f, a, b);
    std::priority_queue<Seg> heap;
    heap.push({a, b, first.value, first.error});

    double total = first.value;
    double total_err = first.error;
    int evals = first.evaluations;
    int panels = 1;

    while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) && panels < max_panels) {
        Seg worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval at rounding resolution; keep its estimate
            total_err -= worst.error;
            continue;
        }
        QuadResult left = gk15(f, worst.a, mid);
        QuadResult right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        evals += left.evaluations + right.evaluations;
        ++panels;
        heap.push({worst.a, mid, left.value, left.error});
        heap.push({mid, worst.b, right.value, right.error});
    }

    QuadResult out;
    out.value = total;
    out.error = total_err;
    out.evaluations = evals;
    out.converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total));
    return out;
}

/// Adaptive integration of a slowly decaying integrand over a wide interval:
/// pre-split into geometric blocks so the panel scale tracks the variable.
template <class F>
QuadResult integrate_geometric(F&& f, double a, double b, double abs_tol = 1e-12,
                               double rel_tol = 1e-12)
{
    QuadResult out;
    if (b <= a) return out;
    double lo = a;
    const double factor = 8.0;
    int blocks = 0;
    while (lo < b) {
        const double hi = std::min(b, lo * factor);
        ++blocks;
        lo = hi;
    }
    const double block_abs = abs_tol / std::max(1, blocks);
    lo = a;
    while (lo < b) {
        const double hi = std::min(b, lo * factor);
        out += integrate(f, lo, hi, block_abs, rel_tol);
        lo = hi;
    }
    return out;
}

} // namespace hq
