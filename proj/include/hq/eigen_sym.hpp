#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hq/errors.hpp"
#include "hq/linalg.hpp"

namespace hq {

struct EigenSym {
    Vec values;      // ascending
    Matrix vectors;  // columns, matching values; empty when not requested
    int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Deterministic, accurate
/// to ~machine precision at the sizes used here (n <= 16).
inline EigenSym jacobi_eigensystem(Matrix a, bool want_vectors = true, int max_sweeps = 64)
{
    const std::size_t n = a.size();
    Matrix v = want_vectors ? Matrix::identity(n) : Matrix();

    auto off_norm = [&a, n]() {
        double s = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
        return std::sqrt(2.0 * s);
    };

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    const double tol = 1e-15 * std::max(scale, 1e-300) * double(n);

    int sweep = 0;
    while (off_norm() > tol) {
        if (++sweep > max_sweeps)
            throw numerical_error("jacobi_eigensystem: no convergence after " +
                                  std::to_string(max_sweeps) + " sweeps");
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 0.1 * tol / double(n)) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double apj = a(p, j);
                    const double aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                if (want_vectors) {
                    for (std::size_t i = 0; i < n; ++i) {
                        const double vip = v(i, p);
                        const double viq = v(i, q);
                        v(i, p) = c * vip - s * viq;
                        v(i, q) = s * vip + c * viq;
                    }
                }
            }
        }
    }

    EigenSym out;
    out.sweeps = sweep;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&out](std::size_t i, std::size_t j) { return out.values[i] < out.values[j]; });

    Vec sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = out.values[order[i]];
    out.values = std::move(sorted);

    if (want_vectors) {
        out.vectors = Matrix(n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

} // namespace hq
