#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hq/errors.hpp"

namespace hq {

using Vec = std::vector<double>;

/// Integer power with exact handling of the common small exponents.
inline double ipow(double x, int e)
{
    if (e < 0) return 1.0 / ipow(x, -e);
    double r = 1.0;
    double b = x;
    while (e > 0) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

/// Binomial coefficient as a double; C(n, k) = 0 outside 0 <= k <= n.
inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return r;
}

inline double dot(std::span<const double> x, std::span<const double> y)
{
    assert(x.size() == y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x)
{
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline void scale_in_place(Vec& x, double a)
{
    for (double& v : x) v *= a;
}

/// Dense square matrix, row major. Only the small sizes this project needs.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), d_(n * n, fill) {}

    static Matrix identity(std::size_t n)
    {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return d_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }

    Vec multiply(std::span<const double> x) const
    {
        assert(x.size() == n_);
        Vec y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

    Matrix transpose() const
    {
        Matrix t(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix multiply(const Matrix& b) const
    {
        assert(b.n_ == n_);
        Matrix c(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = 0; k < n_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < n_; ++j) c(i, j) += a * b(k, j);
            }
        return c;
    }

    double frobenius() const
    {
        double s = 0.0;
        for (double v : d_) s += v * v;
        return std::sqrt(s);
    }

private:
    std::size_t n_ = 0;
    Vec d_;
};

/// count geometrically spaced points in [a, b], endpoints included.
inline Vec geomspace(double a, double b, std::size_t count)
{
    assert(a > 0.0 && b > a && count >= 2);
    Vec out(count);
    const double la = std::log(a);
    const double lb = std::log(b);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::exp(la + (lb - la) * double(i) / double(count - 1));
    out.front() = a;
    out.back() = b;
    return out;
}

inline Vec linspace(double a, double b, std::size_t count)
{
    assert(count >= 2);
    Vec out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = a + (b - a) * double(i) / double(count - 1);
    out.back() = b;
    return out;
}

} // namespace hq
