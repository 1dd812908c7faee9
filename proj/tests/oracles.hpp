#pragma once

// Test-only oracles and sampling helpers. Everything here stays independent
// of the evaluation paths it is used to check.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace oracle {

/// Elementary symmetric polynomial by explicit subset enumeration.
inline double sigma_enum(int j, std::span<const double> lam)
{
    const int n = int(lam.size());
    if (j == 0) return 1.0;
    if (j < 0 || j > n) return 0.0;
    double total = 0.0;
    std::vector<int> pick(std::size_t(j), 0);
    // iterative j-subset enumeration in lexicographic order
    for (int i = 0; i < j; ++i) pick[std::size_t(i)] = i;
    while (true) {
        double prod = 1.0;
        for (int i : pick) prod *= lam[std::size_t(i)];
        total += prod;
        int t = j - 1;
        while (t >= 0 && pick[std::size_t(t)] == n - j + t) --t;
        if (t < 0) break;
        ++pick[std::size_t(t)];
        for (int i = t + 1; i < j; ++i) pick[std::size_t(i)] = pick[std::size_t(i - 1)] + 1;
    }
    return total;
}

/// sigma_enum with one entry deleted.
inline double sigma_enum_reduced(int j, std::size_t drop, std::span<const double> lam)
{
    std::vector<double> rest;
    rest.reserve(lam.size() - 1);
    for (std::size_t i = 0; i < lam.size(); ++i)
        if (i != drop) rest.push_back(lam[i]);
    return sigma_enum(j, rest);
}

/// Magnitude scale of sigma_j: the same enumeration over |lam_i|.
inline double sigma_scale(int j, std::span<const double> lam)
{
    std::vector<double> mags(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) mags[i] = lam[i] < 0.0 ? -lam[i] : lam[i];
    return sigma_enum(j, mags);
}

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}

    double uniform(double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(engine);
    }

    int uniform_int(int lo, int hi)
    {
        return std::uniform_int_distribution<int>(lo, hi)(engine);
    }

    std::vector<double> vector(std::size_t n, double lo, double hi)
    {
        std::vector<double> v(n);
        for (double& x : v) x = uniform(lo, hi);
        return v;
    }

    std::vector<double> direction(std::size_t n)
    {
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> v(n);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& x : v) {
                x = gauss(engine);
                norm += x * x;
            }
        } while (norm < 1e-12);
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    }
};

} // namespace oracle
