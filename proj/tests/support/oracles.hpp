// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations used by the tests. Each one is written from the
// defining formula and shares no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-8)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// sum c_ij x^i y^j with std::pow.
inline double polynomial(const std::map<std::pair<int, int>, double>& coeffs, double x, double y)
{
    double r = 0.0;
    for (const auto& [mono, c] : coeffs) r += c * std::pow(x, mono.first) * std::pow(y, mono.second);
    return r;
}

struct Edm {
    double c_skip, c_out, c_in, c_noise;
};

inline Edm edm(double sigma, double sd)
{
    const double s2 = sigma * sigma, d2 = sd * sd;
    return {d2 / (s2 + d2), sigma * sd / std::sqrt(s2 + d2), 1.0 / std::sqrt(s2 + d2), std::log(sigma) / 4.0};
}

inline double karras(int i, int steps, double smin, double smax, double rho)
{
    if (i == steps) return 0.0;
    const double a = std::pow(smax, 1.0 / rho), b = std::pow(smin, 1.0 / rho);
    return std::pow(a + static_cast<double>(i) / (steps - 1) * (b - a), rho);
}

inline double gaussian_logpdf(double x, double mu, double sd)
{
    const double z = (x - mu) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// sup_x |F_a(x) - F_b(x)| evaluated at every sample point, O(n (n + m)).
inline double ks_brute(const std::vector<double>& a, const std::vector<double>& b)
{
    auto ecdf = [](const std::vector<double>& s, double x) {
        return static_cast<double>(std::count_if(s.begin(), s.end(), [x](double v) { return v <= x; })) /
               static_cast<double>(s.size());
    };
    double d = 0.0;
    for (const auto* s : {&a, &b})
        for (double x : *s) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
    return d;
}

/// Exact posterior mean for data N(m, sd^2) observed with noise sigma.
inline double gaussian_posterior_mean(double x, double sigma, double m, double sd)
{
    return (sd * sd * x + sigma * sigma * m) / (sd * sd + sigma * sigma);
}

/// Root of a monotone function on [lo, hi] by bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200)
{
    double flo = f(lo);
    for (int k = 0; k < iters; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v)
{
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace oracle
