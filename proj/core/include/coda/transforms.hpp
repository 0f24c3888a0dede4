// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <vector>

#include "coda/common.hpp"

namespace coda {

double logit(double u);
double sigmoid(double z);

/// Affine-then-logit map from a bounded interval [low, high] to the real line.
struct BoundedMap {
    double low = -1.0;
    double high = 1.0;
    double epsilon = 1e-6;

    void validate() const;
};

/// z = logit(clip((x - low) / (high - low), eps, 1 - eps)).
double bounded_forward(const BoundedMap& m, double x);
/// x = low + (high - low) * sigmoid(z). Throws NumericError on non-finite z.
double bounded_inverse(const BoundedMap& m, double z);
/// dx/dz of bounded_inverse at z.
double bounded_inverse_derivative(const BoundedMap& m, double z);

/// Per-dimension empirical-CDF uniformization followed by a logit.
///
/// The CDF is the piecewise-linear interpolant through the order statistics
/// x_(k) at plotting positions (k - 1) / (n - 1), so the sample minimum maps
/// to 0 and the maximum to 1 before clipping to [eps, 1 - eps]. Dimensions
/// whose samples are all equal are flagged constant: they map to u = 0.5
/// (z = 0) and invert to the constant.
class CdfNormalizer {
public:
    CdfNormalizer() = default;
    CdfNormalizer(std::vector<std::vector<double>> sorted_supports, double epsilon);

    /// Fits from a samples x dims matrix. Requires >= 2 samples.
    static CdfNormalizer fit(const Matrix& data, double epsilon = 1e-6);

    std::size_t dims() const { return supports_.size(); }
    double epsilon() const { return epsilon_; }
    bool is_constant(std::size_t dim) const { return constant_[dim]; }
    const std::vector<double>& support(std::size_t dim) const { return supports_[dim]; }

    /// Empirical CDF of one coordinate before clipping, in [0, 1].
    double cdf(std::size_t dim, double x) const;
    /// Interpolated quantile of one coordinate for u in [0, 1].
    double quantile(std::size_t dim, double u) const;

    double forward(std::size_t dim, double x) const;
    double inverse(std::size_t dim, double z) const;
    /// dx/dz of `inverse` at z. Outside the support's interior the slope of
    /// the nearest segment is used so guidance never sees a dead gradient.
    double inverse_derivative(std::size_t dim, double z) const;

    Vector forward(const Vector& x) const;
    Vector inverse(const Vector& z) const;
    /// Row-wise forward over a samples x dims matrix.
    Matrix forward_rows(const Matrix& x) const;
    Matrix inverse_rows(const Matrix& z) const;

    void save(std::ostream& os) const;
    static CdfNormalizer load(std::istream& is);

private:
    std::size_t segment_for_u(std::size_t dim, double u) const;

    std::vector<std::vector<double>> supports_;
    std::vector<bool> constant_;
    double epsilon_ = 1e-6;
};

inline CdfNormalizer cdf_fit(const Matrix& data, double epsilon = 1e-6)
{
    return CdfNormalizer::fit(data, epsilon);
}
inline Vector cdf_forward(const CdfNormalizer& norm, const Vector& x) { return norm.forward(x); }
inline Vector cdf_inverse(const CdfNormalizer& norm, const Vector& z) { return norm.inverse(z); }

} // namespace coda
