// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

namespace coda {

double logit(double u) { return std::log(u / (1.0 - u)); }

double sigmoid(double z)
{
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void BoundedMap::validate() const
{
    if (!(low < high)) throw InvalidArgument("BoundedMap requires low < high");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("BoundedMap requires 0 < epsilon < 0.5");
}

double bounded_forward(const BoundedMap& m, double x)
{
    const double u = (std::clamp(x, m.low, m.high) - m.low) / (m.high - m.low);
    return logit(std::clamp(u, m.epsilon, 1.0 - m.epsilon));
}

double bounded_inverse(const BoundedMap& m, double z)
{
    if (!std::isfinite(z)) throw NumericError("bounded_inverse: non-finite input");
    return std::clamp(m.low + (m.high - m.low) * sigmoid(z), m.low, m.high);
}

double bounded_inverse_derivative(const BoundedMap& m, double z)
{
    const double u = sigmoid(z);
    return (m.high - m.low) * u * (1.0 - u);
}

CdfNormalizer::CdfNormalizer(std::vector<std::vector<double>> sorted_supports, double epsilon)
    : supports_(std::move(sorted_supports)), epsilon_(epsilon)
{
    if (!(epsilon_ > 0.0 && epsilon_ < 0.5)) throw InvalidArgument("CdfNormalizer: 0 < epsilon < 0.5 required");
    constant_.reserve(supports_.size());
    for (const auto& s : supports_) {
        if (s.size() < 2) throw InvalidArgument("CdfNormalizer: each support needs >= 2 samples");
        if (!std::is_sorted(s.begin(), s.end())) throw InvalidArgument("CdfNormalizer: support not sorted");
        constant_.push_back(s.front() == s.back());
    }
}

CdfNormalizer CdfNormalizer::fit(const Matrix& data, double epsilon)
{
    if (data.rows() < 2) throw InvalidArgument("cdf_fit: need >= 2 samples per dimension");
    if (!data.allFinite()) throw NumericError("cdf_fit: non-finite data");
    std::vector<std::vector<double>> supports(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        auto& s = supports[static_cast<std::size_t>(j)];
        s.assign(data.col(j).data(), data.col(j).data() + data.rows());
        std::sort(s.begin(), s.end());
    }
    return CdfNormalizer(std::move(supports), epsilon);
}

double CdfNormalizer::cdf(std::size_t dim, double x) const
{
    const auto& s = supports_.at(dim);
    if (constant_[dim]) return 0.5;
    if (x <= s.front()) return 0.0;
    if (x >= s.back()) return 1.0;
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    const auto k = static_cast<std::size_t>(it - s.begin()) - 1;
    const double frac = (x - s[k]) / (s[k + 1] - s[k]);
    return (static_cast<double>(k) + frac) / static_cast<double>(s.size() - 1);
}

std::size_t CdfNormalizer::segment_for_u(std::size_t dim, double u) const
{
    const auto n = supports_[dim].size();
    const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(n - 1);
    return std::min(static_cast<std::size_t>(pos), n - 2);
}

double CdfNormalizer::quantile(std::size_t dim, double u) const
{
    const auto& s = supports_.at(dim);
    if (constant_[dim]) return s.front();
    u = std::clamp(u, 0.0, 1.0);
    const std::size_t k = segment_for_u(dim, u);
    const double frac = u * static_cast<double>(s.size() - 1) - static_cast<double>(k);
    return std::clamp(s[k] + frac * (s[k + 1] - s[k]), s.front(), s.back());
}

double CdfNormalizer::forward(std::size_t dim, double x) const
{
    if (constant_.at(dim)) return 0.0;
    return logit(std::clamp(cdf(dim, x), epsilon_, 1.0 - epsilon_));
}

double CdfNormalizer::inverse(std::size_t dim, double z) const
{
    if (!std::isfinite(z)) throw NumericError("cdf_inverse: non-finite input");
    return quantile(dim, sigmoid(z));
}

double CdfNormalizer::inverse_derivative(std::size_t dim, double z) const
{
    const auto& s = supports_.at(dim);
    if (constant_[dim]) return 0.0;
    const double u = sigmoid(z);
    const std::size_t k = segment_for_u(dim, u);
    const double slope = (s[k + 1] - s[k]) * static_cast<double>(s.size() - 1);
    return slope * u * (1.0 - u);
}

Vector CdfNormalizer::forward(const Vector& x) const
{
    if (static_cast<std::size_t>(x.size()) != dims()) throw ShapeError("cdf_forward: dimension mismatch");
    Vector z(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) z[j] = forward(static_cast<std::size_t>(j), x[j]);
    return z;
}

Vector CdfNormalizer::inverse(const Vector& z) const
{
    if (static_cast<std::size_t>(z.size()) != dims()) throw ShapeError("cdf_inverse: dimension mismatch");
    Vector x(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) x[j] = inverse(static_cast<std::size_t>(j), z[j]);
    return x;
}

Matrix CdfNormalizer::forward_rows(const Matrix& x) const
{
    if (static_cast<std::size_t>(x.cols()) != dims()) throw ShapeError("cdf_forward: dimension mismatch");
    Matrix z(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) z(i, j) = forward(static_cast<std::size_t>(j), x(i, j));
    return z;
}

Matrix CdfNormalizer::inverse_rows(const Matrix& z) const
{
    if (static_cast<std::size_t>(z.cols()) != dims()) throw ShapeError("cdf_inverse: dimension mismatch");
    Matrix x(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j)
        for (Eigen::Index i = 0; i < z.rows(); ++i) x(i, j) = inverse(static_cast<std::size_t>(j), z(i, j));
    return x;
}

void CdfNormalizer::save(std::ostream& os) const
{
    os << "cdf-normalizer 1\n" << std::setprecision(17) << epsilon_ << ' ' << supports_.size() << '\n';
    for (const auto& s : supports_) {
        os << s.size();
        for (double v : s) os << ' ' << v;
        os << '\n';
    }
}

CdfNormalizer CdfNormalizer::load(std::istream& is)
{
    std::string magic;
    int version = 0;
    double eps = 0.0;
    std::size_t dims = 0;
    if (!(is >> magic >> version) || magic != "cdf-normalizer" || version != 1) {
        throw InvalidArgument("normalizer: bad header");
    }
    if (!(is >> eps >> dims)) throw InvalidArgument("normalizer: truncated header");
    std::vector<std::vector<double>> supports(dims);
    for (auto& s : supports) {
        std::size_t n = 0;
        if (!(is >> n)) throw InvalidArgument("normalizer: truncated support");
        s.resize(n);
        for (auto& v : s)
            if (!(is >> v)) throw InvalidArgument("normalizer: truncated support");
    }
    return CdfNormalizer(std::move(supports), eps);
}

} // namespace coda
