// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/analysis.hpp"
#include "coda/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace coda {

double twin_peaks_fixed_point(double a, double b, double c, double mean_other, double var_other)
{
    if (!(a > 0.0) || !(b >= 0.0)) throw InvalidArgument("twin_peaks_fixed_point: requires A > 0 and B >= 0");
    return c * mean_other / (2.0 * a + 2.0 * b * (mean_other * mean_other + var_other));
}

FixedPointReport twin_peaks_fixed_point_report(const OfflineDataset& data, const LearnerConfig& cfg)
{
    if (!data.game.twin_peaks_params) throw InvalidArgument("fixed point report needs a Twin Peaks game");
    const auto [a, b, c] = *data.game.twin_peaks_params;
    LearnerConfig full = cfg;
    full.full_batch = true;
    Rng rng(0); // unused in full-batch mode
    const auto log = train_brud(data.game, data.actions, full, rng);
    FixedPointReport r;
    r.predicted = {twin_peaks_fixed_point(a, b, c, data.stats.mean_y, data.stats.var_y),
                   twin_peaks_fixed_point(a, b, c, data.stats.mean_x, data.stats.var_x)};
    r.empirical = {log.back().theta_x, log.back().theta_y};
    r.gap = {std::abs(r.predicted.ax - r.empirical.ax), std::abs(r.predicted.ay - r.empirical.ay)};
    return r;
}

ConstantFieldReport constant_field_check(const OfflineDataset& data, Rng& rng, int points)
{
    if (data.game.kind != GameKind::Multiplication) throw InvalidArgument("constant_field_check: Multiplication only");
    ConstantFieldReport r;
    r.expected = {data.stats.mean_y, data.stats.mean_x};
    r.points = points;
    std::uniform_real_distribution<double> uni(data.game.action_low, data.game.action_high);
    for (int k = 0; k < points; ++k) {
        JointPolicy p;
        p.theta_x = uni(rng);
        p.theta_y = uni(rng);
        const auto g = brud_gradient(data.game, data.actions, p);
        r.max_deviation = std::max({r.max_deviation, std::abs(g.first - r.expected.first),
                                    std::abs(g.second - r.expected.second)});
    }
    return r;
}

namespace {

double gaussian_logpdf(double x, double mu, double std)
{
    const double z = (x - mu) / std;
    return -0.5 * z * z - std::log(std) - 0.5 * std::log(2.0 * std::numbers::pi);
}

} // namespace

double mean_policy_loglik(const Matrix& raw, const JointPolicy& policy, double std, const TrajectoryLayout& layout)
{
    if (raw.rows() == 0) throw InvalidArgument("mean_policy_loglik: empty batch");
    if (raw.cols() != layout.dim()) throw ShapeError("mean_policy_loglik: width mismatch");
    double total = 0.0;
    for (Eigen::Index r = 0; r < raw.rows(); ++r)
        for (int t = 0; t < layout.horizon; ++t)
            for (int i = 0; i < layout.agents; ++i)
                total += gaussian_logpdf(raw(r, layout.action_index(t, i)), policy.mean(i), std);
    return total / static_cast<double>(raw.rows());
}

double mean_policy_loglik(const std::vector<JointAction>& actions, const JointPolicy& policy, double std)
{
    if (actions.empty()) throw InvalidArgument("mean_policy_loglik: empty batch");
    double total = 0.0;
    for (const auto& a : actions) total += gaussian_logpdf(a.ax, policy.theta_x, std) + gaussian_logpdf(a.ay, policy.theta_y, std);
    return total / static_cast<double>(actions.size());
}

std::string to_string(ContractionClass c)
{
    switch (c) {
    case ContractionClass::Identity: return "identity";
    case ContractionClass::Contractive: return "contractive";
    case ContractionClass::OneStep: return "one-step";
    case ContractionClass::Isometric: return "isometric";
    case ContractionClass::Expansive: return "expansive";
    }
    return "unknown";
}

ContractionClass classify_contraction(double lambda)
{
    if (lambda == 0.0) return ContractionClass::Identity;
    if (lambda == 1.0) return ContractionClass::OneStep;
    if (lambda == 2.0) return ContractionClass::Isometric;
    if (lambda > 0.0 && lambda < 2.0) return ContractionClass::Contractive;
    return ContractionClass::Expansive;
}

ContractionReport contraction_battery(const std::vector<double>& lambdas, int trials, Rng& rng, double tolerance)
{
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    ContractionReport report;
    for (double lambda : lambdas) {
        ContractionCase cc;
        cc.lambda = lambda;
        cc.kind = classify_contraction(lambda);
        const double factor = std::abs(1.0 - lambda);
        double ratio_sum = 0.0;
        for (int k = 0; k < trials; ++k) {
            const Vector a{{uni(rng), uni(rng)}};
            const Vector mu{{uni(rng), uni(rng)}};
            const Vector next = contraction_step(a, mu, lambda);
            const double before = (a - mu).norm();
            const double after = (next - mu).norm();
            cc.max_law_error = std::max(cc.max_law_error, std::abs(after - factor * before));
            const double ratio = after / before;
            ratio_sum += ratio;

            switch (cc.kind) {
            case ContractionClass::Identity: cc.classification_ok &= (next - a).norm() == 0.0; break;
            case ContractionClass::OneStep: cc.classification_ok &= after <= tolerance; break;
            case ContractionClass::Contractive: cc.classification_ok &= after < before; break;
            case ContractionClass::Isometric: cc.classification_ok &= std::abs(after - before) <= tolerance; break;
            case ContractionClass::Expansive: cc.classification_ok &= after > before; break;
            }
            if (lambda > 1.0 && lambda < 2.0) {
                // Overshoot: the offset from mu flips sign in every coordinate.
                const Vector off_before = a - mu;
                const Vector off_after = next - mu;
                for (Eigen::Index j = 0; j < off_before.size(); ++j) {
                    if (off_before[j] != 0.0) cc.overshoot_ok &= off_before[j] * off_after[j] < 0.0;
                }
            }
        }
        cc.mean_ratio = trials > 0 ? ratio_sum / trials : 0.0;
        cc.passed = cc.max_law_error <= tolerance && cc.classification_ok && cc.overshoot_ok;
        report.passed &= cc.passed;
        report.cases.push_back(cc);
    }
    return report;
}

double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) throw InvalidArgument("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double DistributionReport::max_mean_gap() const
{
    double m = 0.0;
    for (const auto& d : dims) m = std::max(m, d.mean_gap);
    return m;
}

double DistributionReport::max_ks() const
{
    double m = 0.0;
    for (const auto& d : dims) m = std::max(m, d.ks);
    return m;
}

DistributionReport distribution_diagnostics(const std::vector<JointAction>& samples, const OfflineDataset& reference)
{
    if (samples.empty() || reference.size() == 0) throw InvalidArgument("distribution_diagnostics: empty input");
    const ActionStats s = compute_stats(samples);
    std::vector<double> sx, sy, rx, ry;
    for (const auto& a : samples) {
        sx.push_back(a.ax);
        sy.push_back(a.ay);
    }
    for (const auto& a : reference.actions) {
        rx.push_back(a.ax);
        ry.push_back(a.ay);
    }
    DistributionReport r;
    r.dims.push_back({"ax", std::abs(s.mean_x - reference.stats.mean_x), std::abs(s.var_x - reference.stats.var_x),
                      ks_statistic(sx, rx)});
    r.dims.push_back({"ay", std::abs(s.mean_y - reference.stats.mean_y), std::abs(s.var_y - reference.stats.var_y),
                      ks_statistic(sy, ry)});
    return r;
}

} // namespace coda
