// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace coda {

std::string to_string(GuidanceMode mode)
{
    switch (mode) {
    case GuidanceMode::None: return "none";
    case GuidanceMode::Classifier: return "classifier";
    case GuidanceMode::CFG: return "cfg";
    case GuidanceMode::QCond: return "qcond";
    }
    return "unknown";
}

GuidanceMode guidance_mode_from_string(const std::string& name)
{
    if (name == "none") return GuidanceMode::None;
    if (name == "classifier") return GuidanceMode::Classifier;
    if (name == "cfg") return GuidanceMode::CFG;
    if (name == "qcond") return GuidanceMode::QCond;
    throw InvalidArgument("unknown guidance mode '" + name + "'");
}

std::string to_string(GuidanceSchedule schedule)
{
    return schedule == GuidanceSchedule::Constant ? "constant" : "cosine";
}

GuidanceSchedule guidance_schedule_from_string(const std::string& name)
{
    if (name == "constant") return GuidanceSchedule::Constant;
    if (name == "cosine") return GuidanceSchedule::Cosine;
    throw InvalidArgument("unknown guidance schedule '" + name + "'");
}

void GuidanceHook::validate() const
{
    if (!(lambda >= 0.0)) throw InvalidArgument("guidance: lambda must be >= 0");
    if (!(w >= 0.0)) throw InvalidArgument("guidance: w must be >= 0");
    if (!(surrogate_std > 0.0)) throw InvalidArgument("guidance: surrogate_std must be > 0");
}

Matrix policy_score(const JointPolicy& policy, const Matrix& actions, const Matrix& obs, double surrogate_std)
{
    constexpr int agents = 2;
    if (actions.cols() != agents) throw ShapeError("policy_score: expected one action column per agent");
    if (obs.rows() != actions.rows()) throw ShapeError("policy_score: observation/action horizon mismatch");
    const double inv_var = 1.0 / (surrogate_std * surrogate_std);
    Matrix g(actions.rows(), actions.cols());
    for (Eigen::Index t = 0; t < actions.rows(); ++t)
        for (int i = 0; i < agents; ++i) g(t, i) = (policy.mean(i) - actions(t, i)) * inv_var;
    return g;
}

Vector normalize_score(const Vector& g)
{
    const double norm = g.norm();
    if (norm > 1e-12) return g / norm;
    return Vector::Zero(g.size());
}

double schedule_lambda(const GuidanceHook& hook, int n, int total)
{
    if (n < 0 || n >= total) throw InvalidArgument("schedule_lambda: step out of range");
    if (hook.schedule == GuidanceSchedule::Constant) return hook.lambda;
    if (n + 1 == total) return hook.lambda;
    return hook.lambda * (1.0 - std::cos(std::numbers::pi * (n + 1) / total)) / 2.0;
}

void classifier_guide(Matrix& tau_hat, const Matrix& tau_bar, const JointPolicy& policy, double lambda_n,
                      const CdfNormalizer& norm, const TrajectoryLayout& layout, double surrogate_std)
{
    if (tau_hat.rows() != tau_bar.rows() || tau_hat.cols() != layout.dim() || tau_bar.cols() != layout.dim()) {
        throw ShapeError("classifier_guide: trajectory shape mismatch");
    }
    if (lambda_n == 0.0) return;
    const int agents = layout.agents;
    const int horizon = layout.horizon;
    Matrix actions(horizon, agents);
    Matrix obs(horizon, agents * layout.obs_dim);
    Matrix slope(horizon, agents);
    Vector stacked(horizon * agents);
    for (Eigen::Index r = 0; r < tau_hat.rows(); ++r) {
        for (int t = 0; t < horizon; ++t) {
            for (int i = 0; i < agents; ++i) {
                const auto a_idx = static_cast<std::size_t>(layout.action_index(t, i));
                const double z = tau_bar(r, static_cast<Eigen::Index>(a_idx));
                actions(t, i) = norm.inverse(a_idx, z);
                slope(t, i) = norm.inverse_derivative(a_idx, z);
                for (int k = 0; k < layout.obs_dim; ++k) {
                    const auto o_idx = static_cast<std::size_t>(layout.obs_index(t, i, k));
                    obs(t, i * layout.obs_dim + k) = norm.inverse(o_idx, tau_bar(r, static_cast<Eigen::Index>(o_idx)));
                }
            }
        }
        const Matrix g = policy_score(policy, actions, obs, surrogate_std);
        for (int t = 0; t < horizon; ++t)
            for (int i = 0; i < agents; ++i) stacked[t * agents + i] = g(t, i) * slope(t, i);
        const Vector unit = normalize_score(stacked);
        for (int t = 0; t < horizon; ++t)
            for (int i = 0; i < agents; ++i) tau_hat(r, layout.action_index(t, i)) += lambda_n * unit[t * agents + i];
    }
}

Vector cfg_combine(const Vector& score_cond, const Vector& score_uncond, double w)
{
    if (score_cond.size() != score_uncond.size()) throw ShapeError("cfg_combine: shape mismatch");
    return (1.0 + w) * score_cond - w * score_uncond;
}

Matrix cfg_combine(const Matrix& score_cond, const Matrix& score_uncond, double w)
{
    if (score_cond.rows() != score_uncond.rows() || score_cond.cols() != score_uncond.cols()) {
        throw ShapeError("cfg_combine: shape mismatch");
    }
    return (1.0 + w) * score_cond - w * score_uncond;
}

Matrix cfg_condition_labels(const OfflineDataset& data)
{
    Matrix y(static_cast<Eigen::Index>(data.size()), 2);
    for (std::size_t r = 0; r < data.size(); ++r) {
        y(static_cast<Eigen::Index>(r), 0) = data.actions[r].ax;
        y(static_cast<Eigen::Index>(r), 1) = data.actions[r].ay;
    }
    return y;
}

QLabels q_condition_labels(const OfflineDataset& data, const QTarget& target)
{
    if (data.size() == 0) throw InvalidArgument("q_condition_labels: empty dataset");
    QLabels out;
    out.labels.resize(static_cast<Eigen::Index>(data.size()), 1);
    for (std::size_t r = 0; r < data.size(); ++r) out.labels(static_cast<Eigen::Index>(r), 0) = data.rewards[r];
    std::vector<double> sorted = data.rewards;
    std::sort(sorted.begin(), sorted.end());
    if (target.kind == QTarget::Kind::MaxReturn) {
        out.condition = sorted.back();
    } else {
        if (!(target.q >= 0.0 && target.q <= 1.0)) throw InvalidArgument("q_condition_labels: q must lie in [0, 1]");
        // Linear interpolation between order statistics.
        const double pos = target.q * static_cast<double>(sorted.size() - 1);
        const auto k = std::min(static_cast<std::size_t>(pos), sorted.size() - 1);
        const double frac = pos - static_cast<double>(k);
        out.condition = k + 1 < sorted.size() ? sorted[k] + frac * (sorted[k + 1] - sorted[k]) : sorted[k];
    }
    return out;
}

Vector contraction_step(const Vector& a, const Vector& mu, double lambda)
{
    if (a.size() != mu.size()) throw ShapeError("contraction_step: shape mismatch");
    return (1.0 - lambda) * a + lambda * mu;
}

Matrix sample_trajectories(const SamplerSetup& setup, const GuidanceHook& hook, const JointPolicy* policy,
                           const std::optional<Vector>& condition, std::size_t n, std::uint64_t seed)
{
    if (!setup.model || !setup.normalizer) throw InvalidArgument("sample_trajectories: missing model or normalizer");
    hook.validate();
    const DenoiserModel& model = *setup.model;
    const int dim = setup.layout.dim();
    if (model.data_dim() != dim) throw ShapeError("sample_trajectories: model width does not match layout");

    SamplerHooks hooks;
    switch (hook.mode) {
    case GuidanceMode::None:
    case GuidanceMode::Classifier:
        hooks.denoise = [&model](const Matrix& x, double sigma, Eigen::Index) {
            return denoise_batch(model, x, sigma, nullptr);
        };
        break;
    case GuidanceMode::CFG:
    case GuidanceMode::QCond: {
        if (!condition) throw InvalidArgument("sample_trajectories: conditional guidance needs a condition");
        if (condition->size() != model.cond_dim()) throw ShapeError("sample_trajectories: condition width mismatch");
        const Vector y = *condition;
        const double w = hook.w;
        hooks.denoise = [&model, y, w](const Matrix& x, double sigma, Eigen::Index) {
            const Matrix cond = y.transpose().replicate(x.rows(), 1);
            const double s2 = sigma * sigma;
            const Matrix score_c = (denoise_batch(model, x, sigma, &cond) - x) / s2;
            const Matrix score_u = (denoise_batch(model, x, sigma, nullptr) - x) / s2;
            return Matrix(x + s2 * cfg_combine(score_c, score_u, w));
        };
        break;
    }
    }
    if (hook.mode == GuidanceMode::Classifier) {
        if (!policy) throw InvalidArgument("sample_trajectories: classifier guidance needs a policy");
        const JointPolicy pol = *policy;
        const CdfNormalizer& norm = *setup.normalizer;
        const TrajectoryLayout layout = setup.layout;
        hooks.guide = [pol, &norm, layout, hook](Matrix& tau_hat, const Matrix& tau_bar, int n, int steps, Eigen::Index) {
            classifier_guide(tau_hat, tau_bar, pol, schedule_lambda(hook, n, steps), norm, layout, hook.surrogate_std);
        };
    }
    return heun_sample(hooks, dim, karras_sigmas(setup.schedule), setup.churn, n, seed, setup.options);
}

} // namespace coda
