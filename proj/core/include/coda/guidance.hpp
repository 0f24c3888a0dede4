// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coda/common.hpp"
#include "coda/diffusion.hpp"
#include "coda/games.hpp"
#include "coda/marl.hpp"
#include "coda/transforms.hpp"

namespace coda {

enum class GuidanceMode { None, Classifier, CFG, QCond };
enum class GuidanceSchedule { Constant, Cosine };

std::string to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& name);
std::string to_string(GuidanceSchedule schedule);
GuidanceSchedule guidance_schedule_from_string(const std::string& name);

struct GuidanceHook {
    GuidanceMode mode = GuidanceMode::None;
    double lambda = 0.6;        // classifier scale
    double w = 1.0;             // CFG scale
    GuidanceSchedule schedule = GuidanceSchedule::Constant;
    double surrogate_std = 1.0;

    void validate() const;
};

/// Per-timestep sum over agents of grad_a log N(a; mu(o), std^2 I).
/// `actions` and `obs` are H x (agents * dim) in the original action space.
Matrix policy_score(const JointPolicy& policy, const Matrix& actions, const Matrix& obs, double surrogate_std = 1.0);

/// g / ||g|| when ||g|| > 1e-12, else zero.
Vector normalize_score(const Vector& g);

/// Guidance scale at denoising step n of N.
double schedule_lambda(const GuidanceHook& hook, int n, int total);

/// Applies one classifier-guidance step to a chunk of noised trajectories.
///
/// Actions of the denoised estimate are mapped back to the action space, the
/// policy score is taken there, carried into diffusion coordinates through
/// the derivative of the inverse normalizer, stacked over time, normalised
/// per trajectory and added with weight lambda_n to the noised action
/// coordinates. Nothing else in `tau_hat` changes.
void classifier_guide(Matrix& tau_hat, const Matrix& tau_bar, const JointPolicy& policy, double lambda_n,
                      const CdfNormalizer& norm, const TrajectoryLayout& layout, double surrogate_std = 1.0);

/// (1 + w) * cond - w * uncond.
Vector cfg_combine(const Vector& score_cond, const Vector& score_uncond, double w);
Matrix cfg_combine(const Matrix& score_cond, const Matrix& score_uncond, double w);

/// Policy-descriptor labels for condition training: each record is labelled
/// with its own joint action (rows align with the dataset).
Matrix cfg_condition_labels(const OfflineDataset& data);

struct QTarget {
    enum class Kind { MaxReturn, Quantile } kind = Kind::MaxReturn;
    double q = 1.0;
};

struct QLabels {
    Matrix labels; // N x 1 returns
    double condition = 0.0;
};

QLabels q_condition_labels(const OfflineDataset& data, const QTarget& target = {});

/// a' = (1 - lambda) a + lambda mu: one un-normalised guidance step under the
/// quadratic surrogate.
Vector contraction_step(const Vector& a, const Vector& mu, double lambda);

/// Everything needed to draw trajectories from a trained prior.
struct SamplerSetup {
    const DenoiserModel* model = nullptr;
    const CdfNormalizer* normalizer = nullptr;
    TrajectoryLayout layout;
    NoiseSchedule schedule;
    Churn churn;
    SampleOptions options;
};

/// Draws n diffusion-space trajectories under `hook`.
///   None       - unconditional (null condition)
///   Classifier - unconditional denoiser plus policy guidance toward `policy`
///   CFG, QCond - classifier-free combination with condition `condition`
Matrix sample_trajectories(const SamplerSetup& setup, const GuidanceHook& hook, const JointPolicy* policy,
                           const std::optional<Vector>& condition, std::size_t n, std::uint64_t seed);

} // namespace coda
