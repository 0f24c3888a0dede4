// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/marl.hpp"

#include <algorithm>
#include <cmath>

namespace coda {

void JointPolicy::clip()
{
    theta_x = std::clamp(theta_x, low, high);
    theta_y = std::clamp(theta_y, low, high);
}

Vector JointPolicy::descriptor() const { return Vector{{theta_x, theta_y}}; }

void LearnerConfig::validate() const
{
    if (!(lr >= 0.0)) throw InvalidArgument("learner: lr must be >= 0");
    if (!(grad_clip > 0.0)) throw InvalidArgument("learner: grad_clip must be > 0");
    if (batch < 1) throw InvalidArgument("learner: batch must be >= 1");
    if (burn_in < 0 || steps < 0) throw InvalidArgument("learner: burn_in and steps must be >= 0");
}

std::pair<double, double> brud_gradient(const GameSpec& game, std::span<const JointAction> batch,
                                        const JointPolicy& policy)
{
    if (batch.empty()) throw InvalidArgument("brud_gradient: empty batch");
    double gx = 0.0;
    double gy = 0.0;
    for (const auto& a : batch) {
        gx += reward_grad(game, {policy.theta_x, a.ay}).first;
        gy += reward_grad(game, {a.ax, policy.theta_y}).second;
    }
    const double n = static_cast<double>(batch.size());
    return {gx / n, gy / n};
}

JointPolicy update(const JointPolicy& policy, std::pair<double, double> grad, const LearnerConfig& cfg)
{
    auto [gx, gy] = grad;
    if (!std::isfinite(gx) || !std::isfinite(gy)) throw NumericError("update: non-finite gradient");
    const double norm = std::hypot(gx, gy);
    if (norm > cfg.grad_clip) {
        gx *= cfg.grad_clip / norm;
        gy *= cfg.grad_clip / norm;
    }
    JointPolicy next = policy;
    next.theta_x += cfg.lr * gx;
    next.theta_y += cfg.lr * gy;
    next.clip();
    return next;
}

double evaluate(const JointPolicy& policy, const GameSpec& game) { return reward(game, policy.action()); }

BrudLearner::BrudLearner(const GameSpec& game, const LearnerConfig& cfg, Rng& rng)
    : game_(game), cfg_(cfg), rng_(rng)
{
    cfg_.validate();
    policy_.theta_x = cfg.init.ax;
    policy_.theta_y = cfg.init.ay;
    policy_.low = game.action_low;
    policy_.high = game.action_high;
    policy_.clip();
    log_.push_back({0, policy_.theta_x, policy_.theta_y, evaluate(policy_, game_), 0.0, 0.0});
}

std::vector<JointAction> BrudLearner::draw(std::span<const JointAction> source)
{
    if (source.empty()) throw InvalidArgument("BRUD learner: empty data source");
    if (cfg_.full_batch) return {source.begin(), source.end()};
    std::uniform_int_distribution<std::size_t> pick(0, source.size() - 1);
    std::vector<JointAction> batch(static_cast<std::size_t>(cfg_.batch));
    for (auto& a : batch) a = source[pick(rng_)];
    return batch;
}

void BrudLearner::burn_in(std::span<const JointAction> source)
{
    for (int k = 0; k < cfg_.burn_in; ++k) (void)draw(source);
}

const StepRecord& BrudLearner::step(std::span<const JointAction> source)
{
    const auto batch = draw(source);
    const auto grad = brud_gradient(game_, batch, policy_);
    policy_ = update(policy_, grad, cfg_);
    log_.push_back({static_cast<int>(log_.size()), policy_.theta_x, policy_.theta_y, evaluate(policy_, game_), grad.first,
                    grad.second});
    return log_.back();
}

std::vector<StepRecord> train_brud(const GameSpec& game, std::span<const JointAction> source,
                                   const LearnerConfig& cfg, Rng& rng)
{
    BrudLearner learner(game, cfg, rng);
    learner.burn_in(source);
    for (int k = 0; k < cfg.steps; ++k) learner.step(source);
    return learner.log();
}

} // namespace coda
