// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "coda/common.hpp"
#include "coda/games.hpp"

namespace coda {

/// Stateless deterministic two-agent policy: agent x always plays theta_x,
/// agent y always plays theta_y. Parameters stay inside [low, high].
struct JointPolicy {
    double theta_x = -0.64;
    double theta_y = 0.65;
    double low = -1.0;
    double high = 1.0;

    void clip();
    /// Action mean of `agent` (0 = x, 1 = y); observations are ignored.
    double mean(int agent) const { return agent == 0 ? theta_x : theta_y; }
    JointAction action() const { return {theta_x, theta_y}; }
    /// Condition vector used by policy-conditioned generation.
    Vector descriptor() const;

    friend bool operator==(const JointPolicy&, const JointPolicy&) = default;
};

struct LearnerConfig {
    double lr = 0.1;
    double grad_clip = 1.0;
    int batch = 64;
    JointAction init{-0.64, 0.65};
    int burn_in = 2;
    int steps = 300;
    bool full_batch = false;

    void validate() const;
};

/// BRUD policy gradient: agent x differentiates R at its own parameter with
/// the teammate's action taken from the data, and symmetrically for y.
std::pair<double, double> brud_gradient(const GameSpec& game, std::span<const JointAction> batch,
                                        const JointPolicy& policy);

/// Ascent step with norm clipping, then clipping into the action bounds.
JointPolicy update(const JointPolicy& policy, std::pair<double, double> grad, const LearnerConfig& cfg);

/// Deterministic test return R(theta_x, theta_y).
double evaluate(const JointPolicy& policy, const GameSpec& game);

struct StepRecord {
    int step = 0;
    double theta_x = 0.0;
    double theta_y = 0.0;
    double ret = 0.0;
    double grad_x = 0.0;
    double grad_y = 0.0;
};

/// Incremental BRUD learner. Mini-batches are drawn uniformly with
/// replacement from whatever source is passed to each call, so a pipeline
/// can swap the data pool between epochs.
class BrudLearner {
public:
    BrudLearner(const GameSpec& game, const LearnerConfig& cfg, Rng& rng);

    const JointPolicy& policy() const { return policy_; }
    const std::vector<StepRecord>& log() const { return log_; }

    /// Draws `cfg.burn_in` batches without updating.
    void burn_in(std::span<const JointAction> source);
    /// One simultaneous update of both agents from a single batch.
    const StepRecord& step(std::span<const JointAction> source);

private:
    std::vector<JointAction> draw(std::span<const JointAction> source);

    GameSpec game_;
    LearnerConfig cfg_;
    Rng& rng_;
    JointPolicy policy_;
    std::vector<StepRecord> log_;
};

/// Burn-in followed by cfg.steps updates. The log holds the initial policy as
/// step 0 and one record per update.
std::vector<StepRecord> train_brud(const GameSpec& game, std::span<const JointAction> source,
                                   const LearnerConfig& cfg, Rng& rng);

} // namespace coda
