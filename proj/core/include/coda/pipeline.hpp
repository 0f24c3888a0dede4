// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coda/diffusion.hpp"
#include "coda/games.hpp"
#include "coda/guidance.hpp"
#include "coda/marl.hpp"
#include "coda/transforms.hpp"

namespace coda {

enum class Variant { Baseline, UncondAug, QCondAug, CodaCFG, CodaClassifier };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/// Which condition a behaviour prior was trained with.
enum class PriorKind { Unconditional, Policy, Return };

std::string to_string(PriorKind k);
PriorKind prior_kind_for(Variant v);

struct DiffusionSettings {
    NetworkArch arch;          // data_dim / cond_dim are filled in from the layout and prior kind
    TrainConfig train;
    TrainNoiseLaw noise;
    NoiseSchedule schedule;
    Churn churn;
    double cdf_epsilon = 1e-6;
    int workers = 1;
};

struct RunConfig {
    Variant variant = Variant::CodaCFG;
    int epochs = 30;             // N_epochs
    int policy_steps = 10;       // N_policy
    int synthetic_batch = 1000;  // B
    double alpha = 1.0;          // synthetic share of the training pool
    int generation_interval = 1; // epochs between generation rounds (on-policy variants)
    GuidanceHook guidance;       // mode is derived from the variant
    QTarget q_target;
    LearnerConfig learner;
    GameSpec game = GameSpec::multiplication();
    DatasetSettings dataset;     // dataset.seed is replaced by `seed`
    DiffusionSettings diffusion;
    double tail_fraction = 0.5;  // trailing share of updates averaged into the converged policy
    std::uint64_t seed = 0;

    void validate() const;
    /// Guidance hook with its mode set from the variant.
    GuidanceHook effective_guidance() const;
};

/// A trained behaviour prior: normalizer, denoiser and the condition it uses.
struct TrainedPrior {
    PriorKind kind = PriorKind::Unconditional;
    CdfNormalizer normalizer;
    DenoiserModel model;
    LossCurve losses;
    std::optional<double> return_condition; // for PriorKind::Return
};

/// Seed used to train the prior of `kind` for a run seeded with `seed`.
std::uint64_t prior_seed(std::uint64_t seed, PriorKind kind);

TrainedPrior train_prior(const OfflineDataset& data, PriorKind kind, const DiffusionSettings& settings,
                         std::uint64_t seed, const QTarget& q_target = {});

struct EpochRecord {
    int epoch = 0;
    double theta_x = 0.0;
    double theta_y = 0.0;
    double ret = 0.0;
    bool generated = false;
    double synthetic_loglik = 0.0; // under the policy used for generation
    double reference_loglik = 0.0; // unconditional reference batch, same policy
    double synthetic_mean_x = 0.0;
    double synthetic_mean_y = 0.0;
};

struct RunLog {
    Variant variant = Variant::Baseline;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<EpochRecord> epochs;
    std::vector<StepRecord> steps;
    JointPolicy final_policy;
    double final_return = 0.0;
    JointAction converged_theta; // mean over the trailing tail_fraction of updates
    double converged_return = 0.0;
    std::vector<JointAction> first_synthetic; // first generated pool, for plotting
    double wall_seconds = 0.0;                // not part of the reproducible record
};

/// Caches trained priors per (dataset, diffusion settings, kind, seed).
class PriorCache {
public:
    std::shared_ptr<const TrainedPrior> get(const OfflineDataset& data, PriorKind kind, const RunConfig& cfg);

private:
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const TrainedPrior>> cache_;
};

OfflineDataset run_dataset(const RunConfig& cfg);

/// Trains the prior (or takes it from `cache`) and executes the epoch loop.
RunLog run(const RunConfig& cfg, PriorCache* cache = nullptr);

struct SweepRow {
    std::string label;
    Variant variant = Variant::Baseline;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_return = 0.0;
    RunLog log;
};

struct SweepAggregate {
    std::string label;
    Variant variant = Variant::Baseline;
    int runs = 0;
    int failures = 0;
    double mean_return = 0.0;
    double stderr_return = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepAggregate> aggregates;
};

/// Runs every config, recording failures instead of stopping. Rows keep the
/// input order; `jobs` > 1 fans runs out over threads.
SweepResult sweep(const std::vector<RunConfig>& configs, int jobs = 1, PriorCache* cache = nullptr);

/// Label used to group sweep rows: "<game>/<variant>".
std::string run_label(const RunConfig& cfg);

} // namespace coda
