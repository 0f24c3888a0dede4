// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "coda/analysis.hpp"
#include "coda/serialization.hpp"

namespace coda {

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::UncondAug: return "uncond_aug";
    case Variant::QCondAug: return "qcond_aug";
    case Variant::CodaCFG: return "coda_cfg";
    case Variant::CodaClassifier: return "coda_classifier";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& name)
{
    for (Variant v : {Variant::Baseline, Variant::UncondAug, Variant::QCondAug, Variant::CodaCFG, Variant::CodaClassifier}) {
        if (to_string(v) == name) return v;
    }
    throw InvalidArgument("unknown variant '" + name + "'");
}

std::string to_string(PriorKind k)
{
    switch (k) {
    case PriorKind::Unconditional: return "unconditional";
    case PriorKind::Policy: return "policy";
    case PriorKind::Return: return "return";
    }
    return "unknown";
}

PriorKind prior_kind_for(Variant v)
{
    switch (v) {
    case Variant::CodaCFG: return PriorKind::Policy;
    case Variant::QCondAug: return PriorKind::Return;
    default: return PriorKind::Unconditional;
    }
}

void RunConfig::validate() const
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha: must lie in [0, 1]");
    if (epochs < 1) throw InvalidArgument("epochs: must be >= 1");
    if (policy_steps < 1) throw InvalidArgument("policy_steps: must be >= 1");
    if (variant != Variant::Baseline && synthetic_batch < 1) {
        throw InvalidArgument("synthetic_batch: must be >= 1 for augmenting variants");
    }
    if (generation_interval < 1) throw InvalidArgument("generation_interval: must be >= 1");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw InvalidArgument("tail_fraction: must lie in (0, 1]");
    if (dataset.n < 2) throw InvalidArgument("dataset.n: must be >= 2");
    if (diffusion.workers < 1) throw InvalidArgument("diffusion.workers: must be >= 1");
    if (!(diffusion.cdf_epsilon > 0.0 && diffusion.cdf_epsilon < 0.5)) {
        throw InvalidArgument("diffusion.cdf_epsilon: must lie in (0, 0.5)");
    }
    if (diffusion.train.epochs < 1 || diffusion.train.batch < 1) {
        throw InvalidArgument("diffusion.train: epochs and batch must be >= 1");
    }
    if (q_target.kind == QTarget::Kind::Quantile && !(q_target.q >= 0.0 && q_target.q <= 1.0)) {
        throw InvalidArgument("q_target.q: must lie in [0, 1]");
    }
    learner.validate();
    guidance.validate();
    game.validate();
    diffusion.schedule.validate();
}

GuidanceHook RunConfig::effective_guidance() const
{
    GuidanceHook hook = guidance;
    switch (variant) {
    case Variant::Baseline:
    case Variant::UncondAug: hook.mode = GuidanceMode::None; break;
    case Variant::QCondAug: hook.mode = GuidanceMode::QCond; break;
    case Variant::CodaCFG: hook.mode = GuidanceMode::CFG; break;
    case Variant::CodaClassifier: hook.mode = GuidanceMode::Classifier; break;
    }
    return hook;
}

TrainedPrior train_prior(const OfflineDataset& data, PriorKind kind, const DiffusionSettings& settings,
                         std::uint64_t seed, const QTarget& q_target)
{
    const TrajectoryLayout layout;
    const Matrix raw = to_trajectories(data, layout);

    TrainedPrior prior;
    prior.kind = kind;
    prior.normalizer = CdfNormalizer::fit(raw, settings.cdf_epsilon);
    const Matrix z = prior.normalizer.forward_rows(raw);
    if (!all_finite(z)) throw NumericError("diffusion training: non-finite normalized data");

    Matrix conds;
    NetworkArch arch = settings.arch;
    arch.data_dim = layout.dim();
    switch (kind) {
    case PriorKind::Unconditional: arch.cond_dim = 0; break;
    case PriorKind::Policy:
        arch.cond_dim = 2;
        conds = cfg_condition_labels(data);
        break;
    case PriorKind::Return: {
        arch.cond_dim = 1;
        QLabels q = q_condition_labels(data, q_target);
        conds = std::move(q.labels);
        prior.return_condition = q.condition;
        break;
    }
    }

    Rng rng(seed);
    prior.model = make_model(arch, z, rng);
    try {
        prior.losses = train(prior.model, z, arch.cond_dim > 0 ? &conds : nullptr, settings.noise, settings.train, rng);
    } catch (const NumericError& e) {
        throw NumericError(std::string("diffusion training: ") + e.what());
    }
    return prior;
}

std::uint64_t prior_seed(std::uint64_t seed, PriorKind kind)
{
    return derive_seed(seed, "diffusion", static_cast<std::uint64_t>(kind));
}

namespace {

// Only the fields that influence prior training.
std::string prior_key(const RunConfig& cfg, PriorKind kind)
{
    RunConfig key;
    key.seed = cfg.seed;
    key.game = cfg.game;
    key.dataset = cfg.dataset;
    key.diffusion = cfg.diffusion;
    key.diffusion.workers = 1;
    if (kind == PriorKind::Return) key.q_target = cfg.q_target;
    return to_string(kind) + ":" + to_json_text(key);
}

SamplerSetup sampler_for(const TrainedPrior& prior, const DiffusionSettings& settings)
{
    SamplerSetup s;
    s.model = &prior.model;
    s.normalizer = &prior.normalizer;
    s.schedule = settings.schedule;
    s.churn = settings.churn;
    s.options.workers = settings.workers;
    return s;
}

std::vector<JointAction> generate_actions(const TrainedPrior& prior, const SamplerSetup& setup, const GuidanceHook& hook,
                                          const JointPolicy& policy, std::size_t n, std::uint64_t seed)
{
    std::optional<Vector> condition;
    if (hook.mode == GuidanceMode::CFG) condition = policy.descriptor();
    if (hook.mode == GuidanceMode::QCond) condition = Vector::Constant(1, *prior.return_condition);
    const Matrix z = sample_trajectories(setup, hook, &policy, condition, n, seed);
    return actions_from_trajectories(prior.normalizer.inverse_rows(z), setup.layout);
}

} // namespace

std::shared_ptr<const TrainedPrior> PriorCache::get(const OfflineDataset& data, PriorKind kind, const RunConfig& cfg)
{
    const std::string key = prior_key(cfg, kind);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    auto prior = std::make_shared<const TrainedPrior>(
        train_prior(data, kind, cfg.diffusion, prior_seed(cfg.seed, kind), cfg.q_target));
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, std::move(prior)).first->second;
}

OfflineDataset run_dataset(const RunConfig& cfg)
{
    DatasetSettings s = cfg.dataset;
    s.seed = derive_seed(cfg.seed, "dataset");
    return gen_dataset(cfg.game, s);
}

RunLog run(const RunConfig& cfg, PriorCache* cache)
{
    const auto started = std::chrono::steady_clock::now();
    cfg.validate();

    RunLog log;
    log.variant = cfg.variant;
    log.seed = cfg.seed;
    log.config_hash = config_hash(cfg);

    const OfflineDataset data = run_dataset(cfg);
    const bool augmenting = cfg.variant != Variant::Baseline;
    const bool on_policy = cfg.variant == Variant::CodaCFG || cfg.variant == Variant::CodaClassifier;
    const GuidanceHook hook = cfg.effective_guidance();

    std::shared_ptr<const TrainedPrior> prior;
    if (augmenting) {
        const PriorKind kind = prior_kind_for(cfg.variant);
        prior = cache ? cache->get(data, kind, cfg)
                      : std::make_shared<const TrainedPrior>(
                            train_prior(data, kind, cfg.diffusion, prior_seed(cfg.seed, kind), cfg.q_target));
    }
    SamplerSetup setup;
    if (prior) setup = sampler_for(*prior, cfg.diffusion);

    Rng learner_rng = make_rng(cfg.seed, "learner");
    Rng pool_rng = make_rng(cfg.seed, "pool");
    BrudLearner learner(cfg.game, cfg.learner, learner_rng);

    const auto batch = static_cast<std::size_t>(cfg.synthetic_batch);
    std::vector<JointAction> reference;
    if (augmenting) {
        GuidanceHook plain = hook;
        plain.mode = GuidanceMode::None;
        reference = generate_actions(*prior, setup, plain, learner.policy(), batch, derive_seed(cfg.seed, "reference"));
    }

    std::vector<JointAction> synthetic;
    std::vector<JointAction> pool;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        try {
            if (augmenting) {
                const bool due = on_policy ? epoch % cfg.generation_interval == 0 : epoch == 0;
                if (due) {
                    const JointPolicy& current = learner.policy();
                    synthetic = generate_actions(*prior, setup, hook, current, batch,
                                                 derive_seed(cfg.seed, "generate", static_cast<std::uint64_t>(epoch)));
                    if (log.first_synthetic.empty()) log.first_synthetic = synthetic;
                    rec.generated = true;
                    rec.synthetic_loglik = mean_policy_loglik(synthetic, current, hook.surrogate_std);
                    rec.reference_loglik = mean_policy_loglik(reference, current, hook.surrogate_std);

                    const auto n_syn = static_cast<std::size_t>(std::lround(cfg.alpha * static_cast<double>(batch)));
                    pool.assign(synthetic.begin(), synthetic.begin() + static_cast<std::ptrdiff_t>(n_syn));
                    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
                    while (pool.size() < batch) pool.push_back(data.actions[pick(pool_rng)]);
                }
                double mx = 0.0, my = 0.0;
                for (const auto& a : synthetic) {
                    mx += a.ax;
                    my += a.ay;
                }
                rec.synthetic_mean_x = mx / static_cast<double>(synthetic.size());
                rec.synthetic_mean_y = my / static_cast<double>(synthetic.size());
            }
            const std::span<const JointAction> source = augmenting ? std::span<const JointAction>(pool)
                                                                   : std::span<const JointAction>(data.actions);
            if (epoch == 0) learner.burn_in(source);
            for (int k = 0; k < cfg.policy_steps; ++k) learner.step(source);
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        rec.theta_x = learner.policy().theta_x;
        rec.theta_y = learner.policy().theta_y;
        rec.ret = evaluate(learner.policy(), cfg.game);
        log.epochs.push_back(rec);
    }

    log.steps = learner.log();
    log.final_policy = learner.policy();
    log.final_return = evaluate(log.final_policy, cfg.game);

    const std::size_t updates = log.steps.size() - 1;
    const auto tail = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(cfg.tail_fraction * static_cast<double>(updates))));
    double tx = 0.0, ty = 0.0;
    for (std::size_t k = log.steps.size() - tail; k < log.steps.size(); ++k) {
        tx += log.steps[k].theta_x;
        ty += log.steps[k].theta_y;
    }
    JointPolicy converged = log.final_policy;
    converged.theta_x = tx / static_cast<double>(tail);
    converged.theta_y = ty / static_cast<double>(tail);
    log.converged_theta = converged.action();
    log.converged_return = evaluate(converged, cfg.game);

    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return log;
}

std::string run_label(const RunConfig& cfg) { return to_string(cfg.game.kind) + "/" + to_string(cfg.variant); }

SweepResult sweep(const std::vector<RunConfig>& configs, int jobs, PriorCache* cache)
{
    if (configs.empty()) throw InvalidArgument("sweep: no configs");
    SweepResult result;
    result.rows.resize(configs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            SweepRow& row = result.rows[i];
            row.label = run_label(configs[i]);
            row.variant = configs[i].variant;
            row.seed = configs[i].seed;
            try {
                row.log = run(configs[i], cache);
                row.final_return = row.log.final_return;
                row.ok = true;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    const int n_threads = std::clamp<int>(jobs, 1, static_cast<int>(configs.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    for (const auto& row : result.rows) {
        auto it = std::find_if(result.aggregates.begin(), result.aggregates.end(),
                               [&](const SweepAggregate& a) { return a.label == row.label; });
        if (it == result.aggregates.end()) {
            result.aggregates.push_back({row.label, row.variant, 0, 0, 0.0, 0.0});
            it = std::prev(result.aggregates.end());
        }
        ++it->runs;
        if (!row.ok) ++it->failures;
    }
    for (auto& agg : result.aggregates) {
        std::vector<double> values;
        for (const auto& row : result.rows)
            if (row.ok && row.label == agg.label) values.push_back(row.final_return);
        if (values.empty()) continue;
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        agg.mean_return = mean;
        agg.stderr_return = values.size() > 1
                                ? std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()))
                                : 0.0;
    }
    return result;
}

} // namespace coda
