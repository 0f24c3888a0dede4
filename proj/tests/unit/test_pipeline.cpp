// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include "coda/pipeline.hpp"
#include "coda/serialization.hpp"

using namespace coda;

namespace {

RunConfig quick(Variant v, std::uint64_t seed = 1)
{
    RunConfig c;
    c.variant = v;
    c.seed = seed;
    c.epochs = 4;
    c.policy_steps = 5;
    c.synthetic_batch = 200;
    c.dataset.n = 1000;
    c.diffusion.train.epochs = 200;
    c.diffusion.train.batch = 200;
    c.diffusion.schedule.steps = 12;
    return c;
}

bool same_steps(const std::vector<StepRecord>& a, const std::vector<StepRecord>& b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].theta_x != b[k].theta_x || a[k].theta_y != b[k].theta_y || a[k].ret != b[k].ret) return false;
    }
    return true;
}

} // namespace

TEST_CASE("variant names and prior kinds")
{
    for (auto v : {Variant::Baseline, Variant::UncondAug, Variant::QCondAug, Variant::CodaCFG, Variant::CodaClassifier})
        CHECK(variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("coda"), InvalidArgument);
    CHECK(prior_kind_for(Variant::UncondAug) == PriorKind::Unconditional);
    CHECK(prior_kind_for(Variant::CodaClassifier) == PriorKind::Unconditional);
    CHECK(prior_kind_for(Variant::CodaCFG) == PriorKind::Policy);
    CHECK(prior_kind_for(Variant::QCondAug) == PriorKind::Return);
}

TEST_CASE("config validation")
{
    RunConfig c;
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.alpha = -0.1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.synthetic_batch = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.variant = Variant::Baseline;
    CHECK_NOTHROW(c.validate());
    c = {};
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.tail_fraction = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.learner.lr = -1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("Baseline reproduces train_brud exactly")
{
    for (double alpha : {0.0, 0.3, 1.0}) {
        RunConfig c = quick(Variant::Baseline, 11);
        c.alpha = alpha;
        const RunLog log = run(c);
        const auto data = run_dataset(c);
        LearnerConfig lc = c.learner;
        lc.steps = c.epochs * c.policy_steps;
        Rng rng = make_rng(c.seed, "learner");
        CHECK(same_steps(log.steps, train_brud(c.game, data.actions, lc, rng)));
        CHECK(log.epochs.size() == 4);
        CHECK(log.first_synthetic.empty());
    }
}

TEST_CASE("run is deterministic")
{
    const RunLog a = run(quick(Variant::CodaClassifier, 3));
    const RunLog b = run(quick(Variant::CodaClassifier, 3));
    CHECK(same_steps(a.steps, b.steps));
    CHECK(a.first_synthetic == b.first_synthetic);
    CHECK(a.config_hash == b.config_hash);
    const RunLog c = run(quick(Variant::CodaClassifier, 4));
    CHECK_FALSE(same_steps(a.steps, c.steps));
}

TEST_CASE("static augmentation keeps one pool for every epoch")
{
    PriorCache cache;
    for (auto v : {Variant::UncondAug, Variant::QCondAug}) {
        const RunLog log = run(quick(v), &cache);
        REQUIRE(log.epochs.size() == 4);
        CHECK(log.epochs[0].generated);
        for (std::size_t e = 1; e < log.epochs.size(); ++e) {
            CHECK_FALSE(log.epochs[e].generated);
            CHECK(log.epochs[e].synthetic_mean_x == log.epochs[0].synthetic_mean_x);
            CHECK(log.epochs[e].synthetic_mean_y == log.epochs[0].synthetic_mean_y);
        }
    }
}

TEST_CASE("on-policy variants regenerate and tilt toward the current policy")
{
    PriorCache cache;
    for (auto v : {Variant::CodaClassifier, Variant::CodaCFG}) {
        RunConfig c = quick(v, 5);
        c.diffusion.train.epochs = 600;
        c.diffusion.schedule.steps = 40;
        const RunLog log = run(c, &cache);
        for (const auto& e : log.epochs) CHECK(e.generated);
        if (v == Variant::CodaClassifier) {
            for (std::size_t e = 1; e < log.epochs.size(); ++e)
                CHECK(log.epochs[e].synthetic_loglik >= log.epochs[e].reference_loglik);
        }
    }
}

TEST_CASE("generation interval")
{
    RunConfig c = quick(Variant::CodaClassifier);
    c.generation_interval = 2;
    const RunLog log = run(c);
    CHECK(log.epochs[0].generated);
    CHECK_FALSE(log.epochs[1].generated);
    CHECK(log.epochs[2].generated);
}

TEST_CASE("prior cache shares one prior between variants of the same kind")
{
    PriorCache cache;
    const RunConfig a = quick(Variant::UncondAug);
    const RunConfig b = quick(Variant::CodaClassifier);
    const auto data = run_dataset(a);
    CHECK(cache.get(data, PriorKind::Unconditional, a) == cache.get(data, PriorKind::Unconditional, b));
    const RunLog cached = run(b, &cache);
    const RunLog fresh = run(b);
    CHECK(same_steps(cached.steps, fresh.steps));
}

TEST_CASE("converged theta averages the trailing updates")
{
    RunConfig c = quick(Variant::Baseline);
    c.tail_fraction = 1.0;
    const RunLog log = run(c);
    double sx = 0;
    for (std::size_t k = 1; k < log.steps.size(); ++k) sx += log.steps[k].theta_x;
    CHECK(log.converged_theta.ax == doctest::Approx(sx / static_cast<double>(log.steps.size() - 1)));
    CHECK(log.final_return == evaluate(log.final_policy, c.game));
}

TEST_CASE("sweep")
{
    CHECK_THROWS_AS(sweep({}), InvalidArgument);

    const RunConfig c = quick(Variant::Baseline, 8);
    const SweepResult one = sweep({c});
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0].ok);
    CHECK(same_steps(one.rows[0].log.steps, run(c).steps));

    std::vector<RunConfig> configs;
    for (std::uint64_t s = 0; s < 5; ++s) configs.push_back(quick(Variant::Baseline, s));
    RunConfig bad = quick(Variant::Baseline, 9);
    bad.alpha = 3;
    configs.push_back(bad);
    const SweepResult serial = sweep(configs, 1);
    const SweepResult parallel = sweep(configs, 4);
    REQUIRE(serial.rows.size() == 6);
    CHECK_FALSE(serial.rows[5].ok);
    CHECK_FALSE(serial.rows[5].error.empty());
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(serial.rows[k].ok);
        CHECK(serial.rows[k].final_return == parallel.rows[k].final_return);
    }
    REQUIRE(serial.aggregates.size() == 1);
    const auto& agg = serial.aggregates[0];
    CHECK(agg.runs == 6);
    CHECK(agg.failures == 1);
    double mean = 0;
    for (std::size_t k = 0; k < 5; ++k) mean += serial.rows[k].final_return / 5;
    CHECK(agg.mean_return == doctest::Approx(mean));
}

TEST_CASE("divergent diffusion training aborts with context")
{
    RunConfig c = quick(Variant::UncondAug);
    c.diffusion.train.optimizer = Optimizer::Sgd;
    c.diffusion.train.lr = 1e6;
    c.diffusion.train.grad_clip = 1e12;
    CHECK_THROWS_AS(run(c), NumericError);
}
