// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "coda/diffusion.hpp"
#include "coda/guidance.hpp"
#include "coda/marl.hpp"
#include "coda/pipeline.hpp"

using namespace coda;

namespace {

const OfflineDataset& data()
{
    static const OfflineDataset d = gen_dataset(GameSpec::multiplication(), 4000, 1);
    return d;
}

const TrainedPrior& prior()
{
    static const TrainedPrior p = [] {
        DiffusionSettings s;
        s.train.epochs = 200;
        return train_prior(data(), PriorKind::Unconditional, s, 2);
    }();
    return p;
}

void BM_DenoiserForward(benchmark::State& state)
{
    const auto& p = prior();
    const Matrix x = Matrix::Random(state.range(0), 5);
    for (auto _ : state) benchmark::DoNotOptimize(denoise_batch(p.model, x, 1.0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenoiserForward)->Arg(250)->Arg(1000);

void BM_TrainingStep(benchmark::State& state)
{
    const Matrix raw = to_trajectories(data());
    const auto norm = CdfNormalizer::fit(raw);
    const Matrix z = norm.forward_rows(raw);
    Rng rng(3);
    NetworkArch arch;
    arch.data_dim = 5;
    DenoiserModel model = make_model(arch, z, rng);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train(model, z, nullptr, TrainNoiseLaw{}, cfg, rng));
}
BENCHMARK(BM_TrainingStep)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_HeunSample(benchmark::State& state)
{
    const auto& p = prior();
    SamplerSetup s;
    s.model = &p.model;
    s.normalizer = &p.normalizer;
    GuidanceHook h;
    h.mode = state.range(1) ? GuidanceMode::Classifier : GuidanceMode::None;
    h.lambda = 0.6;
    JointPolicy pol;
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample_trajectories(s, h, &pol, {}, static_cast<std::size_t>(state.range(0)), ++seed));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HeunSample)->Args({1000, 0})->Args({1000, 1})->Unit(benchmark::kMillisecond);

void BM_BrudGradient(benchmark::State& state)
{
    const auto game = GameSpec::twin_peaks(1, 4, 5);
    const auto& d = data();
    const std::span<const JointAction> batch(d.actions.data(), static_cast<std::size_t>(state.range(0)));
    JointPolicy p;
    for (auto _ : state) benchmark::DoNotOptimize(brud_gradient(game, batch, p));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BrudGradient)->Arg(64)->Arg(4000);

} // namespace

BENCHMARK_MAIN();
