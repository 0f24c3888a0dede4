// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>

#include "coda/pipeline.hpp"

namespace fixture {

/// Reduced training budget for unit tests.
inline coda::DiffusionSettings small_diffusion()
{
    coda::DiffusionSettings s;
    s.train.epochs = 2000;
    s.train.batch = 500;
    return s;
}

inline const coda::OfflineDataset& multiplication_data()
{
    static const coda::OfflineDataset d = coda::gen_dataset(coda::GameSpec::multiplication(), 4000, 101);
    return d;
}

/// Trains each prior kind on the shared multiplication dataset once per process.
inline const coda::TrainedPrior& prior(coda::PriorKind kind)
{
    static std::map<coda::PriorKind, std::unique_ptr<coda::TrainedPrior>> cache;
    auto& slot = cache[kind];
    if (!slot) {
        slot = std::make_unique<coda::TrainedPrior>(
            coda::train_prior(multiplication_data(), kind, small_diffusion(), 202 + static_cast<int>(kind)));
    }
    return *slot;
}

inline coda::SamplerSetup sampler(const coda::TrainedPrior& p)
{
    coda::SamplerSetup s;
    s.model = &p.model;
    s.normalizer = &p.normalizer;
    return s;
}

} // namespace fixture
