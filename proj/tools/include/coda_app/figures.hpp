// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "coda/pipeline.hpp"

namespace coda::app {

/// Preset run for the policy-path figures: figure 1 is the Multiplication
/// game on uniform data, figure 2 is TwinPeaks(1, 4, 5) on origin-centred
/// data with a longer update budget.
RunConfig figure_config(int figure, Variant variant, std::uint64_t seed);

struct FigureSpec {
    int figure = 1;
    std::vector<Variant> variants{Variant::Baseline, Variant::UncondAug, Variant::QCondAug, Variant::CodaClassifier};
    int seeds = 5;
    std::uint64_t base_seed = 0;
    int jobs = 1;
};

struct FigureResult {
    int figure = 1;
    OfflineDataset dataset; // the first seed's dataset, for the scatter panel
    GridOptimum optimum;
    std::vector<Variant> variants;
    std::vector<std::vector<RunLog>> logs; // [variant][seed]
};

/// Runs every (variant, seed) pair. Throws with the stage name on failure.
FigureResult reproduce_figure(const FigureSpec& spec, PriorCache* cache = nullptr);

/// Writes dataset.csv, paths.csv, returns.csv, summary.csv and three SVG
/// panels (fig_dataset.svg, fig_paths.svg, fig_returns.svg) into `dir`.
void write_figure(const std::filesystem::path& dir, const FigureResult& result);

} // namespace coda::app
