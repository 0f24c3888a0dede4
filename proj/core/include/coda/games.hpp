// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coda/common.hpp"

namespace coda {

enum class GameKind { Multiplication, TwinPeaks, CustomPolynomial };

std::string to_string(GameKind kind);
GameKind game_kind_from_string(const std::string& name);

/// Exponent pair (i, j) of the monomial (a^x)^i (a^y)^j.
using Monomial = std::pair<int, int>;

/// Shared reward R(a^x, a^y) = sum c_ij (a^x)^i (a^y)^j of a two-player
/// single-step game on the box [action_low, action_high]^2.
struct GameSpec {
    GameKind kind = GameKind::Multiplication;
    std::map<Monomial, double> coefficients;
    double action_low = -1.0;
    double action_high = 1.0;
    // Populated for TwinPeaks so reports can echo (A, B, C).
    std::optional<std::array<double, 3>> twin_peaks_params;

    static GameSpec multiplication();
    /// Requires A > 0, B > 0, C > 2A.
    static GameSpec twin_peaks(double a, double b, double c);
    static GameSpec custom(std::map<Monomial, double> coefficients, double low = -1.0, double high = 1.0);

    void validate() const;
};

struct JointAction {
    double ax = 0.0;
    double ay = 0.0;

    friend bool operator==(const JointAction&, const JointAction&) = default;
};

/// Throws DomainError if `a` lies outside the game's action box.
void check_bounds(const GameSpec& game, const JointAction& a);

double reward(const GameSpec& game, const JointAction& a);

/// (dR/da^x, dR/da^y) by term-wise differentiation.
std::pair<double, double> reward_grad(const GameSpec& game, const JointAction& a);

/// Per-agent moments of the stored actions. Variances are population
/// (divide-by-n) moments so that E[a^2] = mean^2 + var holds exactly.
struct ActionStats {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double var_x = 0.0;
    double var_y = 0.0;
};

ActionStats compute_stats(const std::vector<JointAction>& actions);

enum class DatasetLaw {
    Uniform,            // i.i.d. uniform over the action box
    SymmetricUniform,   // uniform with antithetic (a, -a) pairs: exactly origin-centred
    Gaussian,           // N(mean, std^2 I) clipped to the box
    Point               // every sample at `mean` (degenerate generator)
};

std::string to_string(DatasetLaw law);
DatasetLaw dataset_law_from_string(const std::string& name);

struct DatasetSettings {
    DatasetLaw law = DatasetLaw::Uniform;
    std::size_t n = 4000;
    std::uint64_t seed = 0;
    JointAction mean{0.0, 0.0};
    double stddev = 0.5;
};

/// Offline data for a single-step game: one joint action and its reward per
/// record, plus fitted per-agent moments.
struct OfflineDataset {
    GameSpec game;
    std::vector<JointAction> actions;
    std::vector<double> rewards;
    ActionStats stats;
    DatasetSettings settings;

    std::size_t size() const { return actions.size(); }
    /// Recomputes stats from the stored actions.
    void refit();
};

OfflineDataset gen_dataset(const GameSpec& game, const DatasetSettings& settings);
/// Convenience overload: uniform law.
OfflineDataset gen_dataset(const GameSpec& game, std::size_t n, std::uint64_t seed);

/// Builds a dataset from explicit actions (rewards and stats computed).
OfflineDataset make_dataset(const GameSpec& game, std::vector<JointAction> actions);

struct GridOptimum {
    JointAction argmax;
    double value = 0.0;
};

/// Exhaustive resolution x resolution evaluation over the action box. Ties go
/// to the lexicographically smallest (a^x, a^y).
GridOptimum grid_optimum(const GameSpec& game, std::size_t resolution);

} // namespace coda
