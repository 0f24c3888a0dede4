// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/games.hpp"

#include <algorithm>
#include <cmath>

namespace coda {

std::string to_string(GameKind kind)
{
    switch (kind) {
    case GameKind::Multiplication: return "multiplication";
    case GameKind::TwinPeaks: return "twin_peaks";
    case GameKind::CustomPolynomial: return "custom";
    }
    return "unknown";
}

GameKind game_kind_from_string(const std::string& name)
{
    if (name == "multiplication") return GameKind::Multiplication;
    if (name == "twin_peaks") return GameKind::TwinPeaks;
    if (name == "custom") return GameKind::CustomPolynomial;
    throw InvalidArgument("unknown game kind '" + name + "'");
}

GameSpec GameSpec::multiplication()
{
    GameSpec g;
    g.kind = GameKind::Multiplication;
    g.coefficients = {{{1, 1}, 1.0}};
    return g;
}

GameSpec GameSpec::twin_peaks(double a, double b, double c)
{
    if (!(a > 0.0) || !(b > 0.0) || !(c > 2.0 * a)) {
        throw InvalidArgument("twin peaks requires A > 0, B > 0, C > 2A");
    }
    GameSpec g;
    g.kind = GameKind::TwinPeaks;
    g.coefficients = {{{2, 0}, -a}, {{0, 2}, -a}, {{2, 2}, -b}, {{1, 1}, c}};
    g.twin_peaks_params = std::array<double, 3>{a, b, c};
    return g;
}

GameSpec GameSpec::custom(std::map<Monomial, double> coefficients, double low, double high)
{
    GameSpec g;
    g.kind = GameKind::CustomPolynomial;
    g.coefficients = std::move(coefficients);
    g.action_low = low;
    g.action_high = high;
    g.validate();
    return g;
}

void GameSpec::validate() const
{
    if (!(action_low < action_high)) {
        throw InvalidArgument("game action_low must be < action_high");
    }
    for (const auto& [mono, c] : coefficients) {
        if (mono.first < 0 || mono.second < 0) {
            throw InvalidArgument("monomial exponents must be non-negative");
        }
        if (!std::isfinite(c)) {
            throw InvalidArgument("monomial coefficient must be finite");
        }
    }
}

void check_bounds(const GameSpec& game, const JointAction& a)
{
    auto inside = [&](double v) { return v >= game.action_low && v <= game.action_high; };
    if (!inside(a.ax) || !inside(a.ay)) {
        throw DomainError("joint action (" + std::to_string(a.ax) + ", " + std::to_string(a.ay) +
                          ") outside the action box");
    }
}

namespace {

// Integer power by repeated multiplication; exact for the small exponents used here.
double ipow(double base, int exp)
{
    double r = 1.0;
    for (int k = 0; k < exp; ++k) r *= base;
    return r;
}

} // namespace

double reward(const GameSpec& game, const JointAction& a)
{
    check_bounds(game, a);
    double r = 0.0;
    for (const auto& [mono, c] : game.coefficients) {
        r += c * ipow(a.ax, mono.first) * ipow(a.ay, mono.second);
    }
    return r;
}

std::pair<double, double> reward_grad(const GameSpec& game, const JointAction& a)
{
    check_bounds(game, a);
    double gx = 0.0;
    double gy = 0.0;
    for (const auto& [mono, c] : game.coefficients) {
        const auto [i, j] = mono;
        if (i > 0) gx += c * i * ipow(a.ax, i - 1) * ipow(a.ay, j);
        if (j > 0) gy += c * j * ipow(a.ax, i) * ipow(a.ay, j - 1);
    }
    return {gx, gy};
}

ActionStats compute_stats(const std::vector<JointAction>& actions)
{
    ActionStats s;
    if (actions.empty()) return s;
    const double n = static_cast<double>(actions.size());
    for (const auto& a : actions) {
        s.mean_x += a.ax;
        s.mean_y += a.ay;
    }
    s.mean_x /= n;
    s.mean_y /= n;
    for (const auto& a : actions) {
        s.var_x += (a.ax - s.mean_x) * (a.ax - s.mean_x);
        s.var_y += (a.ay - s.mean_y) * (a.ay - s.mean_y);
    }
    s.var_x /= n;
    s.var_y /= n;
    return s;
}

std::string to_string(DatasetLaw law)
{
    switch (law) {
    case DatasetLaw::Uniform: return "uniform";
    case DatasetLaw::SymmetricUniform: return "symmetric_uniform";
    case DatasetLaw::Gaussian: return "gaussian";
    case DatasetLaw::Point: return "point";
    }
    return "unknown";
}

DatasetLaw dataset_law_from_string(const std::string& name)
{
    if (name == "uniform") return DatasetLaw::Uniform;
    if (name == "symmetric_uniform") return DatasetLaw::SymmetricUniform;
    if (name == "gaussian") return DatasetLaw::Gaussian;
    if (name == "point") return DatasetLaw::Point;
    throw InvalidArgument("unknown dataset law '" + name + "'");
}

void OfflineDataset::refit() { stats = compute_stats(actions); }

OfflineDataset make_dataset(const GameSpec& game, std::vector<JointAction> actions)
{
    game.validate();
    OfflineDataset d;
    d.game = game;
    d.actions = std::move(actions);
    d.rewards.reserve(d.actions.size());
    for (const auto& a : d.actions) d.rewards.push_back(reward(game, a));
    d.settings.n = d.actions.size();
    d.refit();
    return d;
}

OfflineDataset gen_dataset(const GameSpec& game, const DatasetSettings& settings)
{
    if (settings.n == 0) throw InvalidArgument("gen_dataset: n must be >= 1");
    game.validate();
    const double lo = game.action_low;
    const double hi = game.action_high;
    Rng rng(derive_seed(settings.seed, "dataset"));
    std::uniform_real_distribution<double> uni(lo, hi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<JointAction> actions;
    actions.reserve(settings.n);
    switch (settings.law) {
    case DatasetLaw::Uniform:
        for (std::size_t k = 0; k < settings.n; ++k) {
            const double ax = uni(rng);
            const double ay = uni(rng);
            actions.push_back({ax, ay});
        }
        break;
    case DatasetLaw::SymmetricUniform: {
        // Reflection through the box centre keeps the box and the law invariant.
        const double mid = 0.5 * (lo + hi);
        while (actions.size() < settings.n) {
            const double ax = uni(rng);
            const double ay = uni(rng);
            actions.push_back({ax, ay});
            if (actions.size() < settings.n) actions.push_back({2.0 * mid - ax, 2.0 * mid - ay});
        }
        break;
    }
    case DatasetLaw::Gaussian:
        if (!(settings.stddev >= 0.0)) throw InvalidArgument("gen_dataset: stddev must be >= 0");
        for (std::size_t k = 0; k < settings.n; ++k) {
            const double ax = std::clamp(settings.mean.ax + settings.stddev * gauss(rng), lo, hi);
            const double ay = std::clamp(settings.mean.ay + settings.stddev * gauss(rng), lo, hi);
            actions.push_back({ax, ay});
        }
        break;
    case DatasetLaw::Point:
        check_bounds(game, settings.mean);
        actions.assign(settings.n, settings.mean);
        break;
    }

    OfflineDataset d = make_dataset(game, std::move(actions));
    d.settings = settings;
    return d;
}

OfflineDataset gen_dataset(const GameSpec& game, std::size_t n, std::uint64_t seed)
{
    DatasetSettings s;
    s.n = n;
    s.seed = seed;
    return gen_dataset(game, s);
}

GridOptimum grid_optimum(const GameSpec& game, std::size_t resolution)
{
    if (resolution < 2) throw InvalidArgument("grid_optimum: resolution must be >= 2");
    const double lo = game.action_low;
    const double hi = game.action_high;
    const double step = (hi - lo) / static_cast<double>(resolution - 1);
    auto coord = [&](std::size_t k) { return k + 1 == resolution ? hi : lo + step * static_cast<double>(k); };

    GridOptimum best{{coord(0), coord(0)}, reward(game, {coord(0), coord(0)})};
    // Row-major scan in increasing (a^x, a^y) order; a strict '>' keeps the
    // lexicographically smallest maximiser.
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            const JointAction a{coord(i), coord(j)};
            const double r = reward(game, a);
            if (r > best.value) best = {a, r};
        }
    }
    return best;
}

} // namespace coda
