// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"

#include "coda/games.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace coda;

TEST_CASE("multiplication reward at corners and centre")
{
    const auto g = GameSpec::multiplication();
    CHECK(reward(g, {1.0, 1.0}) == 1.0);
    CHECK(reward(g, {-1.0, -1.0}) == 1.0);
    CHECK(reward(g, {1.0, -1.0}) == -1.0);
    CHECK(reward(g, {0.0, 0.7}) == 0.0);
}

TEST_CASE("twin peaks reward at the symmetric optimum")
{
    const auto g = GameSpec::twin_peaks(1.0, 4.0, 5.0);
    const double s = std::sqrt(3.0 / 8.0);
    CHECK(reward(g, {s, s}) == doctest::Approx(9.0 / 16.0).epsilon(1e-12));
    CHECK(reward(g, {-s, -s}) == doctest::Approx(9.0 / 16.0).epsilon(1e-12));
    CHECK(reward(g, {0.0, 0.0}) == 0.0);
}

TEST_CASE("twin peaks parameter validation")
{
    CHECK_THROWS_AS(GameSpec::twin_peaks(0.0, 4.0, 5.0), InvalidArgument);
    CHECK_THROWS_AS(GameSpec::twin_peaks(1.0, 0.0, 5.0), InvalidArgument);
    CHECK_THROWS_AS(GameSpec::twin_peaks(1.0, 4.0, 2.0), InvalidArgument);
    CHECK_NOTHROW(GameSpec::twin_peaks(1.0, 4.0, 2.01));
}

TEST_CASE("out-of-bounds actions raise a domain error")
{
    const auto g = GameSpec::multiplication();
    CHECK_THROWS_AS(reward(g, {1.01, 0.0}), DomainError);
    CHECK_THROWS_AS(reward_grad(g, {0.0, -1.5}), DomainError);
    CHECK_NOTHROW(reward(g, {-1.0, 1.0}));
}

TEST_CASE("custom game rejects invalid bounds")
{
    CHECK_THROWS_AS(GameSpec::custom({{{1, 1}, 1.0}}, 1.0, -1.0), InvalidArgument);
    CHECK_THROWS_AS(GameSpec::custom({{{-1, 0}, 1.0}}), InvalidArgument);
}

TEST_CASE("property: reward matches the pow-based oracle on random polynomial games")
{
    gen::for_all(200, 11, [](gen::Source& src, int) {
        const auto g = src.polynomial_game();
        const auto a = src.action();
        CHECK(reward(g, a) == doctest::Approx(oracle::polynomial(g.coefficients, a.ax, a.ay)).epsilon(1e-12));
    });
}

TEST_CASE("property: reward_grad matches central finite differences")
{
    gen::for_all(200, 12, [](gen::Source& src, int) {
        const auto g = src.polynomial_game();
        const auto a = src.action(-0.99, 0.99);
        const auto [gx, gy] = reward_grad(g, a);
        const double fx = oracle::central_difference([&](double x) { return oracle::polynomial(g.coefficients, x, a.ay); }, a.ax);
        const double fy = oracle::central_difference([&](double y) { return oracle::polynomial(g.coefficients, a.ax, y); }, a.ay);
        CHECK(std::abs(gx - fx) < 1e-6);
        CHECK(std::abs(gy - fy) < 1e-6);
    });
}

TEST_CASE("gen_dataset: size, bounds, determinism")
{
    const auto g = GameSpec::multiplication();
    const auto d1 = gen_dataset(g, 4000, 5);
    const auto d2 = gen_dataset(g, 4000, 5);
    const auto d3 = gen_dataset(g, 4000, 6);
    REQUIRE(d1.size() == 4000);
    CHECK(d1.actions == d2.actions);
    CHECK_FALSE(d1.actions == d3.actions);
    for (std::size_t k = 0; k < d1.size(); ++k) {
        CHECK(std::abs(d1.actions[k].ax) <= 1.0);
        CHECK(d1.rewards[k] == doctest::Approx(d1.actions[k].ax * d1.actions[k].ay));
    }
    CHECK_THROWS_AS(gen_dataset(g, 0, 1), InvalidArgument);
}

TEST_CASE("uniform dataset moments approach 0 mean and 1/3 variance")
{
    const auto d = gen_dataset(GameSpec::multiplication(), 20000, 3);
    CHECK(std::abs(d.stats.mean_x) < 0.02);
    CHECK(std::abs(d.stats.mean_y) < 0.02);
    CHECK(d.stats.var_x == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("symmetric uniform law has exactly zero mean")
{
    DatasetSettings s;
    s.law = DatasetLaw::SymmetricUniform;
    s.n = 1000;
    s.seed = 9;
    const auto d = gen_dataset(GameSpec::twin_peaks(1, 4, 5), s);
    CHECK(std::abs(d.stats.mean_x) < 1e-15);
    CHECK(std::abs(d.stats.mean_y) < 1e-15);
    s.n = 7; // odd sizes keep the antithetic structure up to one record
    CHECK(gen_dataset(GameSpec::multiplication(), s).size() == 7);
}

TEST_CASE("point and gaussian laws")
{
    DatasetSettings s;
    s.law = DatasetLaw::Point;
    s.n = 10;
    s.mean = {0.3, -0.2};
    const auto p = gen_dataset(GameSpec::multiplication(), s);
    CHECK(p.stats.mean_x == doctest::Approx(0.3));
    CHECK(p.stats.var_y == doctest::Approx(0.0));
    s.mean = {2.0, 0.0};
    CHECK_THROWS_AS(gen_dataset(GameSpec::multiplication(), s), DomainError);

    s.law = DatasetLaw::Gaussian;
    s.n = 5000;
    s.mean = {0.4, 0.3};
    s.stddev = 0.1;
    const auto q = gen_dataset(GameSpec::multiplication(), s);
    CHECK(q.stats.mean_x == doctest::Approx(0.4).epsilon(0.02));
    CHECK(std::sqrt(q.stats.var_y) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("compute_stats uses population variance")
{
    const auto st = compute_stats({{1.0, 0.0}, {-1.0, 2.0}});
    CHECK(st.mean_x == 0.0);
    CHECK(st.var_x == 1.0);
    CHECK(st.mean_y == 1.0);
    CHECK(st.var_y == 1.0);
}

TEST_CASE("grid_optimum")
{
    SUBCASE("multiplication ties resolve to the lexicographically smallest corner")
    {
        const auto opt = grid_optimum(GameSpec::multiplication(), 101);
        CHECK(opt.value == 1.0);
        CHECK(opt.argmax == JointAction{-1.0, -1.0});
    }
    SUBCASE("twin peaks oracle value 9/16 near +-sqrt(3/8)")
    {
        const auto opt = grid_optimum(GameSpec::twin_peaks(1, 4, 5), 801);
        CHECK(opt.value == doctest::Approx(9.0 / 16.0).epsilon(1e-4));
        CHECK(std::abs(std::abs(opt.argmax.ax) - std::sqrt(3.0 / 8.0)) < 5e-3);
        CHECK(opt.argmax.ax == doctest::Approx(opt.argmax.ay));
    }
    CHECK_THROWS_AS(grid_optimum(GameSpec::multiplication(), 1), InvalidArgument);
}

TEST_CASE("string conversions round-trip")
{
    for (auto k : {GameKind::Multiplication, GameKind::TwinPeaks, GameKind::CustomPolynomial})
        CHECK(game_kind_from_string(to_string(k)) == k);
    for (auto l : {DatasetLaw::Uniform, DatasetLaw::SymmetricUniform, DatasetLaw::Gaussian, DatasetLaw::Point})
        CHECK(dataset_law_from_string(to_string(l)) == l);
    CHECK_THROWS_AS(game_kind_from_string("chess"), InvalidArgument);
}
