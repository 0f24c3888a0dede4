// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"

#include "coda/diffusion.hpp"
#include "coda/transforms.hpp"
#include "oracles.hpp"

using namespace coda;

TEST_CASE("karras schedule endpoints and formula")
{
    const NoiseSchedule s;
    const auto sig = karras_sigmas(s);
    REQUIRE(sig.size() == 41);
    CHECK(sig[0] == 80.0);
    CHECK(sig[39] == 0.002);
    CHECK(sig[40] == 0.0);
    for (int i = 0; i < 40; ++i) {
        CHECK(sig[static_cast<std::size_t>(i)] > sig[static_cast<std::size_t>(i) + 1]);
        CHECK(sig[static_cast<std::size_t>(i)] == doctest::Approx(oracle::karras(i, 40, 0.002, 80.0, 7.0)).epsilon(1e-12));
    }
}

TEST_CASE("karras schedule degenerate and invalid")
{
    NoiseSchedule one;
    one.steps = 1;
    const auto sig = karras_sigmas(one);
    REQUIRE(sig.size() == 2);
    CHECK(sig[0] == 80.0);
    CHECK(sig[1] == 0.0);
    NoiseSchedule bad;
    bad.sigma_min = 100.0;
    CHECK_THROWS_AS(karras_sigmas(bad), InvalidArgument);
    bad = {};
    bad.rho = 0.0;
    CHECK_THROWS_AS(karras_sigmas(bad), InvalidArgument);
}

TEST_CASE("training noise law")
{
    const TrainNoiseLaw law;
    CHECK(train_sigma_from_normal(law, 0.0) == doctest::Approx(std::exp(-1.2)));
    CHECK(train_sigma_from_normal(law, 0.0) == doctest::Approx(0.3012).epsilon(1e-3));
    CHECK(train_sigma_from_normal(law, 10.0) == 80.0);
    CHECK(train_sigma_from_normal(law, -10.0) == 0.002);

    Rng rng(11);
    std::vector<double> draws(100000);
    for (auto& d : draws) {
        d = sample_train_sigma(law, rng);
        REQUIRE(d >= 0.002);
        REQUIRE(d <= 80.0);
    }
    std::nth_element(draws.begin(), draws.begin() + 50000, draws.end());
    CHECK(std::abs(draws[50000] / std::exp(-1.2) - 1.0) < 0.03);
}

TEST_CASE("EDM preconditioning matches the oracle")
{
    for (double sigma : {0.002, 0.05, 0.5, 1.0, 3.0, 80.0}) {
        for (double sd : {0.3, 1.0, 1.7}) {
            const auto p = edm_preconditioning(sigma, sd);
            const auto o = oracle::edm(sigma, sd);
            CHECK(p.c_skip == doctest::Approx(o.c_skip).epsilon(1e-14));
            CHECK(p.c_out == doctest::Approx(o.c_out).epsilon(1e-14));
            CHECK(p.c_in == doctest::Approx(o.c_in).epsilon(1e-14));
            CHECK(p.c_noise == doctest::Approx(o.c_noise).epsilon(1e-14));
        }
    }
    CHECK(edm_preconditioning(0.7, 0.7).c_skip == 0.5);
}

TEST_CASE("denoise: zero network output gives D -> tau_hat as sigma -> 0")
{
    Rng rng(2);
    DenoiserModel m;
    m.net = DenoiserNet(NetworkArch{5, 0, 4, 4, {8}}, rng);
    m.net.params().setZero();
    m.sigma_data = 1.0;
    Vector x(5);
    x << 0.1, -0.4, 2.0, 0.0, 1.0;
    CHECK((denoise(m, x, 1e-6) - x).norm() < 1e-10);
    CHECK_THROWS_AS(denoise(m, x, 0.0), InvalidArgument);
    x[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(denoise(m, x, 1.0), NumericError);
}

TEST_CASE("gaussian oracle denoiser matches the posterior mean")
{
    Matrix x = Matrix::Random(7, 3);
    Vector m(3);
    m << 0.5, -1.0, 2.0;
    for (double sigma : {0.01, 0.4, 9.0}) {
        const Matrix d = gaussian_oracle_denoise(x, sigma, m, 0.6);
        for (int i = 0; i < 7; ++i)
            for (int k = 0; k < 3; ++k)
                CHECK(std::abs(d(i, k) - oracle::gaussian_posterior_mean(x(i, k), sigma, m[k], 0.6)) < 1e-10);
    }
}

namespace {

SamplerHooks oracle_hooks(const Vector& mean, double sd)
{
    SamplerHooks h;
    h.denoise = [mean, sd](const Matrix& x, double sigma, Eigen::Index) { return gaussian_oracle_denoise(x, sigma, mean, sd); };
    return h;
}

} // namespace

TEST_CASE("Heun sampler with the analytic Gaussian denoiser reproduces the data law")
{
    Vector m(5);
    m << 0.5, -1.0, 0.0, 2.0, 0.25;
    const double sd = 0.7;
    const Matrix s = heun_sample(oracle_hooks(m, sd), 5, karras_sigmas({}), {}, 10000, 42);
    for (int k = 0; k < 5; ++k) {
        std::vector<double> col(s.col(k).data(), s.col(k).data() + s.rows());
        CHECK(std::abs(oracle::mean(col) - m[k]) < 0.05);
        CHECK(std::abs(oracle::stddev(col) - sd) < 0.05);
    }
}

TEST_CASE("Heun sampler with churn still matches the data law")
{
    Vector m = Vector::Constant(2, 0.3);
    Churn churn;
    churn.gamma.assign(40, 0.0);
    for (int i = 10; i < 30; ++i) churn.gamma[static_cast<std::size_t>(i)] = 0.2;
    const Matrix s = heun_sample(oracle_hooks(m, 1.0), 2, karras_sigmas({}), churn, 5000, 3);
    std::vector<double> col(s.col(0).data(), s.col(0).data() + s.rows());
    CHECK(std::abs(oracle::mean(col) - 0.3) < 0.06);
    CHECK(std::abs(oracle::stddev(col) - 1.0) < 0.06);
}

TEST_CASE("one-step schedule is a single Euler step from pure noise")
{
    NoiseSchedule one;
    one.steps = 1;
    const auto sig = karras_sigmas(one);
    Vector m = Vector::Constant(3, 1.5);
    // Euler to sigma = 0 lands exactly on the denoised estimate of the initial noise.
    const Matrix s = heun_sample(oracle_hooks(m, 0.5), 3, sig, {}, 4, 9);
    Rng stream(derive_seed(9, "sample", 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x0(1, 3);
    for (int k = 0; k < 3; ++k) x0(0, k) = 80.0 * normal(stream);
    const Matrix expect = gaussian_oracle_denoise(x0, 80.0, m, 0.5);
    CHECK((s.row(2) - expect).norm() < 1e-12);
}

TEST_CASE("sampler determinism and worker-count invariance")
{
    Vector m = Vector::Constant(5, -0.2);
    const auto h = oracle_hooks(m, 1.0);
    const auto sig = karras_sigmas({});
    const Matrix a = heun_sample(h, 5, sig, {}, 777, 5);
    const Matrix b = heun_sample(h, 5, sig, {}, 777, 5);
    SampleOptions opts;
    opts.workers = 3;
    const Matrix c = heun_sample(h, 5, sig, {}, 777, 5, opts);
    CHECK(a == b);
    CHECK(a == c);
    CHECK_FALSE(a == heun_sample(h, 5, sig, {}, 777, 6));
}

TEST_CASE("sampler guidance hook sees the noised state and its denoised estimate")
{
    Vector m = Vector::Zero(2);
    SamplerHooks h = oracle_hooks(m, 1.0);
    int calls = 0;
    h.guide = [&](Matrix& tau_hat, const Matrix& tau_bar, int n, int steps, Eigen::Index) {
        CHECK(steps == 40);
        CHECK(n == calls);
        CHECK(tau_hat.rows() == tau_bar.rows());
        ++calls;
    };
    SampleOptions opts;
    opts.chunk = 1000;
    heun_sample(h, 2, karras_sigmas({}), {}, 10, 1, opts);
    CHECK(calls == 40);
}

TEST_CASE("sampler errors")
{
    SamplerHooks none;
    CHECK_THROWS_AS(heun_sample(none, 2, karras_sigmas({}), {}, 4, 1), InvalidArgument);
    const auto h = oracle_hooks(Vector::Zero(2), 1.0);
    CHECK_THROWS_AS(heun_sample(h, 2, {1.0, 0.5}, {}, 4, 1), InvalidArgument);
    SamplerHooks blowup;
    blowup.denoise = [](const Matrix& x, double, Eigen::Index) {
        return Matrix::Constant(x.rows(), x.cols(), std::numeric_limits<double>::infinity());
    };
    CHECK_THROWS_AS(heun_sample(blowup, 2, karras_sigmas({}), {}, 4, 1), NumericError);
}

TEST_CASE("trajectory layout for a single-step two-agent game")
{
    const TrajectoryLayout l;
    CHECK(l.dim() == 5);
    CHECK(l.obs_index(0, 1) == 1);
    CHECK(l.action_index(0, 0) == 2);
    CHECK(l.action_index(0, 1) == 3);
    CHECK(l.reward_index(0) == 4);
    CHECK(l.action_indices() == std::vector<int>{2, 3});
    const auto d = make_dataset(GameSpec::multiplication(), {{0.5, -0.5}, {1.0, 1.0}});
    const Matrix t = to_trajectories(d);
    CHECK(t(0, 2) == 0.5);
    CHECK(t(0, 4) == -0.25);
    CHECK(t(1, 0) == 0.0);
    CHECK(actions_from_trajectories(t) == d.actions);
    CHECK_THROWS_AS(actions_from_trajectories(Matrix::Zero(2, 4)), ShapeError);
}

TEST_CASE("sigma_data ignores constant columns")
{
    Matrix z(4, 3);
    z << 0, 1, 5, 0, -1, 5, 0, 1, 5, 0, -1, 5;
    CHECK(estimate_sigma_data(z) == doctest::Approx(1.0));
    CHECK(estimate_sigma_data(Matrix::Constant(3, 2, 4.0)) == 1e-3);
}

TEST_CASE("training on a one-point dataset drives the loss below 1e-3")
{
    const auto d = make_dataset(GameSpec::multiplication(), std::vector<JointAction>(64, JointAction{0.3, -0.6}));
    const Matrix raw = to_trajectories(d);
    const Matrix z = CdfNormalizer::fit(raw).forward_rows(raw);
    Rng rng(4);
    DenoiserModel m = make_model(NetworkArch{5, 0, 8, 8, {32, 32}}, z, rng);
    CHECK(m.sigma_data == 1e-3);
    TrainConfig cfg;
    cfg.epochs = 1500;
    cfg.batch = 64;
    cfg.optimizer = Optimizer::Adam;
    cfg.lr = 1e-3;
    const auto curve = train(m, z, nullptr, {}, cfg, rng);
    double tail = 0.0;
    for (std::size_t k = curve.losses.size() - 50; k < curve.losses.size(); ++k) tail += curve.losses[k] / 50.0;
    CHECK(tail < 1e-3);
}

TEST_CASE("training loss decreases on the uniform multiplication dataset")
{
    const auto d = gen_dataset(GameSpec::multiplication(), 4000, 1);
    const auto norm = CdfNormalizer::fit(to_trajectories(d));
    const Matrix z = norm.forward_rows(to_trajectories(d));
    for (auto opt : {Optimizer::Adam, Optimizer::Sgd}) {
        Rng rng(6);
        DenoiserModel m = make_model(NetworkArch{}, z, rng);
        TrainConfig cfg;
        cfg.epochs = 400;
        cfg.batch = 256;
        cfg.optimizer = opt;
        if (opt == Optimizer::Sgd) cfg.lr = 1e-2;
        const auto curve = train(m, z, nullptr, {}, cfg, rng);
        auto avg = [&](std::size_t from) {
            double s = 0.0;
            for (std::size_t k = from; k < from + 50; ++k) s += curve.losses[k] / 50.0;
            return s;
        };
        CHECK(avg(curve.losses.size() - 50) < avg(0));
    }
}

TEST_CASE("cond_dropout = 1 yields a purely unconditional model")
{
    const auto d = gen_dataset(GameSpec::multiplication(), 500, 2);
    const Matrix raw = to_trajectories(d);
    const Matrix conds = Matrix::Random(raw.rows(), 2);
    Rng rng(7);
    DenoiserModel m = make_model(NetworkArch{5, 2, 8, 8, {16}}, raw, rng);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch = 64;
    cfg.cond_dropout = 1.0;
    train(m, raw, &conds, {}, cfg, rng);
    const Vector x = Vector::Random(5);
    Vector c1(2), c2(2);
    c1 << 0.9, -0.9;
    c2 << -0.3, 0.1;
    for (double sigma : {0.01, 0.5, 20.0}) CHECK(denoise(m, x, sigma, c1) == denoise(m, x, sigma, c2));

    cfg.cond_dropout = 0.0;
    train(m, raw, &conds, {}, cfg, rng);
    CHECK_FALSE(denoise(m, x, 0.5, c1) == denoise(m, x, 0.5, c2));
}

TEST_CASE("training validates its inputs and reports divergence")
{
    Rng rng(1);
    const Matrix raw = Matrix::Random(10, 5);
    DenoiserModel m = make_model(NetworkArch{5, 0, 4, 4, {8}}, raw, rng);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch = 4;
    CHECK_THROWS_AS(train(m, Matrix(0, 5), nullptr, {}, cfg, rng), InvalidArgument);
    CHECK_THROWS_AS(train(m, Matrix::Random(10, 4), nullptr, {}, cfg, rng), ShapeError);
    Matrix bad = raw;
    bad(3, 2) = std::numeric_limits<double>::quiet_NaN();
    cfg.epochs = 200;
    try {
        train(m, bad, nullptr, {}, cfg, rng);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("model save/load")
{
    Rng rng(3);
    DenoiserModel m = make_model(NetworkArch{5, 1, 4, 4, {8}}, Matrix::Random(20, 5), rng);
    std::stringstream ss;
    m.save(ss);
    const auto back = DenoiserModel::load(ss);
    CHECK(back.sigma_data == m.sigma_data);
    CHECK(back.net.params() == m.net.params());
}
