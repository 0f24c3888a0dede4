// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "doctest.h"

#include "coda/diffusion.hpp"
#include "coda/network.hpp"
#include "oracles.hpp"

using namespace coda;

namespace {

NetworkInput toy_input(Rng& rng, int batch, int dim, const Matrix* cond, const std::vector<char>* drop)
{
    std::normal_distribution<double> n(0.0, 1.0);
    NetworkInput in;
    in.x.resize(batch, dim);
    in.c_noise.resize(batch);
    for (Eigen::Index k = 0; k < in.x.size(); ++k) in.x.data()[k] = n(rng);
    for (int i = 0; i < batch; ++i) in.c_noise[i] = 0.5 * n(rng);
    in.cond = cond;
    in.drop = drop;
    return in;
}

// Central differences on every parameter, step 1e-4.
double max_relative_gradient_error(const DenoiserNet& net, const NetworkInput& in, const Matrix& target)
{
    Vector grad;
    net.loss_and_grad(in, target, grad);
    DenoiserNet probe = net;
    double worst = 0.0;
    Vector unused;
    for (Eigen::Index p = 0; p < net.num_params(); ++p) {
        const double h = 1e-4;
        const double orig = probe.params()[p];
        probe.params()[p] = orig + h;
        const double up = probe.loss_and_grad(in, target, unused);
        probe.params()[p] = orig - h;
        const double down = probe.loss_and_grad(in, target, unused);
        probe.params()[p] = orig;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(grad[p] - fd) / std::max({std::abs(grad[p]), std::abs(fd), 1e-6}));
    }
    return worst;
}

} // namespace

TEST_CASE("input width and parameter count")
{
    Rng rng(1);
    NetworkArch a{5, 2, 16, 32, {64, 64}};
    DenoiserNet net(a, rng);
    CHECK(a.input_width() == 5 + 16 + 32);
    const Eigen::Index expected = 32 * 2 + 32 + 32 + (53 * 64 + 64) + (64 * 64 + 64) + (64 * 5 + 5);
    CHECK(net.num_params() == expected);
    CHECK(net.params().allFinite());
    NetworkArch u{5, 0, 16, 32, {64, 64}};
    CHECK(u.input_width() == 21);
}

TEST_CASE("invalid architectures are rejected")
{
    Rng rng(1);
    CHECK_THROWS_AS(DenoiserNet(NetworkArch{0, 0, 16, 32, {8}}, rng), InvalidArgument);
    CHECK_THROWS_AS(DenoiserNet(NetworkArch{5, 0, 15, 32, {8}}, rng), InvalidArgument);
    CHECK_THROWS_AS(DenoiserNet(NetworkArch{5, 0, 16, 32, {0}}, rng), InvalidArgument);
}

TEST_CASE("gradient check on a toy 2-layer model, unconditional")
{
    Rng rng(7);
    DenoiserNet net(NetworkArch{3, 0, 4, 4, {6}}, rng);
    const auto in = toy_input(rng, 9, 3, nullptr, nullptr);
    const Matrix target = Matrix::Random(9, 3);
    CHECK(max_relative_gradient_error(net, in, target) < 1e-3);
}

TEST_CASE("gradient check on a toy 2-layer model with condition and dropout")
{
    Rng rng(8);
    DenoiserNet net(NetworkArch{3, 2, 4, 5, {6}}, rng);
    net.params() = 0.5 * Vector::Random(net.num_params());
    const Matrix cond = Matrix::Random(9, 2);
    const std::vector<char> drop{0, 1, 0, 0, 1, 0, 0, 0, 1};
    const auto in = toy_input(rng, 9, 3, &cond, &drop);
    const Matrix target = Matrix::Random(9, 3);
    CHECK(max_relative_gradient_error(net, in, target) < 1e-3);
}

TEST_CASE("gradient check through the EDM training loss")
{
    Rng rng(9);
    DenoiserModel model;
    model.net = DenoiserNet(NetworkArch{5, 1, 4, 3, {7}}, rng);
    model.sigma_data = 0.8;
    const Matrix clean = Matrix::Random(6, 5);
    const Matrix noise = Matrix::Random(6, 5);
    Vector sigmas(6);
    sigmas << 0.01, 0.1, 0.3, 1.0, 5.0, 40.0;
    const Matrix conds = Matrix::Random(6, 1);
    const std::vector<char> drop{0, 0, 1, 0, 1, 0};
    Vector grad;
    denoising_loss(model, clean, sigmas, noise, &conds, &drop, &grad);
    DenoiserModel probe = model;
    for (Eigen::Index p = 0; p < model.net.num_params(); ++p) {
        const double orig = probe.net.params()[p];
        probe.net.params()[p] = orig + 1e-4;
        const double up = denoising_loss(probe, clean, sigmas, noise, &conds, &drop, nullptr);
        probe.net.params()[p] = orig - 1e-4;
        const double down = denoising_loss(probe, clean, sigmas, noise, &conds, &drop, nullptr);
        probe.net.params()[p] = orig;
        const double fd = (up - down) / 2e-4;
        CHECK(std::abs(grad[p] - fd) <= 1e-3 * std::max({std::abs(grad[p]), std::abs(fd), 1e-6}));
    }
}

TEST_CASE("dropped rows ignore the condition")
{
    Rng rng(3);
    DenoiserNet net(NetworkArch{5, 2, 16, 32, {16}}, rng);
    net.params() = Vector::Random(net.num_params());
    Matrix c1 = Matrix::Random(4, 2), c2 = Matrix::Random(4, 2);
    const std::vector<char> all(4, 1);
    auto in1 = toy_input(rng, 4, 5, &c1, &all);
    auto in2 = in1;
    in2.cond = &c2;
    CHECK(net.forward(in1) == net.forward(in2));
    in1.drop = nullptr;
    in2.drop = nullptr;
    CHECK_FALSE(net.forward(in1) == net.forward(in2));
}

TEST_CASE("shape errors")
{
    Rng rng(3);
    DenoiserNet net(NetworkArch{5, 2, 16, 32, {16}}, rng);
    auto in = toy_input(rng, 4, 4, nullptr, nullptr);
    CHECK_THROWS_AS(net.forward(in), ShapeError);
    Matrix bad_cond = Matrix::Zero(3, 2);
    in = toy_input(rng, 4, 5, &bad_cond, nullptr);
    CHECK_THROWS_AS(net.forward(in), ShapeError);
}

TEST_CASE("save/load reproduces outputs bit for bit")
{
    Rng rng(5);
    DenoiserNet net(NetworkArch{5, 1, 8, 4, {12, 10}}, rng);
    std::stringstream ss;
    net.save(ss);
    const DenoiserNet back = DenoiserNet::load(ss);
    CHECK(back.arch() == net.arch());
    CHECK(back.params() == net.params());
    std::stringstream bad("denoiser-net 2\n");
    CHECK_THROWS_AS(DenoiserNet::load(bad), InvalidArgument);
}

TEST_CASE("noise features are bounded sinusoids")
{
    Vector c(3);
    c << -1.0, 0.0, 2.0;
    const Matrix f = noise_features(c, 16);
    CHECK(f.rows() == 3);
    CHECK(f.cols() == 16);
    CHECK(f.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(f(1, 0) == 0.0);  // sin(0)
    CHECK(f(1, 8) == 1.0);  // cos(0)
}
