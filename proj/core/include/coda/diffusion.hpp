// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "coda/common.hpp"
#include "coda/games.hpp"
#include "coda/network.hpp"

namespace coda {

// ---------------------------------------------------------------------------
// Trajectory layout
// ---------------------------------------------------------------------------

/// Flattened joint trajectory: for each timestep, every agent's observation,
/// then every agent's action, then the shared reward.
struct TrajectoryLayout {
    int horizon = 1;
    int agents = 2;
    int obs_dim = 1;
    int act_dim = 1;

    int step_width() const { return agents * obs_dim + agents * act_dim + 1; }
    int dim() const { return horizon * step_width(); }
    int obs_index(int t, int agent, int k = 0) const { return t * step_width() + agent * obs_dim + k; }
    int action_index(int t, int agent, int k = 0) const
    {
        return t * step_width() + agents * obs_dim + agent * act_dim + k;
    }
    int reward_index(int t) const { return t * step_width() + agents * (obs_dim + act_dim); }
    std::vector<int> action_indices() const;
};

/// Raw (un-normalized) trajectories for a single-step game dataset: one row
/// per record, dummy observations fixed at 0.
Matrix to_trajectories(const OfflineDataset& data, const TrajectoryLayout& layout = {});
/// Actions of timestep 0 from raw trajectories (two agents, one action each).
std::vector<JointAction> actions_from_trajectories(const Matrix& raw, const TrajectoryLayout& layout = {});

// ---------------------------------------------------------------------------
// Noise schedules
// ---------------------------------------------------------------------------

struct NoiseSchedule {
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    int steps = 40;

    void validate() const;
};

/// Karras sigmas sigma_0 > ... > sigma_{steps-1} with a terminal 0 appended.
std::vector<double> karras_sigmas(const NoiseSchedule& s);

struct TrainNoiseLaw {
    double mu_log = -1.2;
    double sigma_log = 1.2;
    double clamp_min = 0.002;
    double clamp_max = 80.0;
};

/// clamp(exp(mu_log + sigma_log * g)) for a given standard-normal draw g.
double train_sigma_from_normal(const TrainNoiseLaw& law, double g);
double sample_train_sigma(const TrainNoiseLaw& law, Rng& rng);

// ---------------------------------------------------------------------------
// EDM-preconditioned denoiser
// ---------------------------------------------------------------------------

struct Preconditioning {
    double c_skip;
    double c_out;
    double c_in;
    double c_noise;
};

Preconditioning edm_preconditioning(double sigma, double sigma_data);

struct DenoiserModel {
    DenoiserNet net;
    double sigma_data = 1.0;

    int data_dim() const { return net.arch().data_dim; }
    int cond_dim() const { return net.arch().cond_dim; }

    void save(std::ostream& os) const;
    static DenoiserModel load(std::istream& is);
};

/// Root-mean-square spread of the non-constant columns of diffusion-space data,
/// floored at 1e-3 (the value used when every column is constant).
double estimate_sigma_data(const Matrix& data);

DenoiserModel make_model(const NetworkArch& arch, const Matrix& diffusion_data, Rng& rng);

/// D(tau_hat; sigma, cond) for a batch. `cond` null means "unconditional"
/// (null embedding for models with a condition pathway).
Matrix denoise_batch(const DenoiserModel& model, const Matrix& tau_hat, double sigma, const Matrix* cond = nullptr);
Vector denoise(const DenoiserModel& model, const Vector& tau_hat, double sigma,
               const std::optional<Vector>& cond = std::nullopt);

/// Exact denoiser for data distributed N(mean, sigma_data^2 I).
Matrix gaussian_oracle_denoise(const Matrix& tau_hat, double sigma, const Vector& mean, double sigma_data);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    int epochs = 10000;      // optimiser steps, one mini-batch each
    int batch = 1000;
    double lr = 1e-3;
    double cond_dropout = 0.1;
    double grad_clip = 10.0;
    Optimizer optimizer = Optimizer::Adam;
};

struct LossCurve {
    std::vector<double> losses;
};

/// Minimises the EDM-weighted denoising loss. `conds` (rows aligned with
/// `data`) may be null for unconditional training. Throws NumericError with
/// the step index if the loss diverges.
LossCurve train(DenoiserModel& model, const Matrix& data, const Matrix* conds, const TrainNoiseLaw& law,
                const TrainConfig& cfg, Rng& rng);

/// Loss and gradient on an explicit mini-batch; exposed for gradient checks.
double denoising_loss(const DenoiserModel& model, const Matrix& clean, const Vector& sigmas, const Matrix& noise,
                      const Matrix* conds, const std::vector<char>* drop, Vector* grad);

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

struct Churn {
    std::vector<double> gamma; // per step; empty means 0 everywhere
    double s_noise = 1.0;
};

/// Callbacks that specialise the sampler. `denoise` receives a chunk of rows
/// starting at absolute sample index `row0`. `guide`, when set, may edit the
/// noised chunk given its denoised estimate at step `n` of `steps`.
struct SamplerHooks {
    std::function<Matrix(const Matrix& tau_hat, double sigma, Eigen::Index row0)> denoise;
    std::function<void(Matrix& tau_hat, const Matrix& tau_bar, int n, int steps, Eigen::Index row0)> guide;
};

struct SampleOptions {
    Eigen::Index chunk = 250;
    int workers = 1;
};

/// Stochastic-Heun sampler over a given sigma sequence (terminal 0 included).
/// Sample j draws all of its noise from its own stream seeded by (seed, j),
/// and rows are processed in fixed-size chunks, so the output is independent
/// of the worker count. Throws NumericError naming the step on divergence.
Matrix heun_sample(const SamplerHooks& hooks, int dim, const std::vector<double>& sigmas, const Churn& churn,
                   std::size_t n, std::uint64_t seed, const SampleOptions& opts = {});

} // namespace coda
