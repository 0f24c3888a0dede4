// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>
#include <exception>
#include <thread>

namespace coda {

std::vector<int> TrajectoryLayout::action_indices() const
{
    std::vector<int> idx;
    for (int t = 0; t < horizon; ++t)
        for (int i = 0; i < agents; ++i)
            for (int k = 0; k < act_dim; ++k) idx.push_back(action_index(t, i, k));
    return idx;
}

Matrix to_trajectories(const OfflineDataset& data, const TrajectoryLayout& layout)
{
    if (layout.horizon != 1 || layout.agents != 2 || layout.act_dim != 1) {
        throw ShapeError("to_trajectories: polynomial games use H = 1, two agents, scalar actions");
    }
    Matrix raw = Matrix::Zero(static_cast<Eigen::Index>(data.size()), layout.dim());
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        raw(row, layout.action_index(0, 0)) = data.actions[r].ax;
        raw(row, layout.action_index(0, 1)) = data.actions[r].ay;
        raw(row, layout.reward_index(0)) = data.rewards[r];
    }
    return raw;
}

std::vector<JointAction> actions_from_trajectories(const Matrix& raw, const TrajectoryLayout& layout)
{
    if (raw.cols() != layout.dim()) throw ShapeError("actions_from_trajectories: width mismatch");
    std::vector<JointAction> out;
    out.reserve(static_cast<std::size_t>(raw.rows()));
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        out.push_back({raw(r, layout.action_index(0, 0)), raw(r, layout.action_index(0, 1))});
    }
    return out;
}

void NoiseSchedule::validate() const
{
    if (!(sigma_min > 0.0 && sigma_min < sigma_max)) throw InvalidArgument("NoiseSchedule: 0 < sigma_min < sigma_max");
    if (!(rho > 0.0)) throw InvalidArgument("NoiseSchedule: rho > 0");
    if (steps < 1) throw InvalidArgument("NoiseSchedule: steps >= 1");
}

std::vector<double> karras_sigmas(const NoiseSchedule& s)
{
    s.validate();
    std::vector<double> sig;
    sig.reserve(static_cast<std::size_t>(s.steps) + 1);
    if (s.steps == 1) {
        sig.push_back(s.sigma_max);
    } else {
        const double hi = std::pow(s.sigma_max, 1.0 / s.rho);
        const double lo = std::pow(s.sigma_min, 1.0 / s.rho);
        for (int i = 0; i < s.steps; ++i) {
            const double t = static_cast<double>(i) / (s.steps - 1);
            sig.push_back(std::pow(hi + t * (lo - hi), s.rho));
        }
        // Pin the endpoints against pow round-off.
        sig.front() = s.sigma_max;
        sig.back() = s.sigma_min;
    }
    sig.push_back(0.0);
    return sig;
}

double train_sigma_from_normal(const TrainNoiseLaw& law, double g)
{
    return std::clamp(std::exp(law.mu_log + law.sigma_log * g), law.clamp_min, law.clamp_max);
}

double sample_train_sigma(const TrainNoiseLaw& law, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    return train_sigma_from_normal(law, normal(rng));
}

Preconditioning edm_preconditioning(double sigma, double sigma_data)
{
    const double s2 = sigma * sigma;
    const double d2 = sigma_data * sigma_data;
    return {d2 / (s2 + d2), sigma * sigma_data / std::sqrt(s2 + d2), 1.0 / std::sqrt(s2 + d2), std::log(sigma) / 4.0};
}

void DenoiserModel::save(std::ostream& os) const
{
    os << "denoiser-model 1\n" << std::setprecision(17) << sigma_data << '\n';
    net.save(os);
}

DenoiserModel DenoiserModel::load(std::istream& is)
{
    std::string magic;
    int version = 0;
    DenoiserModel m;
    if (!(is >> magic >> version >> m.sigma_data) || magic != "denoiser-model" || version != 1) {
        throw InvalidArgument("checkpoint: bad model header");
    }
    m.net = DenoiserNet::load(is);
    return m;
}

double estimate_sigma_data(const Matrix& data)
{
    constexpr double floor = 1e-3;
    double total = 0.0;
    int used = 0;
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const double mean = data.col(j).mean();
        const double var = (data.col(j).array() - mean).square().mean();
        if (var > 1e-12) {
            total += var;
            ++used;
        }
    }
    return used > 0 ? std::max(std::sqrt(total / used), floor) : floor;
}

DenoiserModel make_model(const NetworkArch& arch, const Matrix& diffusion_data, Rng& rng)
{
    if (diffusion_data.cols() != arch.data_dim) throw ShapeError("make_model: data width mismatch");
    DenoiserModel m;
    m.net = DenoiserNet(arch, rng);
    m.sigma_data = estimate_sigma_data(diffusion_data);
    return m;
}

Matrix denoise_batch(const DenoiserModel& model, const Matrix& tau_hat, double sigma, const Matrix* cond)
{
    if (!(sigma > 0.0)) throw InvalidArgument("denoise: sigma must be > 0");
    if (!tau_hat.allFinite() || !std::isfinite(sigma)) throw NumericError("denoise: non-finite input");
    const auto pc = edm_preconditioning(sigma, model.sigma_data);
    NetworkInput in;
    in.x = pc.c_in * tau_hat;
    in.c_noise = Vector::Constant(tau_hat.rows(), pc.c_noise);
    in.cond = model.cond_dim() > 0 ? cond : nullptr;
    const Matrix f = model.net.forward(in);
    return pc.c_skip * tau_hat + pc.c_out * f;
}

Vector denoise(const DenoiserModel& model, const Vector& tau_hat, double sigma, const std::optional<Vector>& cond)
{
    const Matrix x = tau_hat.transpose();
    if (cond) {
        const Matrix c = cond->transpose();
        return denoise_batch(model, x, sigma, &c).row(0).transpose();
    }
    return denoise_batch(model, x, sigma, nullptr).row(0).transpose();
}

Matrix gaussian_oracle_denoise(const Matrix& tau_hat, double sigma, const Vector& mean, double sigma_data)
{
    const double s2 = sigma * sigma;
    const double d2 = sigma_data * sigma_data;
    Matrix out = (d2 * tau_hat) / (d2 + s2);
    out.rowwise() += (s2 / (d2 + s2)) * mean.transpose();
    return out;
}

double denoising_loss(const DenoiserModel& model, const Matrix& clean, const Vector& sigmas, const Matrix& noise,
                      const Matrix* conds, const std::vector<char>* drop, Vector* grad)
{
    const Eigen::Index batch = clean.rows();
    NetworkInput in;
    in.x.resize(batch, clean.cols());
    in.c_noise.resize(batch);
    in.cond = model.cond_dim() > 0 ? conds : nullptr;
    in.drop = drop;
    Matrix target(batch, clean.cols());
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto pc = edm_preconditioning(sigmas[i], model.sigma_data);
        const auto noised = clean.row(i) + sigmas[i] * noise.row(i);
        in.x.row(i) = pc.c_in * noised;
        in.c_noise[i] = pc.c_noise;
        // Unit-weight loss on F is the EDM-weighted loss on D.
        target.row(i) = (clean.row(i) - pc.c_skip * noised) / pc.c_out;
    }
    if (grad) return model.net.loss_and_grad(in, target, *grad);
    return (model.net.forward(in) - target).squaredNorm() / static_cast<double>(target.size());
}

LossCurve train(DenoiserModel& model, const Matrix& data, const Matrix* conds, const TrainNoiseLaw& law,
                const TrainConfig& cfg, Rng& rng)
{
    if (data.rows() == 0) throw InvalidArgument("train: empty dataset");
    if (data.cols() != model.data_dim()) throw ShapeError("train: data width mismatch");
    if (conds && conds->rows() != data.rows()) throw ShapeError("train: condition rows must align with data");
    if (conds && model.cond_dim() > 0 && conds->cols() != model.cond_dim()) throw ShapeError("train: condition width");
    if (cfg.batch < 1 || cfg.epochs < 0 || !(cfg.lr > 0.0)) throw InvalidArgument("train: invalid configuration");

    const bool conditional = conds != nullptr && model.cond_dim() > 0;
    std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution dropout(std::clamp(cfg.cond_dropout, 0.0, 1.0));

    Matrix clean(cfg.batch, data.cols());
    Matrix noise(cfg.batch, data.cols());
    Matrix cond_batch(conditional ? cfg.batch : 0, conditional ? conds->cols() : 0);
    Vector sigmas(cfg.batch);
    std::vector<char> drop(static_cast<std::size_t>(cfg.batch), 0);
    Vector grad;
    Vector m1 = Vector::Zero(model.net.num_params());
    Vector m2 = Vector::Zero(model.net.num_params());

    LossCurve curve;
    curve.losses.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int step = 0; step < cfg.epochs; ++step) {
        for (int i = 0; i < cfg.batch; ++i) {
            const Eigen::Index r = pick(rng);
            clean.row(i) = data.row(r);
            if (conditional) cond_batch.row(i) = conds->row(r);
        }
        for (int i = 0; i < cfg.batch; ++i) sigmas[i] = sample_train_sigma(law, rng);
        for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = normal(rng);
        if (conditional)
            for (auto& d : drop) d = dropout(rng) ? 1 : 0;

        const double loss = denoising_loss(model, clean, sigmas, noise, conditional ? &cond_batch : nullptr,
                                           conditional ? &drop : nullptr, &grad);
        if (!std::isfinite(loss) || !grad.allFinite()) {
            throw NumericError("diffusion training diverged at step " + std::to_string(step));
        }
        curve.losses.push_back(loss);

        const double norm = grad.norm();
        if (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) grad *= cfg.grad_clip / norm;
        if (cfg.optimizer == Optimizer::Sgd) {
            model.net.params() -= cfg.lr * grad;
        } else {
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            m1 = b1 * m1 + (1.0 - b1) * grad;
            m2 = b2 * m2 + (1.0 - b2) * grad.cwiseAbs2();
            const double c1 = 1.0 - std::pow(b1, step + 1);
            const double c2 = 1.0 - std::pow(b2, step + 1);
            model.net.params().array() -= cfg.lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
        }
    }
    return curve;
}

namespace {

void sample_chunk(const SamplerHooks& hooks, Matrix& x, const std::vector<double>& sigmas, const Churn& churn,
                  std::vector<Rng>& streams, Eigen::Index row0)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index rows = x.rows();
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = sigmas[0] * normal(streams[static_cast<std::size_t>(i)]);

    const int steps = static_cast<int>(sigmas.size()) - 1;
    for (int n = 0; n < steps; ++n) {
        const double sigma = sigmas[static_cast<std::size_t>(n)];
        const double gamma = static_cast<std::size_t>(n) < churn.gamma.size() ? churn.gamma[static_cast<std::size_t>(n)] : 0.0;
        const double sigma_hat = sigma + gamma * sigma;
        if (sigma_hat > sigma) {
            const double scale = std::sqrt(sigma_hat * sigma_hat - sigma * sigma) * churn.s_noise;
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) += scale * normal(streams[static_cast<std::size_t>(i)]);
        }
        const Matrix denoised = hooks.denoise(x, sigma_hat, row0);
        const Matrix d = (x - denoised) / sigma_hat;
        if (hooks.guide) hooks.guide(x, denoised, n, steps, row0);

        const double sigma_next = sigmas[static_cast<std::size_t>(n) + 1];
        Matrix next = x + (sigma_next - sigma_hat) * d;
        if (sigma_next != 0.0) {
            const Matrix d_prime = (next - hooks.denoise(next, sigma_next, row0)) / sigma_next;
            next = x + (sigma_next - sigma_hat) * (0.5 * d + 0.5 * d_prime);
        }
        x = std::move(next);
        if (!x.allFinite()) throw NumericError("sampler produced non-finite state at step " + std::to_string(n));
    }
}

} // namespace

Matrix heun_sample(const SamplerHooks& hooks, int dim, const std::vector<double>& sigmas, const Churn& churn,
                   std::size_t n, std::uint64_t seed, const SampleOptions& opts)
{
    if (!hooks.denoise) throw InvalidArgument("heun_sample: missing denoiser");
    if (sigmas.size() < 2 || sigmas.back() != 0.0) throw InvalidArgument("heun_sample: sigma sequence must end in 0");
    if (opts.chunk < 1) throw InvalidArgument("heun_sample: chunk must be >= 1");
    Matrix out(static_cast<Eigen::Index>(n), dim);
    const Eigen::Index total = out.rows();
    const Eigen::Index chunks = (total + opts.chunk - 1) / opts.chunk;

    auto run_chunk = [&](Eigen::Index c) {
        const Eigen::Index row0 = c * opts.chunk;
        const Eigen::Index rows = std::min(opts.chunk, total - row0);
        std::vector<Rng> streams;
        streams.reserve(static_cast<std::size_t>(rows));
        for (Eigen::Index i = 0; i < rows; ++i) {
            streams.emplace_back(derive_seed(seed, "sample", static_cast<std::uint64_t>(row0 + i)));
        }
        Matrix x(rows, dim);
        sample_chunk(hooks, x, sigmas, churn, streams, row0);
        out.middleRows(row0, rows) = x;
    };

    const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(chunks)));
    if (workers == 1) {
        for (Eigen::Index c = 0; c < chunks; ++c) run_chunk(c);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (Eigen::Index c = w; c < chunks; c += workers) run_chunk(c);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace coda
