// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/network.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

namespace coda {

namespace {

using MatMap = Eigen::Map<Matrix>;
using ConstMatMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;

Matrix logistic(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

} // namespace

Matrix noise_features(const Vector& c_noise, int count)
{
    const int pairs = count / 2;
    Matrix f(c_noise.size(), 2 * pairs);
    for (int k = 0; k < pairs; ++k) {
        // Frequencies spaced geometrically over [1, 16].
        const double freq = pairs > 1 ? std::exp(std::log(16.0) * k / (pairs - 1)) : 1.0;
        for (Eigen::Index i = 0; i < c_noise.size(); ++i) {
            f(i, k) = std::sin(freq * c_noise[i]);
            f(i, pairs + k) = std::cos(freq * c_noise[i]);
        }
    }
    return f;
}

struct DenoiserNet::Cache {
    std::vector<Matrix> pre;   // pre-activations per layer
    std::vector<Matrix> gate;  // logistic(pre) per hidden layer
    std::vector<Matrix> acts;  // inputs to each layer (acts[0] = assembled input)
};

DenoiserNet::DenoiserNet(const NetworkArch& arch, Rng& rng) : arch_(arch)
{
    if (arch_.data_dim <= 0 || arch_.cond_dim < 0 || arch_.noise_features < 0 || arch_.noise_features % 2 != 0) {
        throw InvalidArgument("NetworkArch: invalid dimensions");
    }
    for (int h : arch_.hidden)
        if (h <= 0) throw InvalidArgument("NetworkArch: hidden widths must be positive");
    build_layout();

    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& layer : layers_) {
        std::uniform_real_distribution<double> uni(-1.0 / std::sqrt(layer.in), 1.0 / std::sqrt(layer.in));
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(layer.in) * layer.out; ++k)
            params_[layer.w_offset + k] = uni(rng);
        for (int k = 0; k < layer.out; ++k) params_[layer.b_offset + k] = uni(rng);
    }
    if (arch_.cond_dim > 0) {
        // The projection starts at zero, so a condition only influences the
        // output once it has received gradient.
        std::uniform_real_distribution<double> uni(-1.0 / std::sqrt(arch_.cond_dim), 1.0 / std::sqrt(arch_.cond_dim));
        for (int k = 0; k < arch_.cond_embed; ++k) {
            params_[bc_offset_ + k] = uni(rng);
            params_[null_offset_ + k] = 0.1 * normal(rng);
        }
    }
}

void DenoiserNet::build_layout()
{
    Eigen::Index offset = 0;
    if (arch_.cond_dim > 0) {
        wc_offset_ = offset;
        offset += static_cast<Eigen::Index>(arch_.cond_embed) * arch_.cond_dim;
        bc_offset_ = offset;
        offset += arch_.cond_embed;
        null_offset_ = offset;
        offset += arch_.cond_embed;
    }
    layers_.clear();
    int in = arch_.input_width();
    std::vector<int> widths = arch_.hidden;
    widths.push_back(arch_.data_dim);
    for (int out : widths) {
        Layer l;
        l.in = in;
        l.out = out;
        l.w_offset = offset;
        offset += static_cast<Eigen::Index>(in) * out;
        l.b_offset = offset;
        offset += out;
        layers_.push_back(l);
        in = out;
    }
    params_ = Vector::Zero(offset);
}

Matrix DenoiserNet::assemble_input(const NetworkInput& in, Matrix* embed_out) const
{
    const Eigen::Index batch = in.x.rows();
    if (in.x.cols() != arch_.data_dim) throw ShapeError("DenoiserNet: input width mismatch");
    if (in.c_noise.size() != batch) throw ShapeError("DenoiserNet: c_noise length mismatch");
    Matrix a(batch, arch_.input_width());
    a.leftCols(arch_.data_dim) = in.x;
    if (arch_.noise_features > 0) a.middleCols(arch_.data_dim, arch_.noise_features) = noise_features(in.c_noise, arch_.noise_features);

    if (arch_.cond_dim > 0) {
        const ConstMatMap wc(params_.data() + wc_offset_, arch_.cond_embed, arch_.cond_dim);
        const ConstVecMap bc(params_.data() + bc_offset_, arch_.cond_embed);
        const ConstVecMap null(params_.data() + null_offset_, arch_.cond_embed);
        if (in.cond && (in.cond->rows() != batch || in.cond->cols() != arch_.cond_dim)) {
            throw ShapeError("DenoiserNet: condition shape mismatch");
        }
        if (in.drop && static_cast<Eigen::Index>(in.drop->size()) != batch) {
            throw ShapeError("DenoiserNet: drop mask length mismatch");
        }
        Matrix embed(batch, arch_.cond_embed);
        for (Eigen::Index i = 0; i < batch; ++i) {
            const bool dropped = !in.cond || (in.drop && (*in.drop)[static_cast<std::size_t>(i)]);
            if (dropped) {
                embed.row(i) = null.transpose();
            } else {
                embed.row(i) = (wc * in.cond->row(i).transpose() + bc).transpose();
            }
        }
        a.rightCols(arch_.cond_embed) = embed;
        if (embed_out) *embed_out = std::move(embed);
    }
    return a;
}

Matrix DenoiserNet::run(const NetworkInput& in, Cache* cache) const
{
    Matrix act = assemble_input(in, nullptr);
    if (cache) {
        cache->acts.clear();
        cache->pre.clear();
        cache->gate.clear();
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        const ConstMatMap w(params_.data() + layer.w_offset, layer.out, layer.in);
        const ConstVecMap b(params_.data() + layer.b_offset, layer.out);
        Matrix pre = act * w.transpose();
        pre.rowwise() += b.transpose();
        if (cache) cache->acts.push_back(act);
        if (l + 1 == layers_.size()) {
            if (cache) cache->pre.push_back(pre);
            return pre;
        }
        Matrix gate = logistic(pre);
        act = pre.cwiseProduct(gate);
        if (cache) {
            cache->pre.push_back(std::move(pre));
            cache->gate.push_back(std::move(gate));
        }
    }
    return act;
}

Matrix DenoiserNet::forward(const NetworkInput& in) const { return run(in, nullptr); }

double DenoiserNet::loss_and_grad(const NetworkInput& in, const Matrix& target, Vector& grad) const
{
    Cache cache;
    const Matrix out = run(in, &cache);
    if (target.rows() != out.rows() || target.cols() != out.cols()) throw ShapeError("loss_and_grad: target shape");
    const double scale = 1.0 / static_cast<double>(out.size());
    const Matrix diff = out - target;
    const double loss = scale * diff.squaredNorm();

    grad = Vector::Zero(params_.size());
    Matrix delta = 2.0 * scale * diff;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        const ConstMatMap w(params_.data() + layer.w_offset, layer.out, layer.in);
        MatMap gw(grad.data() + layer.w_offset, layer.out, layer.in);
        gw.noalias() = delta.transpose() * cache.acts[l];
        grad.segment(layer.b_offset, layer.out) = delta.colwise().sum().transpose();
        Matrix back = delta * w;
        if (l > 0) {
            const auto s = cache.gate[l - 1].array();
            const auto z = cache.pre[l - 1].array();
            delta = (back.array() * (s + z * s * (1.0 - s))).matrix();
        } else if (arch_.cond_dim > 0) {
            const Matrix d_embed = back.rightCols(arch_.cond_embed);
            MatMap gwc(grad.data() + wc_offset_, arch_.cond_embed, arch_.cond_dim);
            for (Eigen::Index i = 0; i < d_embed.rows(); ++i) {
                const bool dropped = !in.cond || (in.drop && (*in.drop)[static_cast<std::size_t>(i)]);
                if (dropped) {
                    grad.segment(null_offset_, arch_.cond_embed) += d_embed.row(i).transpose();
                } else {
                    gwc.noalias() += d_embed.row(i).transpose() * in.cond->row(i);
                    grad.segment(bc_offset_, arch_.cond_embed) += d_embed.row(i).transpose();
                }
            }
        }
    }
    return loss;
}

void DenoiserNet::save(std::ostream& os) const
{
    os << "denoiser-net 1\n";
    os << arch_.data_dim << ' ' << arch_.cond_dim << ' ' << arch_.noise_features << ' ' << arch_.cond_embed << ' '
       << arch_.hidden.size();
    for (int h : arch_.hidden) os << ' ' << h;
    os << '\n' << params_.size() << '\n' << std::setprecision(17);
    for (Eigen::Index k = 0; k < params_.size(); ++k) os << params_[k] << (k + 1 == params_.size() ? '\n' : ' ');
}

DenoiserNet DenoiserNet::load(std::istream& is)
{
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "denoiser-net" || version != 1) {
        throw InvalidArgument("checkpoint: bad network header");
    }
    DenoiserNet net;
    std::size_t layers = 0;
    if (!(is >> net.arch_.data_dim >> net.arch_.cond_dim >> net.arch_.noise_features >> net.arch_.cond_embed >> layers)) {
        throw InvalidArgument("checkpoint: truncated architecture");
    }
    net.arch_.hidden.resize(layers);
    for (auto& h : net.arch_.hidden)
        if (!(is >> h)) throw InvalidArgument("checkpoint: truncated architecture");
    net.build_layout();
    Eigen::Index count = 0;
    if (!(is >> count) || count != net.params_.size()) throw InvalidArgument("checkpoint: parameter count mismatch");
    for (Eigen::Index k = 0; k < count; ++k)
        if (!(is >> net.params_[k])) throw InvalidArgument("checkpoint: truncated parameters");
    return net;
}

} // namespace coda
