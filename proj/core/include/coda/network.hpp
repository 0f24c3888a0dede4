// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <vector>

#include "coda/common.hpp"

namespace coda {

struct NetworkArch {
    int data_dim = 5;
    int cond_dim = 0;        // 0: no condition pathway at all
    int noise_features = 16; // sin/cos pairs over c_noise
    int cond_embed = 32;
    std::vector<int> hidden = {64, 64};

    int input_width() const { return data_dim + noise_features + (cond_dim > 0 ? cond_embed : 0); }
    friend bool operator==(const NetworkArch&, const NetworkArch&) = default;
};

/// Per-batch inputs to the raw network F. Rows are samples.
struct NetworkInput {
    Matrix x;              // B x data_dim, already scaled by c_in
    Vector c_noise;        // B
    const Matrix* cond = nullptr;           // B x cond_dim, may be null
    const std::vector<char>* drop = nullptr; // B flags: 1 = use null embedding
};

/// Feed-forward network F(c_in x, c_noise, embed(cond)) with SiLU hidden
/// layers. A linear condition embedding (or a learned null vector when the
/// condition is dropped) and sinusoidal noise features are concatenated with
/// the scaled input.
///
/// All parameters live in one flat vector; tensor views are carved out of it
/// so optimisers and finite-difference checks treat the model as a point in
/// R^P.
class DenoiserNet {
public:
    DenoiserNet() = default;
    DenoiserNet(const NetworkArch& arch, Rng& rng);

    const NetworkArch& arch() const { return arch_; }
    const Vector& params() const { return params_; }
    Vector& params() { return params_; }
    Eigen::Index num_params() const { return params_.size(); }

    Matrix forward(const NetworkInput& in) const;

    /// Mean squared error (1 / (B * data_dim)) * ||F - target||^2 and its
    /// gradient with respect to params().
    double loss_and_grad(const NetworkInput& in, const Matrix& target, Vector& grad) const;

    void save(std::ostream& os) const;
    static DenoiserNet load(std::istream& is);

private:
    struct Layer {
        Eigen::Index w_offset = 0;
        Eigen::Index b_offset = 0;
        int in = 0;
        int out = 0;
    };
    struct Cache;

    void build_layout();
    Matrix assemble_input(const NetworkInput& in, Matrix* embed_out) const;
    Matrix run(const NetworkInput& in, Cache* cache) const;

    NetworkArch arch_;
    Vector params_;
    std::vector<Layer> layers_;
    Eigen::Index wc_offset_ = 0;
    Eigen::Index bc_offset_ = 0;
    Eigen::Index null_offset_ = 0;
};

/// Sinusoidal features [sin(f_k c), cos(f_k c)] for k < count / 2.
Matrix noise_features(const Vector& c_noise, int count);

} // namespace coda
