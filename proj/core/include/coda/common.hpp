// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace coda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for inputs outside the mathematical domain of an operation
/// (e.g. an action outside the game's action box).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a computation produces or receives non-finite values.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on dimension mismatches between operands.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Derives an independent 64-bit seed for a named sub-stream.
///
/// Every random consumer in a run (dataset, diffusion training, per-epoch
/// sampling, learner mini-batches) draws from its own stream so that adding
/// or removing one consumer never shifts another's sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0)
{
    return Rng(derive_seed(seed, tag, index));
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace coda
