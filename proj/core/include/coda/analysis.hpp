// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "coda/common.hpp"
#include "coda/diffusion.hpp"
#include "coda/games.hpp"
#include "coda/marl.hpp"

namespace coda {

/// Stationary point of the full-batch BRUD update for one Twin Peaks agent:
/// C * mean / (2A + 2B (mean^2 + var)), where mean and var are the
/// teammate's dataset moments.
double twin_peaks_fixed_point(double a, double b, double c, double mean_other, double var_other);

struct FixedPointReport {
    JointAction predicted;
    JointAction empirical;
    JointAction gap; // component-wise |predicted - empirical|
};

/// Predicted fixed point from the dataset moments versus full-batch BRUD run
/// for `steps` updates from the configured initialisation.
FixedPointReport twin_peaks_fixed_point_report(const OfflineDataset& data, const LearnerConfig& cfg);

struct ConstantFieldReport {
    std::pair<double, double> expected; // (mean a^y, mean a^x)
    double max_deviation = 0.0;
    int points = 0;
};

/// Checks that the full-batch BRUD field of the Multiplication game equals
/// the dataset means at `points` random policies.
ConstantFieldReport constant_field_check(const OfflineDataset& data, Rng& rng, int points = 100);

/// Mean over samples of sum_t sum_i log N(a_{i,t}; mu_i, std^2), computed on
/// raw (de-normalized) trajectories.
double mean_policy_loglik(const Matrix& raw_trajectories, const JointPolicy& policy, double std = 1.0,
                          const TrajectoryLayout& layout = {});
double mean_policy_loglik(const std::vector<JointAction>& actions, const JointPolicy& policy, double std = 1.0);

enum class ContractionClass { Identity, Contractive, OneStep, Isometric, Expansive };
std::string to_string(ContractionClass c);
ContractionClass classify_contraction(double lambda);

struct ContractionCase {
    double lambda = 0.0;
    ContractionClass kind = ContractionClass::Identity;
    double max_law_error = 0.0;   // max | ||a'-mu|| - |1-lambda| ||a-mu|| |
    double mean_ratio = 0.0;      // mean ||a'-mu|| / ||a-mu||
    bool classification_ok = true;
    bool overshoot_ok = true;     // sign flip for lambda in (1, 2)
    bool passed = true;
};

struct ContractionReport {
    std::vector<ContractionCase> cases;
    bool passed = true;
};

ContractionReport contraction_battery(const std::vector<double>& lambdas, int trials, Rng& rng,
                                      double tolerance = 1e-12);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct DimensionDiagnostics {
    std::string name;
    double mean_gap = 0.0;
    double var_gap = 0.0;
    double ks = 0.0;
};

struct DistributionReport {
    std::vector<DimensionDiagnostics> dims;
    double max_mean_gap() const;
    double max_ks() const;
};

/// Per-agent action diagnostics of generated samples against a reference.
DistributionReport distribution_diagnostics(const std::vector<JointAction>& samples, const OfflineDataset& reference);

} // namespace coda
