// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coda/analysis.hpp"
#include "coda/games.hpp"
#include "coda/pipeline.hpp"

namespace coda {

/// Raised when a config document is malformed; the message names the field
/// path (e.g. "learner.lr").
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Canonical JSON text of a config (keys sorted, every field present).
std::string to_json_text(const RunConfig& cfg);
/// Parses a (possibly partial) config; absent fields keep their defaults and
/// unknown fields are rejected.
RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string game_to_json_text(const GameSpec& game);

/// 64-bit FNV-1a of the canonical config text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Decimal text with 17 significant digits (exact double round trip).
std::string format_double(double v);

/// Dataset file: a '#'-prefixed JSON header record (n, seed, law, game), a
/// column header "ax,ay,reward", then one record per line.
void write_dataset(std::ostream& os, const OfflineDataset& data);
OfflineDataset read_dataset(std::istream& is);

void write_step_log(std::ostream& os, const std::vector<StepRecord>& steps);
void write_epoch_log(std::ostream& os, const std::vector<EpochRecord>& epochs);
void write_loss_curve(std::ostream& os, const LossCurve& curve);
void write_actions(std::ostream& os, const std::vector<JointAction>& actions);
/// Reads the "ax,ay" table written by write_actions.
std::vector<JointAction> read_actions(std::istream& is);
/// Summary record of a run (final policy, returns, seed, config hash).
std::string run_summary_json(const RunLog& log);

/// Writes model.txt, normalizer.txt and prior.json into `dir`.
void save_prior(const std::filesystem::path& dir, const TrainedPrior& prior);
TrainedPrior load_prior(const std::filesystem::path& dir);

} // namespace coda
