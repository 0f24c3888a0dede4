// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace coda::app {

std::string version();

/// Output root used when --out is absent: $CODA_OUT_ROOT/<command>, or
/// ./coda-out/<command> when the variable is unset.
std::filesystem::path default_out_dir(const std::string& command);

/// Full command-line entry point. Returns the process exit code; failures
/// print "error [<stage>]: <message>" to stderr.
int run_cli(int argc, const char* const* argv);
/// Same as the argc/argv form, with `args` excluding the program name.
int run_cli(const std::vector<std::string>& args);

} // namespace coda::app
