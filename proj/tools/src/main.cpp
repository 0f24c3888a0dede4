// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda_app/app.hpp"

int main(int argc, char** argv) { return coda::app::run_cli(argc, argv); }
