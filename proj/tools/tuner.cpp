// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuner/cli.hpp"

int main(int argc, char** argv) { return tuner::cli::run_cli(argc, argv); }
