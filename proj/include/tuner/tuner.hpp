// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header. The CLI (tuner/cli.hpp) is not included; it needs CLI11.

#ifndef TUNER_TUNER_HPP
#define TUNER_TUNER_HPP

#include "tuner/acquisition.hpp"
#include "tuner/benchmarks.hpp"
#include "tuner/config_json.hpp"
#include "tuner/error.hpp"
#include "tuner/inference.hpp"
#include "tuner/job.hpp"
#include "tuner/jobstore.hpp"
#include "tuner/runner.hpp"
#include "tuner/scheduler.hpp"
#include "tuner/sobol.hpp"
#include "tuner/space.hpp"
#include "tuner/stopping.hpp"
#include "tuner/surrogate.hpp"

#endif  // TUNER_TUNER_HPP
