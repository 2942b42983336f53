// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic objectives with known optima, used by tests, acceptance runs
// and the builtin executor.

#ifndef TUNER_BENCHMARKS_HPP
#define TUNER_BENCHMARKS_HPP

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "tuner/error.hpp"
#include "tuner/space.hpp"

namespace tuner::bench {

inline double branin(double x1, double x2) {
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

inline double hartmann3(double x1, double x2, double x3) {
  static constexpr std::array<double, 4> alpha{1.0, 1.2, 3.0, 3.2};
  static constexpr double a[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
  static constexpr double p[4][3] = {{0.3689, 0.1170, 0.2673},
                                     {0.4699, 0.4387, 0.7470},
                                     {0.1091, 0.8732, 0.5547},
                                     {0.0381, 0.5743, 0.8828}};
  const double x[3] = {x1, x2, x3};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 3; ++j) inner += a[i][j] * (x[j] - p[i][j]) * (x[j] - p[i][j]);
    total -= alpha[i] * std::exp(-inner);
  }
  return total;
}

/// Shape of a simulated learning curve v_r = final + (start - final) e^{-r/tau}.
/// tau grows with the final value, so curves of different configurations
/// never cross: the ordering at every iteration is the ordering of finals.
struct CurveShape {
  double final_value;
  double start_value;
  double tau;

  double at(std::int64_t r) const {
    return final_value + (start_value - final_value) * std::exp(-static_cast<double>(r) / tau);
  }
};

inline CurveShape curve_sim_shape(double x1, double x2) {
  const double final_value = (x1 - 0.3) * (x1 - 0.3) + (x2 - 0.7) * (x2 - 0.7);
  return {final_value, final_value + 1.0, 5.0 + 20.0 * final_value};
}

struct Benchmark {
  std::string name;
  SearchSpace space;
  double optimum;
  std::function<double(const Configuration&)> objective;
  /// Set for benchmarks that report an iteration curve.
  std::function<CurveShape(const Configuration&)> curve;
};

inline Benchmark make_benchmark(const std::string& name) {
  auto num = [](const Configuration& c, const std::string& key) { return numeric_value(c.at(key)); };
  if (name == "branin") {
    return {name,
            SearchSpace({Dimension::continuous("x1", -5.0, 10.0), Dimension::continuous("x2", 0.0, 15.0)}),
            0.397887357729738,
            [num](const Configuration& c) { return branin(num(c, "x1"), num(c, "x2")); },
            {}};
  }
  if (name == "hartmann3") {
    return {name,
            SearchSpace({Dimension::continuous("x1", 0.0, 1.0), Dimension::continuous("x2", 0.0, 1.0),
                         Dimension::continuous("x3", 0.0, 1.0)}),
            -3.86278214782076,
            [num](const Configuration& c) { return hartmann3(num(c, "x1"), num(c, "x2"), num(c, "x3")); },
            {}};
  }
  if (name.rfind("sphere-", 0) == 0) {
    int d = 0;
    try {
      d = std::stoi(name.substr(7));
    } catch (const std::exception&) {
      d = 0;
    }
    if (d < 1 || d > 64) throw Error(Errc::UnknownBenchmark, "sphere dimension must be in [1, 64]: " + name);
    std::vector<Dimension> dims;
    for (int i = 0; i < d; ++i) dims.push_back(Dimension::continuous("x" + std::to_string(i), -5.0, 5.0));
    return {name, SearchSpace(std::move(dims)), 0.0,
            [num, d](const Configuration& c) {
              double s = 0.0;
              for (int i = 0; i < d; ++i) {
                double v = num(c, "x" + std::to_string(i));
                s += v * v;
              }
              return s;
            },
            {}};
  }
  if (name == "log-distance") {
    // |log10 c + 3|: the optimum sits at c = 1e-3, deep in the low decades.
    return {name, SearchSpace({Dimension::continuous("c", 1e-9, 1e9, Scaling::Log)}), 0.0,
            [num](const Configuration& c) { return std::abs(std::log10(num(c, "c")) + 3.0); },
            {}};
  }
  if (name == "curve-sim") {
    auto shape = [num](const Configuration& c) { return curve_sim_shape(num(c, "x1"), num(c, "x2")); };
    return {name,
            SearchSpace({Dimension::continuous("x1", 0.0, 1.0), Dimension::continuous("x2", 0.0, 1.0)}),
            0.0, [shape](const Configuration& c) { return shape(c).final_value; }, shape};
  }
  throw Error(Errc::UnknownBenchmark, "no builtin benchmark named '" + name + "'");
}

inline std::vector<std::string> benchmark_names() {
  return {"branin", "hartmann3", "sphere-<d>", "log-distance", "curve-sim"};
}

}  // namespace tuner::bench

#endif  // TUNER_BENCHMARKS_HPP
