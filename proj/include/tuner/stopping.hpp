// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Median-rule early stopping. A running trial is stopped at iteration r when
// its value is strictly worse than the median of the completed trials'
// values at r, once enough trials have completed and r has passed an
// activation threshold derived from how long completed trials ran.

#ifndef TUNER_STOPPING_HPP
#define TUNER_STOPPING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tuner/error.hpp"

namespace tuner {

enum class Goal { Minimize, Maximize };

struct CurvePoint {
  std::int64_t iteration = 0;
  double value = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct MetricCurve {
  std::string trial_id;
  std::vector<CurvePoint> points;

  /// Iterations must be positive and strictly increasing.
  void append(std::int64_t iteration, double value) {
    if (iteration < 1 || (!points.empty() && iteration <= points.back().iteration))
      throw Error(Errc::InvalidConfig, "curve iterations must be positive and strictly increasing");
    points.push_back({iteration, value});
  }

  std::optional<double> value_at(std::int64_t r) const {
    auto it = std::lower_bound(points.begin(), points.end(), r,
                               [](const CurvePoint& p, std::int64_t it) { return p.iteration < it; });
    if (it == points.end() || it->iteration != r) return std::nullopt;
    return it->value;
  }

  /// Value at the largest iteration <= r, if any.
  std::optional<double> value_carried_to(std::int64_t r) const {
    auto it = std::upper_bound(points.begin(), points.end(), r,
                               [](std::int64_t it, const CurvePoint& p) { return it < p.iteration; });
    if (it == points.begin()) return std::nullopt;
    return std::prev(it)->value;
  }

  std::int64_t final_iteration() const { return points.empty() ? 0 : points.back().iteration; }

  bool operator==(const MetricCurve&) const = default;
};

enum class Verdict { Continue, Stop };
enum class StopReason { BelowActivation, NoQuorum, WorseThanMedian, NotWorse };

struct StopDecision {
  Verdict verdict = Verdict::Continue;
  StopReason reason = StopReason::BelowActivation;
  std::optional<double> median;
};

inline constexpr std::size_t kStoppingQuorum = 4;
inline constexpr std::int64_t kRuleInactive = std::numeric_limits<std::int64_t>::max();

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Earliest iteration at which the rule may fire: a quarter of the median
/// final iteration of completed curves, or kRuleInactive below the quorum.
inline std::int64_t activation_threshold(const std::vector<MetricCurve>& completed) {
  std::vector<double> finals;
  for (const auto& c : completed)
    if (!c.points.empty()) finals.push_back(static_cast<double>(c.final_iteration()));
  if (finals.size() < kStoppingQuorum) return kRuleInactive;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(0.25 * detail::median_of(finals))));
}

inline StopDecision median_rule(const MetricCurve& running, const std::vector<MetricCurve>& completed,
                                std::int64_t r, Goal goal) {
  auto current = running.value_at(r);
  if (!current)
    throw Error(Errc::MissingPoint, "trial '" + running.trial_id + "' has no point at iteration " +
                                        std::to_string(r));
  if (r < activation_threshold(completed)) return {Verdict::Continue, StopReason::BelowActivation, {}};

  std::vector<double> peers;
  for (const auto& c : completed)
    if (auto v = c.value_carried_to(r)) peers.push_back(*v);
  if (peers.size() < kStoppingQuorum) return {Verdict::Continue, StopReason::NoQuorum, {}};

  const double median = detail::median_of(std::move(peers));
  const bool worse = goal == Goal::Minimize ? *current > median : *current < median;
  if (worse) return {Verdict::Stop, StopReason::WorseThanMedian, median};
  return {Verdict::Continue, StopReason::NotWorse, median};
}

}  // namespace tuner

#endif  // TUNER_STOPPING_HPP
