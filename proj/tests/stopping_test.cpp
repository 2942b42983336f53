// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "tuner/stopping.hpp"

using namespace tuner;

namespace {

MetricCurve flat_curve(const std::string& id, std::int64_t last, double value) {
  MetricCurve c{id, {}};
  for (std::int64_t r = 1; r <= last; ++r) c.append(r, value);
  return c;
}

std::vector<MetricCurve> four_completed() {
  return {flat_curve("a", 10, 0.3), flat_curve("b", 10, 0.5), flat_curve("c", 10, 0.7), flat_curve("d", 10, 0.9)};
}

}  // namespace

TEST(MetricCurve, RejectsNonIncreasingIterations) {
  MetricCurve c{"t", {}};
  c.append(1, 0.5);
  EXPECT_THROW(c.append(1, 0.4), Error);
  EXPECT_THROW(c.append(0, 0.4), Error);
}

TEST(MetricCurve, CarriesLastValueForward) {
  MetricCurve c{"t", {}};
  c.append(2, 0.5);
  c.append(5, 0.4);
  EXPECT_FALSE(c.value_carried_to(1));
  EXPECT_EQ(*c.value_carried_to(4), 0.5);
  EXPECT_EQ(*c.value_carried_to(99), 0.4);
  EXPECT_FALSE(c.value_at(4));
}

TEST(ActivationThreshold, InactiveWithoutQuorum) {
  EXPECT_EQ(activation_threshold({}), kRuleInactive);
  EXPECT_EQ(activation_threshold({flat_curve("a", 5, 1), flat_curve("b", 5, 1), flat_curve("c", 5, 1)}), kRuleInactive);
}

TEST(ActivationThreshold, QuarterOfMedianDuration) {
  EXPECT_EQ(activation_threshold({flat_curve("a", 100, 1), flat_curve("b", 100, 1), flat_curve("c", 80, 1),
                                  flat_curve("d", 120, 1)}),
            25);
  EXPECT_EQ(activation_threshold({flat_curve("a", 4, 1), flat_curve("b", 4, 1), flat_curve("c", 4, 1),
                                  flat_curve("d", 4, 1)}),
            1);
}

TEST(MedianRule, StopsStrictlyWorseThanMedian) {
  MetricCurve running = flat_curve("r", 5, 0.8);
  StopDecision d = median_rule(running, four_completed(), 5, Goal::Minimize);
  EXPECT_EQ(d.verdict, Verdict::Stop);
  EXPECT_EQ(d.reason, StopReason::WorseThanMedian);
  EXPECT_DOUBLE_EQ(*d.median, 0.6);
}

TEST(MedianRule, TieContinues) {
  StopDecision d = median_rule(flat_curve("r", 5, 0.6), four_completed(), 5, Goal::Minimize);
  EXPECT_EQ(d.verdict, Verdict::Continue);
  EXPECT_EQ(d.reason, StopReason::NotWorse);
}

TEST(MedianRule, ThreeCompletedIsNoQuorum) {
  auto completed = four_completed();
  completed.pop_back();
  // Below the quorum the threshold is inactive too, so any r is below it.
  StopDecision d = median_rule(flat_curve("r", 5, 100.0), completed, 5, Goal::Minimize);
  EXPECT_EQ(d.verdict, Verdict::Continue);
}

TEST(MedianRule, QuorumCountsOnlyCurvesReachingR) {
  // Four completed with median duration 10 (threshold 2), but only three
  // have a point at or before r=2.
  std::vector<MetricCurve> completed = four_completed();
  MetricCurve late{"late", {}};
  late.append(3, 0.1);
  late.append(10, 0.1);
  completed[3] = late;
  StopDecision d = median_rule(flat_curve("r", 2, 5.0), completed, 2, Goal::Minimize);
  EXPECT_EQ(d.verdict, Verdict::Continue);
  EXPECT_EQ(d.reason, StopReason::NoQuorum);
}

TEST(MedianRule, BelowActivationContinues) {
  std::vector<MetricCurve> completed{flat_curve("a", 100, 0.3), flat_curve("b", 100, 0.5), flat_curve("c", 100, 0.7),
                                     flat_curve("d", 100, 0.9)};
  StopDecision d = median_rule(flat_curve("r", 24, 50.0), completed, 24, Goal::Minimize);
  EXPECT_EQ(d.reason, StopReason::BelowActivation);
  EXPECT_EQ(median_rule(flat_curve("r", 25, 50.0), completed, 25, Goal::Minimize).verdict, Verdict::Stop);
}

TEST(MedianRule, MaximizeFlipsDirection) {
  EXPECT_EQ(median_rule(flat_curve("r", 5, 0.4), four_completed(), 5, Goal::Maximize).verdict, Verdict::Stop);
  EXPECT_EQ(median_rule(flat_curve("r", 5, 0.8), four_completed(), 5, Goal::Maximize).verdict, Verdict::Continue);
}

TEST(MedianRule, MissingRunningPoint) {
  try {
    median_rule(flat_curve("r", 3, 0.1), four_completed(), 5, Goal::Minimize);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingPoint);
  }
}

TEST(MedianRule, NeverFiresWithEmptyHistory) {
  for (std::int64_t r = 1; r < 50; ++r)
    EXPECT_EQ(median_rule(flat_curve("r", r, 1e9), {}, r, Goal::Minimize).verdict, Verdict::Continue);
}

TEST(MedianRule, MonotoneSafetyAndScaleEquivariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    std::vector<MetricCurve> completed;
    const int n = 4 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) completed.push_back(flat_curve("c" + std::to_string(i), 8, u(rng)));
    const double v = u(rng);
    StopDecision d = median_rule(flat_curve("r", 4, v), completed, 4, Goal::Minimize);
    if (d.verdict == Verdict::Stop) {
      EXPECT_EQ(median_rule(flat_curve("r", 4, v + 0.1 * u(rng) + 1e-9), completed, 4, Goal::Minimize).verdict,
                Verdict::Stop);
    }

    const double a = 0.1 + 5 * u(rng), b = u(rng) * 10 - 5;
    std::vector<MetricCurve> scaled;
    for (const auto& c : completed) scaled.push_back(flat_curve(c.trial_id, 8, a * c.points[0].value + b));
    EXPECT_EQ(median_rule(flat_curve("r", 4, a * v + b), scaled, 4, Goal::Minimize).verdict, d.verdict);
  }
}
