// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "tuner/sobol.hpp"

using namespace tuner;

namespace {

// Grid estimate of the star discrepancy: worst gap between empirical and
// uniform mass over anchored boxes with corners on a g x g lattice.
double star_discrepancy(const Eigen::MatrixXd& pts, int g = 64) {
  const double n = static_cast<double>(pts.rows());
  double worst = 0.0;
  for (int i = 1; i <= g; ++i) {
    for (int j = 1; j <= g; ++j) {
      const double a = static_cast<double>(i) / g, b = static_cast<double>(j) / g;
      int inside = 0;
      for (Eigen::Index k = 0; k < pts.rows(); ++k) inside += pts(k, 0) < a && pts(k, 1) < b;
      worst = std::max(worst, std::abs(inside / n - a * b));
    }
  }
  return worst;
}

}  // namespace

TEST(Sobol, OneDimensionAfterSkippingZero) {
  Eigen::MatrixXd p = sobol_points(1, 3, 1);
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(1, 0), 0.75);
  EXPECT_EQ(p(2, 0), 0.25);
}

TEST(Sobol, SequenceStartsAtZero) { EXPECT_EQ(sobol_points(1, 1, 0)(0, 0), 0.0); }

// Values produced by scipy.stats.qmc.Sobol(scramble=False).
TEST(Sobol, MatchesReferenceGeneratorInThreeDimensions) {
  const double ref[8][3] = {{0, 0, 0},           {0.5, 0.5, 0.5},     {0.75, 0.25, 0.25},  {0.25, 0.75, 0.75},
                            {0.375, 0.375, 0.625}, {0.875, 0.875, 0.125}, {0.625, 0.125, 0.875}, {0.125, 0.625, 0.375}};
  Eigen::MatrixXd p = sobol_points(3, 8, 0);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(p(i, j), ref[i][j]) << i << "," << j;
}

TEST(Sobol, MatchesReferenceGeneratorDeepInTheTable) {
  struct Row {
    std::size_t index;
    double v[5];
  };
  const int cols[5] = {0, 2, 20, 45, 63};
  const Row rows[] = {
      {100, {0.4140625, 0.7734375, 0.7578125, 0.6015625, 0.6484375}},
      {101, {0.9140625, 0.2734375, 0.2578125, 0.1015625, 0.1484375}},
      {513, {0.5029296875, 0.4541015625, 0.9541015625, 0.4423828125, 0.0419921875}},
      {1023, {0.0009765625, 0.6123046875, 0.8662109375, 0.3115234375, 0.0400390625}},
  };
  for (const auto& r : rows) {
    Eigen::MatrixXd p = sobol_points(64, 1, r.index);
    for (int k = 0; k < 5; ++k) EXPECT_EQ(p(0, cols[k]), r.v[k]) << "index " << r.index << " dim " << cols[k];
  }
  Eigen::MatrixXd first = sobol_points(64, 6, 0);
  EXPECT_EQ(first(4, 63), 0.125);
  EXPECT_EQ(first(5, 40), 0.375);
}

TEST(Sobol, SeekAgreesWithSequentialGeneration) {
  Eigen::MatrixXd all = sobol_points(5, 300, 0);
  Eigen::MatrixXd tail = sobol_points(5, 37, 263);
  EXPECT_TRUE(all.bottomRows(37) == tail);
}

TEST(Sobol, RepeatCallsIdentical) { EXPECT_TRUE(sobol_points(7, 100, 1) == sobol_points(7, 100, 1)); }

TEST(Sobol, CoordinatesInHalfOpenUnitInterval) {
  Eigen::MatrixXd p = sobol_points(64, 4096, 0);
  EXPECT_GE(p.minCoeff(), 0.0);
  EXPECT_LT(p.maxCoeff(), 1.0);
}

TEST(Sobol, DimensionOutsideTableRejected) {
  EXPECT_THROW(sobol_points(65, 1, 0), Error);
  try {
    sobol_points(0, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionUnsupported);
  }
}

TEST(Sobol, LowerDiscrepancyThanUniformRandom) {
  const double sobol = star_discrepancy(sobol_points(2, 1024, 1));
  std::vector<double> random;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd p(1024, 2);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    random.push_back(star_discrepancy(p));
  }
  std::nth_element(random.begin(), random.begin() + 10, random.end());
  EXPECT_LT(sobol, random[10]);
}

TEST(ScrambledSobol, SeededAndInUnitCube) {
  Eigen::MatrixXd a = scrambled_sobol_points(4, 64, 5);
  EXPECT_TRUE(a == scrambled_sobol_points(4, 64, 5));
  EXPECT_FALSE(a == scrambled_sobol_points(4, 64, 6));
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_LT(a.maxCoeff(), 1.0);
  // A digital shift keeps one point per dyadic interval of length 1/64.
  for (int j = 0; j < 4; ++j) {
    std::vector<int> bins(64, 0);
    for (int i = 0; i < 64; ++i) ++bins[static_cast<int>(a(i, j) * 64)];
    EXPECT_TRUE(std::all_of(bins.begin(), bins.end(), [](int c) { return c == 1; }));
  }
}
