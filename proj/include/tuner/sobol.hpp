// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TUNER_SOBOL_HPP
#define TUNER_SOBOL_HPP

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tuner/detail/sobol_directions.hpp"
#include "tuner/error.hpp"

namespace tuner {

/// Gray-code Sobol' generator with 32-bit resolution and Joe-Kuo direction
/// numbers. Point k is the XOR of direction numbers selected by gray(k).
class SobolSequence {
 public:
  static constexpr int kBits = 32;

  explicit SobolSequence(std::size_t dim) : directions_(dim), state_(dim, 0) {
    if (dim == 0 || dim > detail::kSobolMaxDim)
      throw Error(Errc::DimensionUnsupported,
                  "Sobol dimension " + std::to_string(dim) + " not in [1, " +
                      std::to_string(detail::kSobolMaxDim) + "]");
    for (int k = 0; k < kBits; ++k) directions_[0][k] = 1u << (kBits - 1 - k);
    for (std::size_t j = 1; j < dim; ++j) {
      const auto& prim = detail::kSobolPrimitives[j - 1];
      const int s = static_cast<int>(prim.degree);
      auto& v = directions_[j];
      for (int k = 0; k < s && k < kBits; ++k) v[k] = prim.initial[k] << (kBits - 1 - k);
      for (int k = s; k < kBits; ++k) {
        v[k] = v[k - s] ^ (v[k - s] >> s);
        for (int i = 1; i < s; ++i)
          if ((prim.coeffs >> (s - 1 - i)) & 1u) v[k] ^= v[k - i];
      }
    }
  }

  std::size_t dimension() const noexcept { return directions_.size(); }

  /// Positions the generator so the next point returned is point `index`.
  void seek(std::uint64_t index) {
    std::uint64_t gray = index ^ (index >> 1);
    for (std::size_t j = 0; j < directions_.size(); ++j) {
      std::uint32_t x = 0;
      for (int k = 0; k < kBits; ++k)
        if ((gray >> k) & 1u) x ^= directions_[j][k];
      state_[j] = x;
    }
    index_ = index;
  }

  /// Next point with every coordinate in [0,1).
  Eigen::VectorXd next() {
    Eigen::VectorXd out(static_cast<Eigen::Index>(directions_.size()));
    for (std::size_t j = 0; j < directions_.size(); ++j)
      out[static_cast<Eigen::Index>(j)] = static_cast<double>(state_[j]) * kScale;
    advance();
    return out;
  }

  /// Next point with each coordinate XOR-shifted by `shift` (digital shift).
  Eigen::VectorXd next_shifted(const std::vector<std::uint32_t>& shift) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(directions_.size()));
    for (std::size_t j = 0; j < directions_.size(); ++j)
      out[static_cast<Eigen::Index>(j)] = static_cast<double>(state_[j] ^ shift[j]) * kScale;
    advance();
    return out;
  }

 private:
  static constexpr double kScale = 1.0 / 4294967296.0;

  void advance() {
    // Index of the lowest zero bit of the current index selects the direction.
    int c = 0;
    for (std::uint64_t v = index_; v & 1u; v >>= 1) ++c;
    for (std::size_t j = 0; j < directions_.size(); ++j) state_[j] ^= directions_[j][c];
    ++index_;
  }

  std::vector<std::array<std::uint32_t, kBits>> directions_;
  std::vector<std::uint32_t> state_;
  std::uint64_t index_ = 0;
};

/// Rows are the first n points after skipping `skip` points.
inline Eigen::MatrixXd sobol_points(std::size_t dim, std::size_t n, std::size_t skip) {
  if (n == 0) throw Error(Errc::InvalidCount, "sobol_points needs n >= 1");
  SobolSequence seq(dim);
  seq.seek(skip);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = seq.next().transpose();
  return out;
}

/// Randomized Sobol' points: a seeded digital shift applied to the plain
/// sequence starting at the zero point. Keeps the net structure of the
/// unshifted sequence.
inline Eigen::MatrixXd scrambled_sobol_points(std::size_t dim, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::InvalidCount, "scrambled_sobol_points needs n >= 1");
  SobolSequence seq(dim);
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> shift(dim);
  for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i)
    out.row(static_cast<Eigen::Index>(i)) = seq.next_shifted(shift).transpose();
  return out;
}

}  // namespace tuner

#endif  // TUNER_SOBOL_HPP
