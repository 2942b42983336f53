// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TUNER_ACQUISITION_HPP
#define TUNER_ACQUISITION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tuner/sobol.hpp"
#include "tuner/space.hpp"
#include "tuner/surrogate.hpp"

namespace tuner {

/// E[max(0, incumbent - Y)] for Y ~ N(mean, variance), minimization form.
inline double expected_improvement(double mean, double variance, double incumbent) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  if (sigma < 1e-12) return std::max(0.0, incumbent - mean);
  const double gamma = (incumbent - mean) / sigma;
  const double cdf = 0.5 * std::erfc(-gamma / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * gamma * gamma) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, sigma * (gamma * cdf + pdf));
}

struct AcquisitionContext {
  std::vector<GpPosterior> posteriors;
  /// Best (lowest) observed raw value.
  double incumbent = 0.0;
  std::vector<Eigen::VectorXd> pending;
  std::vector<Eigen::VectorXd> completed;
  SearchSpace space;
};

/// EI averaged uniformly over the hyperparameter samples.
inline double acquisition_value(const Eigen::Ref<const Eigen::VectorXd>& x, const AcquisitionContext& ctx) {
  if (ctx.posteriors.empty()) return 0.0;
  double total = 0.0;
  for (const auto& post : ctx.posteriors) {
    Prediction p = post.predict(x);
    total += expected_improvement(p.mean, p.variance, ctx.incumbent);
  }
  return total / static_cast<double>(ctx.posteriors.size());
}

struct ProposeOptions {
  std::size_t max_anchors = 2048;
  std::size_t anchors_per_dim = 512;
  std::size_t local_starts = 5;
  int sweeps = 3;
  double dedup_tolerance = 1e-6;
};

enum class ProposalSource { LocalSearch, Anchor, Random };

struct Proposal {
  Configuration config;
  Eigen::VectorXd encoded;
  double value = 0.0;
  ProposalSource source = ProposalSource::LocalSearch;
};

namespace detail {

/// Golden-section maximization of f on [lo, hi]; returns the best abscissa
/// among the probes and `start`.
template <class F>
double golden_maximize(const F& f, double lo, double hi, double start, double& f_best) {
  constexpr double kInvPhi = 0.6180339887498949;
  double best_x = start;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  auto consider = [&](double x, double fx) {
    if (fx > f_best) {
      f_best = fx;
      best_x = x;
    }
  };
  consider(c, fc);
  consider(d, fd);
  while (b - a > 1e-4) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }
  return best_x;
}

/// Coordinate-wise golden-section refinement inside the unit cube. Each
/// sweep searches a window around the current coordinate that halves per
/// sweep; a coordinate only moves when the acquisition improves.
template <class F>
Eigen::VectorXd local_refine(const F& acq, Eigen::VectorXd x, double& fx, int sweeps) {
  double half_width = 0.2;
  for (int s = 0; s < sweeps; ++s, half_width *= 0.5) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double x0 = x[j];
      auto along = [&](double t) {
        Eigen::VectorXd probe = x;
        probe[j] = t;
        return acq(probe);
      };
      double lo = std::max(0.0, x0 - half_width), hi = std::min(1.0, x0 + half_width);
      x[j] = golden_maximize(along, lo, hi, x0, fx);
    }
  }
  return x;
}

inline bool near_any(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& points, double tol) {
  return std::any_of(points.begin(), points.end(),
                     [&](const Eigen::VectorXd& p) { return (p - x).norm() < tol; });
}

inline Eigen::MatrixXd anchor_points(std::size_t width, std::size_t count, std::uint64_t seed) {
  if (width <= kSobolMaxDim) return sobol_points(width, count, /*skip=*/1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = u(rng);
  return out;
}

}  // namespace detail

/// Picks the next configuration: rank Sobol' anchors by acquisition value,
/// refine the best few locally, snap to valid configurations and drop any
/// that coincide with pending or completed points.
inline Proposal propose_detailed(const AcquisitionContext& ctx, std::uint64_t seed,
                                 const ProposeOptions& options = {}) {
  const SearchSpace& space = ctx.space;
  const std::size_t width = space.encoded_width();
  auto acq = [&](const Eigen::VectorXd& x) { return acquisition_value(x, ctx); };
  auto is_taken = [&](const Eigen::VectorXd& x) {
    return detail::near_any(x, ctx.pending, options.dedup_tolerance) ||
           detail::near_any(x, ctx.completed, options.dedup_tolerance);
  };

  const std::size_t n_anchor = std::min(options.max_anchors, options.anchors_per_dim * width);
  Eigen::MatrixXd anchors = detail::anchor_points(width, n_anchor, seed);
  std::vector<double> scores(n_anchor);
  for (std::size_t i = 0; i < n_anchor; ++i)
    scores[i] = acq(anchors.row(static_cast<Eigen::Index>(i)).transpose());

  std::vector<std::size_t> order(n_anchor);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<Proposal> candidates;
  const std::size_t starts = std::min(options.local_starts, n_anchor);
  for (std::size_t k = 0; k < starts; ++k) {
    const auto idx = static_cast<Eigen::Index>(order[k]);
    double fx = scores[order[k]];
    Eigen::VectorXd x = detail::local_refine(acq, anchors.row(idx).transpose(), fx, options.sweeps);
    Configuration config = decode(x, space);
    Eigen::VectorXd snapped = encode(config, space);
    if (is_taken(snapped)) continue;
    candidates.push_back({std::move(config), snapped, acq(snapped), ProposalSource::LocalSearch});
  }
  if (!candidates.empty()) {
    auto best = std::max_element(candidates.begin(), candidates.end(),
                                 [](const Proposal& a, const Proposal& b) { return a.value < b.value; });
    return *best;
  }

  for (std::size_t idx : order) {
    Configuration config = decode(anchors.row(static_cast<Eigen::Index>(idx)).transpose(), space);
    Eigen::VectorXd snapped = encode(config, space);
    if (!is_taken(snapped)) return {std::move(config), snapped, acq(snapped), ProposalSource::Anchor};
  }

  // Everything seen already; a random configuration, preferring unseen ones.
  std::vector<Configuration> draws = sample_random(space, seed ^ 0x9e3779b97f4a7c15ULL, 100);
  for (auto& config : draws) {
    Eigen::VectorXd e = encode(config, space);
    if (!is_taken(e)) return {std::move(config), e, acq(e), ProposalSource::Random};
  }
  Eigen::VectorXd e = encode(draws.back(), space);
  return {draws.back(), e, acq(e), ProposalSource::Random};
}

inline Configuration propose(const AcquisitionContext& ctx, std::uint64_t seed,
                             const ProposeOptions& options = {}) {
  return propose_detailed(ctx, seed, options).config;
}

}  // namespace tuner

#endif  // TUNER_ACQUISITION_HPP
