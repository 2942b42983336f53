// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// GP hyperparameter inference: point estimation by maximizing the log
// marginal likelihood, or posterior sampling by slice sampling along random
// directions. Both work in log coordinates, where the hyperparameter bounds
// form a box.

#ifndef TUNER_INFERENCE_HPP
#define TUNER_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tuner/error.hpp"
#include "tuner/sobol.hpp"
#include "tuner/surrogate.hpp"

namespace tuner {

struct McmcConfig {
  std::size_t chain_length = 300;
  std::size_t burn_in = 250;
  std::size_t thinning = 5;

  std::size_t effective_samples() const { return (chain_length - burn_in) / thinning; }

  void validate() const {
    if (chain_length == 0 || thinning == 0 || burn_in >= chain_length || effective_samples() == 0)
      throw Error(Errc::InvalidConfig, "MCMC config needs burn_in < chain_length, thinning >= 1 "
                                       "and at least one retained sample");
  }
};

enum class InferenceMode { SliceSampling, EmpiricalBayes };

struct InferenceOptions {
  InferenceMode mode = InferenceMode::SliceSampling;
  McmcConfig mcmc;
  /// When false the warp shapes are pinned to 1 (identity warp).
  bool learn_warping = true;
};

/// Posterior samples of the GP hyperparameters, equally weighted.
struct ThetaEnsemble {
  std::vector<GpHyperParams> samples;
};

/// Packs hyperparameters into a flat log-space vector
/// [log lengthscales | log amplitude | log noise | log warp_a | log warp_b];
/// the warp blocks are omitted when warping is pinned.
class ThetaCodec {
 public:
  ThetaCodec(std::size_t width, bool learn_warping) : width_(width), warping_(learn_warping) {
    const auto n = static_cast<Eigen::Index>(size());
    const auto w = static_cast<Eigen::Index>(width_);
    lower_.resize(n);
    upper_.resize(n);
    lower_.head(w + 1).setConstant(std::log(GpBounds::kScaleMin));
    upper_.head(w + 1).setConstant(std::log(GpBounds::kScaleMax));
    lower_[w + 1] = std::log(GpBounds::kNoiseMin);
    upper_[w + 1] = std::log(GpBounds::kNoiseMax);
    if (warping_) {
      lower_.tail(2 * w).setConstant(std::log(GpBounds::kWarpMin));
      upper_.tail(2 * w).setConstant(std::log(GpBounds::kWarpMax));
    }
  }

  std::size_t size() const noexcept { return warping_ ? 3 * width_ + 2 : width_ + 2; }
  std::size_t width() const noexcept { return width_; }
  bool learns_warping() const noexcept { return warping_; }
  const Eigen::VectorXd& lower() const noexcept { return lower_; }
  const Eigen::VectorXd& upper() const noexcept { return upper_; }

  bool inside(const Eigen::VectorXd& v) const {
    return (v.array() >= lower_.array()).all() && (v.array() <= upper_.array()).all();
  }

  Eigen::VectorXd clamp(const Eigen::VectorXd& v) const { return v.cwiseMax(lower_).cwiseMin(upper_); }

  Eigen::VectorXd pack(const GpHyperParams& theta) const {
    const auto w = static_cast<Eigen::Index>(width_);
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    v.head(w) = theta.lengthscales.array().log();
    v[w] = std::log(theta.amplitude);
    v[w + 1] = std::log(theta.noise_var);
    if (warping_) {
      v.segment(w + 2, w) = theta.warp_a.array().log();
      v.segment(2 * w + 2, w) = theta.warp_b.array().log();
    }
    return v;
  }

  /// exp of a clamped log can land one ulp outside the box; clamp again.
  GpHyperParams unpack(const Eigen::VectorXd& v) const {
    const auto w = static_cast<Eigen::Index>(width_);
    Eigen::VectorXd c = clamp(v);
    auto bexp = [](const auto& x, double lo, double hi) { return x.array().exp().max(lo).min(hi).matrix().eval(); };
    GpHyperParams theta;
    theta.lengthscales = bexp(c.head(w), GpBounds::kScaleMin, GpBounds::kScaleMax);
    theta.amplitude = std::clamp(std::exp(c[w]), GpBounds::kScaleMin, GpBounds::kScaleMax);
    theta.noise_var = std::clamp(std::exp(c[w + 1]), GpBounds::kNoiseMin, GpBounds::kNoiseMax);
    if (warping_) {
      theta.warp_a = bexp(c.segment(w + 2, w), GpBounds::kWarpMin, GpBounds::kWarpMax);
      theta.warp_b = bexp(c.segment(2 * w + 2, w), GpBounds::kWarpMin, GpBounds::kWarpMax);
    } else {
      theta.warp_a = Eigen::VectorXd::Ones(w);
      theta.warp_b = Eigen::VectorXd::Ones(w);
    }
    return theta;
  }

  /// Log prior density in log coordinates, up to a constant: standard normal
  /// on log lengthscales and log amplitude, flat on log noise, N(0, 0.75^2)
  /// on log warp shapes.
  double log_prior(const Eigen::VectorXd& v) const {
    const auto w = static_cast<Eigen::Index>(width_);
    double lp = -0.5 * v.head(w + 1).squaredNorm();
    if (warping_) lp += -0.5 * v.tail(2 * w).squaredNorm() / (0.75 * 0.75);
    return lp;
  }

 private:
  std::size_t width_;
  bool warping_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// One slice-sampling transition along a uniformly random unit direction:
/// step-out from a randomly placed bracket of the given width, then
/// shrinkage. `log_x` is log_density(x) and is updated in place.
template <class LogDensity, class Rng>
Eigen::VectorXd slice_step(LogDensity& log_density, const Eigen::VectorXd& x, double& log_x, Rng& rng,
                           double width = 1.0, std::size_t max_expansions = 1000) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::VectorXd dir(x.size());
  do {
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = gauss(rng);
  } while (dir.norm() == 0.0);
  dir.normalize();

  auto along = [&](double t) -> double { return log_density(Eigen::VectorXd(x + t * dir)); };
  const double level = log_x + std::log(unit(rng));

  double left = -unit(rng) * width;
  double right = left + width;
  std::size_t expansions = 0;
  while (along(left) > level) {
    left -= width;
    if (++expansions > max_expansions)
      throw Error(Errc::StepOutFailure, "slice bracket exceeded expansion cap");
  }
  while (along(right) > level) {
    right += width;
    if (++expansions > max_expansions)
      throw Error(Errc::StepOutFailure, "slice bracket exceeded expansion cap");
  }

  for (int shrink = 0; shrink < 200; ++shrink) {
    double t = left + unit(rng) * (right - left);
    Eigen::VectorXd cand = x + t * dir;
    double lc = log_density(cand);
    if (lc > level) {
      log_x = lc;
      return cand;
    }
    (t < 0.0 ? left : right) = t;
  }
  return x;
}

/// Runs one chain from x0 and returns the retained post-burn-in, thinned
/// states. Deterministic given the seed.
template <class LogDensity>
std::vector<Eigen::VectorXd> slice_sample(LogDensity&& log_density, Eigen::VectorXd x0,
                                          const McmcConfig& config, std::uint64_t seed,
                                          double width = 1.0) {
  config.validate();
  std::mt19937_64 rng(seed);
  double log_x = log_density(x0);
  if (!std::isfinite(log_x))
    throw Error(Errc::InvalidConfig, "slice sampler started at a point of zero density");
  std::vector<Eigen::VectorXd> kept;
  kept.reserve(config.effective_samples());
  Eigen::VectorXd x = std::move(x0);
  for (std::size_t i = 0; i < config.chain_length; ++i) {
    x = slice_step(log_density, x, log_x, rng, width);
    if (i >= config.burn_in && (i - config.burn_in + 1) % config.thinning == 0) kept.push_back(x);
  }
  return kept;
}

namespace detail {

/// Unnormalized log posterior over packed hyperparameters; -inf outside the
/// box or where the kernel matrix cannot be factored.
class ThetaPosterior {
 public:
  ThetaPosterior(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const ThetaCodec& codec,
                 bool with_prior)
      : design_(design), y_(y), codec_(codec), with_prior_(with_prior) {}

  double operator()(const Eigen::VectorXd& v) const {
    if (!codec_.inside(v)) return -std::numeric_limits<double>::infinity();
    try {
      double lml = log_marginal_likelihood(design_, y_, codec_.unpack(v));
      if (!std::isfinite(lml)) return -std::numeric_limits<double>::infinity();
      return with_prior_ ? lml + codec_.log_prior(v) : lml;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

 private:
  const Eigen::MatrixXd& design_;
  const Eigen::VectorXd& y_;
  const ThetaCodec& codec_;
  bool with_prior_;
};

/// Projected gradient ascent with central finite differences and a
/// backtracking line search, confined to [lower, upper].
template <class Objective>
Eigen::VectorXd maximize_in_box(const Objective& f, Eigen::VectorXd x, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, double& fx, int max_iter = 150) {
  x = x.cwiseMax(lower).cwiseMin(upper);
  fx = f(x);
  if (!std::isfinite(fx)) return x;
  const double h = 1e-5;
  double step = 1.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd grad(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd up = x, dn = x;
      up[i] = std::min(x[i] + h, upper[i]);
      dn[i] = std::max(x[i] - h, lower[i]);
      double fu = f(up), fd = f(dn);
      double span = up[i] - dn[i];
      if (!std::isfinite(fu) || !std::isfinite(fd) || span <= 0.0) {
        grad[i] = 0.0;
        continue;
      }
      grad[i] = (fu - fd) / span;
      if ((x[i] >= upper[i] && grad[i] > 0.0) || (x[i] <= lower[i] && grad[i] < 0.0)) grad[i] = 0.0;
    }
    double gnorm = grad.norm();
    if (!(gnorm > 1e-6)) break;
    Eigen::VectorXd dir = grad / gnorm;

    bool accepted = false;
    double t = std::min(step * 2.0, 4.0);
    for (int ls = 0; ls < 40 && t > 1e-10; ++ls, t *= 0.5) {
      Eigen::VectorXd xn = (x + t * dir).cwiseMax(lower).cwiseMin(upper);
      double fn = f(xn);
      if (std::isfinite(fn) && fn > fx + 1e-4 * grad.dot(xn - x)) {
        double gain = fn - fx;
        x = std::move(xn);
        fx = fn;
        step = t;
        accepted = true;
        if (gain < 1e-10) return x;
        break;
      }
    }
    if (!accepted) break;
  }
  return x;
}

/// `count` points spread over the box; Sobol' when the dimension allows it.
inline Eigen::MatrixXd box_starts(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                  std::size_t count, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(lower.size());
  Eigen::MatrixXd unit;
  if (k <= detail::kSobolMaxDim) {
    unit = scrambled_sobol_points(k, count, seed);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    unit.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < unit.size(); ++i) unit.data()[i] = u(rng);
  }
  Eigen::MatrixXd out(unit.rows(), unit.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i)
    out.row(i) = lower.transpose() + unit.row(i).cwiseProduct((upper - lower).transpose());
  return out;
}

}  // namespace detail

/// Multi-start maximization of the log marginal likelihood: the default
/// hyperparameters plus four Sobol' starts in the log-bounds box.
inline GpHyperParams empirical_bayes_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                         std::uint64_t seed, bool learn_warping = true) {
  if (design.rows() < 1) throw Error(Errc::InvalidCount, "empirical Bayes needs n >= 1");
  ThetaCodec codec(static_cast<std::size_t>(design.cols()), learn_warping);
  detail::ThetaPosterior objective(design, y, codec, /*with_prior=*/false);

  Eigen::MatrixXd starts(5, static_cast<Eigen::Index>(codec.size()));
  starts.row(0) = codec.pack(GpHyperParams::defaults(codec.width())).transpose();
  starts.bottomRows(4) = detail::box_starts(codec.lower(), codec.upper(), 4, seed);

  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (Eigen::Index s = 0; s < starts.rows(); ++s) {
    double fx = 0.0;
    Eigen::VectorXd x = detail::maximize_in_box(objective, starts.row(s).transpose(), codec.lower(),
                                                codec.upper(), fx);
    if (std::isfinite(fx) && fx > best) {
      best = fx;
      best_x = x;
    }
  }
  if (best_x.size() == 0)
    throw Error(Errc::CholeskyFailure, "log marginal likelihood undefined at every start");
  return codec.unpack(best_x);
}

/// Slice-samples the hyperparameter posterior (log marginal likelihood plus
/// log prior) from the default starting point.
inline ThetaEnsemble slice_sample_thetas(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                         const McmcConfig& config, std::uint64_t seed,
                                         bool learn_warping = true) {
  if (design.rows() < 1) throw Error(Errc::InvalidCount, "slice sampling needs n >= 1");
  ThetaCodec codec(static_cast<std::size_t>(design.cols()), learn_warping);
  detail::ThetaPosterior target(design, y, codec, /*with_prior=*/true);
  Eigen::VectorXd x0 = codec.pack(GpHyperParams::defaults(codec.width()));
  if (!std::isfinite(target(x0)))
    throw Error(Errc::CholeskyFailure, "log marginal likelihood undefined at the initial state");
  ThetaEnsemble out;
  for (auto& v : slice_sample(target, std::move(x0), config, seed)) out.samples.push_back(codec.unpack(v));
  return out;
}

/// Dispatches on the inference mode. Fewer than three observations always
/// take the sampling route.
inline ThetaEnsemble infer_thetas(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                  const InferenceOptions& options, std::uint64_t seed) {
  if (options.mode == InferenceMode::EmpiricalBayes && design.rows() >= 3)
    return {{empirical_bayes_fit(design, y, seed, options.learn_warping)}};
  return slice_sample_thetas(design, y, options.mcmc, seed, options.learn_warping);
}

}  // namespace tuner

#endif  // TUNER_INFERENCE_HPP
