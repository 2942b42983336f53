// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Gaussian-process regression on encoded configurations.
//
// The covariance is a Matern-5/2 ARD kernel evaluated on inputs that have
// first been warped coordinate-wise through the Kumaraswamy CDF
// 1 - (1 - u^a)^b. Observations are normalized to zero mean and unit
// population standard deviation before fitting; predictions are returned in
// raw units. Predictive variances are for the latent function and exclude
// the observation noise.

#ifndef TUNER_SURROGATE_HPP
#define TUNER_SURROGATE_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "tuner/error.hpp"

namespace tuner {

/// Box constraints on the GP hyperparameters.
struct GpBounds {
  static constexpr double kScaleMin = 1e-4;  // lengthscales and amplitude
  static constexpr double kScaleMax = 1e4;
  static constexpr double kNoiseMin = 1e-8;
  static constexpr double kNoiseMax = 1.0;
  static constexpr double kWarpMin = 0.1;
  static constexpr double kWarpMax = 10.0;
};

struct GpHyperParams {
  Eigen::VectorXd lengthscales;
  double amplitude = 1.0;
  double noise_var = 1e-3;
  Eigen::VectorXd warp_a;
  Eigen::VectorXd warp_b;

  /// Starting point used by both inference routes.
  static GpHyperParams defaults(std::size_t width) {
    auto w = static_cast<Eigen::Index>(width);
    return {Eigen::VectorXd::Constant(w, 0.5), 1.0, 1e-3, Eigen::VectorXd::Ones(w),
            Eigen::VectorXd::Ones(w)};
  }

  std::size_t width() const noexcept { return static_cast<std::size_t>(lengthscales.size()); }

  bool within_bounds() const {
    auto inside = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (warp_a.size() != lengthscales.size() || warp_b.size() != lengthscales.size()) return false;
    if (!inside(amplitude, GpBounds::kScaleMin, GpBounds::kScaleMax)) return false;
    if (!inside(noise_var, GpBounds::kNoiseMin, GpBounds::kNoiseMax)) return false;
    for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
      if (!inside(lengthscales[j], GpBounds::kScaleMin, GpBounds::kScaleMax)) return false;
      if (!inside(warp_a[j], GpBounds::kWarpMin, GpBounds::kWarpMax)) return false;
      if (!inside(warp_b[j], GpBounds::kWarpMin, GpBounds::kWarpMax)) return false;
    }
    return true;
  }
};

inline double kumaraswamy_warp(double u, double a, double b) {
  constexpr double kSlack = 1e-12;
  if (u < -kSlack || u > 1.0 + kSlack || std::isnan(u))
    throw Error(Errc::ValueOutOfDomain, "warp input " + std::to_string(u) + " outside [0,1]");
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  if (a == 1.0 && b == 1.0) return u;
  // 1 - (1 - u^a)^b written with log1p/expm1 to keep precision near both ends.
  double ua = std::pow(u, a);
  if (ua >= 1.0) return 1.0;
  return -std::expm1(b * std::log1p(-ua));
}

namespace detail {

inline Eigen::VectorXd warp_point(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const GpHyperParams& theta) {
  Eigen::VectorXd w(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    w[j] = kumaraswamy_warp(x[j], theta.warp_a[j], theta.warp_b[j]);
  return w;
}

inline Eigen::MatrixXd warp_rows(const Eigen::MatrixXd& design, const GpHyperParams& theta) {
  Eigen::MatrixXd out(design.rows(), design.cols());
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    for (Eigen::Index j = 0; j < design.cols(); ++j)
      out(i, j) = kumaraswamy_warp(design(i, j), theta.warp_a[j], theta.warp_b[j]);
  return out;
}

/// Matern-5/2 on already-warped inputs, with 1/lengthscale supplied.
template <class A, class B>
double matern52_warped(const A& wx, const B& wx2, const Eigen::VectorXd& inv_ls, double amplitude) {
  double r2 = ((wx - wx2).cwiseProduct(inv_ls.transpose())).squaredNorm();
  double r = std::sqrt(r2);
  const double s5r = std::sqrt(5.0) * r;
  return amplitude * (1.0 + s5r + (5.0 / 3.0) * r2) * std::exp(-s5r);
}

}  // namespace detail

inline double matern52_ard(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& x2, const GpHyperParams& theta) {
  if (x.size() != x2.size() || static_cast<std::size_t>(x.size()) != theta.width())
    throw Error(Errc::LengthMismatch, "kernel inputs and hyperparameters disagree on width");
  Eigen::VectorXd inv_ls = theta.lengthscales.cwiseInverse();
  Eigen::RowVectorXd a = detail::warp_point(x, theta).transpose();
  Eigen::RowVectorXd b = detail::warp_point(x2, theta).transpose();
  return detail::matern52_warped(a, b, inv_ls, theta.amplitude);
}

struct NormalizedTargets {
  Eigen::VectorXd z;
  double mean = 0.0;
  double scale = 1.0;

  static NormalizedTargets from(const Eigen::VectorXd& y) {
    NormalizedTargets t;
    if (y.size() == 0) return t;
    t.mean = y.mean();
    Eigen::VectorXd centered = y.array() - t.mean;
    double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(y.size()));
    t.scale = sd < 1e-12 ? 1.0 : sd;
    t.z = centered / t.scale;
    return t;
  }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Immutable fitted GP state; safe to share for concurrent predict calls.
class GpPosterior {
 public:
  GpPosterior(Eigen::MatrixXd design, NormalizedTargets targets, GpHyperParams theta,
              Eigen::MatrixXd chol, Eigen::VectorXd alpha, double jitter)
      : design_(std::move(design)),
        targets_(std::move(targets)),
        theta_(std::move(theta)),
        chol_(std::move(chol)),
        alpha_(std::move(alpha)),
        jitter_(jitter),
        warped_(detail::warp_rows(design_, theta_)),
        inv_ls_(theta_.lengthscales.cwiseInverse()) {}

  const Eigen::MatrixXd& design() const noexcept { return design_; }
  const NormalizedTargets& targets() const noexcept { return targets_; }
  const GpHyperParams& theta() const noexcept { return theta_; }
  const Eigen::MatrixXd& chol() const noexcept { return chol_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  double jitter() const noexcept { return jitter_; }
  Eigen::Index size() const noexcept { return design_.rows(); }

  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (static_cast<std::size_t>(x.size()) != theta_.width())
      throw Error(Errc::LengthMismatch, "prediction input has wrong width");
    const double scale = targets_.scale;
    if (size() == 0) return {targets_.mean, theta_.amplitude * scale * scale};
    Eigen::RowVectorXd wx = detail::warp_point(x, theta_).transpose();
    Eigen::VectorXd k(size());
    for (Eigen::Index i = 0; i < size(); ++i)
      k[i] = detail::matern52_warped(warped_.row(i), wx, inv_ls_, theta_.amplitude);
    double mean = k.dot(alpha_);
    Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    double var = std::max(0.0, theta_.amplitude - v.squaredNorm());
    return {mean * scale + targets_.mean, var * scale * scale};
  }

  /// Log marginal likelihood of the normalized targets under this fit.
  double log_marginal_likelihood() const {
    const auto n = static_cast<double>(size());
    if (size() == 0) return 0.0;
    return -0.5 * targets_.z.dot(alpha_) - chol_.diagonal().array().log().sum() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  }

 private:
  Eigen::MatrixXd design_;
  NormalizedTargets targets_;
  GpHyperParams theta_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_;
  Eigen::MatrixXd warped_;
  Eigen::VectorXd inv_ls_;
};

/// K_theta(design, design) without the noise term.
inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& design, const GpHyperParams& theta) {
  if (static_cast<std::size_t>(design.cols()) != theta.width())
    throw Error(Errc::LengthMismatch, "design width does not match hyperparameters");
  Eigen::MatrixXd warped = detail::warp_rows(design, theta);
  Eigen::VectorXd inv_ls = theta.lengthscales.cwiseInverse();
  const Eigen::Index n = design.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = theta.amplitude;
    for (Eigen::Index j = 0; j < i; ++j)
      k(i, j) = k(j, i) = detail::matern52_warped(warped.row(i), warped.row(j), inv_ls, theta.amplitude);
  }
  return k;
}

inline GpPosterior fit_posterior(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                 const GpHyperParams& theta) {
  if (design.rows() != y.size())
    throw Error(Errc::LengthMismatch, "design rows and targets differ in length");
  NormalizedTargets targets = NormalizedTargets::from(y);
  const Eigen::Index n = design.rows();
  if (n == 0)
    return GpPosterior(design, targets, theta, Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), 0.0);

  Eigen::MatrixXd k = kernel_matrix(design, theta);
  k.diagonal().array() += theta.noise_var;

  // Jitter escalation: 1e-10 * amplitude, x10 per retry, at most 5 retries.
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    if (attempt > 0) jitter = attempt == 1 ? 1e-10 * theta.amplitude : jitter * 10.0;
    Eigen::MatrixXd shifted = k;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd chol = llt.matrixL();
    if ((chol.diagonal().array() <= 0.0).any() || !chol.allFinite()) continue;
    Eigen::VectorXd alpha = llt.solve(targets.z);
    return GpPosterior(design, std::move(targets), theta, std::move(chol), std::move(alpha), jitter);
  }
  throw Error(Errc::CholeskyFailure, "kernel matrix not positive definite after jitter escalation");
}

inline Prediction predict(const GpPosterior& post, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return post.predict(x);
}

inline double log_marginal_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                      const GpHyperParams& theta) {
  return fit_posterior(design, y, theta).log_marginal_likelihood();
}

}  // namespace tuner

#endif  // TUNER_SURROGATE_HPP
