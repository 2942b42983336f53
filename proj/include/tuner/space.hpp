// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Mixed continuous / integer / categorical search spaces and their encoding
// into the unit hypercube. Numeric dimensions occupy one encoded coordinate,
// categorical dimensions a one-hot block.

#ifndef TUNER_SPACE_HPP
#define TUNER_SPACE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tuner/error.hpp"

namespace tuner {

enum class DimensionKind { Continuous, Integer, Categorical };
enum class Scaling { Linear, Log };

struct Dimension {
  std::string name;
  DimensionKind kind = DimensionKind::Continuous;
  double lower = 0.0;
  double upper = 1.0;
  Scaling scaling = Scaling::Linear;
  std::vector<std::string> categories;

  static Dimension continuous(std::string name, double lower, double upper,
                              Scaling scaling = Scaling::Linear) {
    return {std::move(name), DimensionKind::Continuous, lower, upper, scaling, {}};
  }
  static Dimension integer(std::string name, std::int64_t lower, std::int64_t upper,
                           Scaling scaling = Scaling::Linear) {
    return {std::move(name), DimensionKind::Integer, static_cast<double>(lower),
            static_cast<double>(upper), scaling, {}};
  }
  static Dimension categorical(std::string name, std::vector<std::string> categories) {
    return {std::move(name), DimensionKind::Categorical, 0.0, 0.0, Scaling::Linear,
            std::move(categories)};
  }

  bool is_numeric() const noexcept { return kind != DimensionKind::Categorical; }
  std::size_t encoded_width() const noexcept { return is_numeric() ? 1 : categories.size(); }

  bool operator==(const Dimension&) const = default;
};

using ParamValue = std::variant<double, std::int64_t, std::string>;

struct Configuration {
  std::map<std::string, ParamValue> values;

  const ParamValue& at(const std::string& name) const { return values.at(name); }
  bool operator==(const Configuration&) const = default;
};

namespace detail {

inline void check_dimension(const Dimension& dim) {
  if (dim.kind == DimensionKind::Categorical) {
    std::set<std::string> distinct(dim.categories.begin(), dim.categories.end());
    if (distinct.size() != dim.categories.size())
      throw Error(Errc::DuplicateName, "categorical '" + dim.name + "' repeats a category");
    if (dim.categories.size() < 2)
      throw Error(Errc::TooFewCategories, "categorical '" + dim.name + "' needs >= 2 categories");
    return;
  }
  if (!std::isfinite(dim.lower) || !std::isfinite(dim.upper) || !(dim.lower < dim.upper))
    throw Error(Errc::InvalidBounds, "'" + dim.name + "' requires lower < upper");
  if (dim.kind == DimensionKind::Integer &&
      (std::floor(dim.lower) != dim.lower || std::floor(dim.upper) != dim.upper))
    throw Error(Errc::InvalidBounds, "integer '" + dim.name + "' requires integral bounds");
  if (dim.scaling == Scaling::Log && dim.lower <= 0.0)
    throw Error(Errc::LogScaleNonPositive, "log-scaled '" + dim.name + "' requires lower > 0");
}

inline double to_transformed(const Dimension& dim, double v) {
  return dim.scaling == Scaling::Log ? std::log10(v) : v;
}

inline double from_transformed(const Dimension& dim, double t) {
  return dim.scaling == Scaling::Log ? std::pow(10.0, t) : t;
}

}  // namespace detail

class SearchSpace {
 public:
  SearchSpace() = default;

  /// Throws Error if any dimension invariant fails.
  explicit SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    std::set<std::string> names;
    offsets_.reserve(dims_.size());
    for (const auto& dim : dims_) {
      if (dim.name.empty()) throw Error(Errc::InvalidConfig, "dimension name must be non-empty");
      if (!names.insert(dim.name).second)
        throw Error(Errc::DuplicateName, "dimension '" + dim.name + "' declared twice");
      detail::check_dimension(dim);
      offsets_.push_back(width_);
      width_ += dim.encoded_width();
    }
  }

  const std::vector<Dimension>& dimensions() const noexcept { return dims_; }
  std::size_t size() const noexcept { return dims_.size(); }
  std::size_t encoded_width() const noexcept { return width_; }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }

  const Dimension* find(const std::string& name) const {
    auto it = std::find_if(dims_.begin(), dims_.end(),
                           [&](const Dimension& d) { return d.name == name; });
    return it == dims_.end() ? nullptr : &*it;
  }

  bool operator==(const SearchSpace& other) const { return dims_ == other.dims_; }

 private:
  std::vector<Dimension> dims_;
  std::vector<std::size_t> offsets_;
  std::size_t width_ = 0;
};

inline SearchSpace validate_space(std::vector<Dimension> dims) { return SearchSpace(std::move(dims)); }

inline SearchSpace validate_space(const SearchSpace& space) {
  return SearchSpace(space.dimensions());
}

/// Numeric view of a value; integers widen to double. Throws on strings.
inline double numeric_value(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw Error(Errc::ValueOutOfDomain, "expected a numeric value");
}

/// True iff `value` is a legal value of `dim`. Integers given as integral
/// doubles are accepted.
inline bool in_domain(const Dimension& dim, const ParamValue& value) {
  if (dim.kind == DimensionKind::Categorical) {
    const auto* s = std::get_if<std::string>(&value);
    return s && std::find(dim.categories.begin(), dim.categories.end(), *s) != dim.categories.end();
  }
  if (std::holds_alternative<std::string>(value)) return false;
  double v = numeric_value(value);
  if (!std::isfinite(v) || v < dim.lower || v > dim.upper) return false;
  if (dim.kind == DimensionKind::Integer && std::floor(v) != v) return false;
  return true;
}

/// Maps a configuration into [0,1]^encoded_width.
inline Eigen::VectorXd encode(const Configuration& config, const SearchSpace& space) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.encoded_width()));
  if (config.values.size() != space.size())
    throw Error(Errc::ValueOutOfDomain, "configuration has " + std::to_string(config.values.size()) +
                                            " values for " + std::to_string(space.size()) +
                                            " dimensions");
  for (std::size_t i = 0; i < space.size(); ++i) {
    const Dimension& dim = space.dimensions()[i];
    auto it = config.values.find(dim.name);
    if (it == config.values.end())
      throw Error(Errc::ValueOutOfDomain, "missing value for '" + dim.name + "'");
    if (!in_domain(dim, it->second))
      throw Error(Errc::ValueOutOfDomain, "value for '" + dim.name + "' outside its domain");
    auto at = static_cast<Eigen::Index>(space.offset(i));
    if (dim.kind == DimensionKind::Categorical) {
      const auto& cat = std::get<std::string>(it->second);
      auto idx = std::find(dim.categories.begin(), dim.categories.end(), cat) - dim.categories.begin();
      out[at + idx] = 1.0;
    } else {
      double lo = detail::to_transformed(dim, dim.lower);
      double hi = detail::to_transformed(dim, dim.upper);
      double t = detail::to_transformed(dim, numeric_value(it->second));
      out[at] = std::clamp((t - lo) / (hi - lo), 0.0, 1.0);
    }
  }
  return out;
}

/// Inverse of encode. Integers round half up, categoricals take the argmax
/// of their block with ties going to the lowest index.
inline Configuration decode(const Eigen::Ref<const Eigen::VectorXd>& x, const SearchSpace& space) {
  if (static_cast<std::size_t>(x.size()) != space.encoded_width())
    throw Error(Errc::LengthMismatch, "vector of length " + std::to_string(x.size()) +
                                          " for encoded width " +
                                          std::to_string(space.encoded_width()));
  Configuration config;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const Dimension& dim = space.dimensions()[i];
    auto at = static_cast<Eigen::Index>(space.offset(i));
    if (dim.kind == DimensionKind::Categorical) {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(dim.categories.size()); ++k)
        if (x[at + k] > x[at + best]) best = k;
      config.values.emplace(dim.name, dim.categories[static_cast<std::size_t>(best)]);
      continue;
    }
    double u = std::clamp(x[at], 0.0, 1.0);
    double lo = detail::to_transformed(dim, dim.lower);
    double hi = detail::to_transformed(dim, dim.upper);
    double v = std::clamp(detail::from_transformed(dim, lo + u * (hi - lo)), dim.lower, dim.upper);
    if (dim.kind == DimensionKind::Integer) {
      v = std::clamp(std::floor(v + 0.5), dim.lower, dim.upper);
      config.values.emplace(dim.name, static_cast<std::int64_t>(v));
    } else {
      config.values.emplace(dim.name, v);
    }
  }
  return config;
}

/// Snaps an arbitrary point of the hypercube onto the encoding of the
/// configuration it decodes to.
inline Eigen::VectorXd snap(const Eigen::Ref<const Eigen::VectorXd>& x, const SearchSpace& space) {
  return encode(decode(x, space), space);
}

/// n i.i.d. draws, uniform in encoded space for numeric dimensions (so
/// log-uniform under log scaling) and uniform over categories.
inline std::vector<Configuration> sample_random(const SearchSpace& space, std::uint64_t seed,
                                                std::size_t n) {
  if (n == 0) throw Error(Errc::InvalidCount, "sample_random needs n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Configuration> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    Configuration config;
    for (const auto& dim : space.dimensions()) {
      if (dim.kind == DimensionKind::Categorical) {
        std::uniform_int_distribution<std::size_t> pick(0, dim.categories.size() - 1);
        config.values.emplace(dim.name, dim.categories[pick(rng)]);
        continue;
      }
      double lo = detail::to_transformed(dim, dim.lower);
      double hi = detail::to_transformed(dim, dim.upper);
      double v = std::clamp(detail::from_transformed(dim, lo + unit(rng) * (hi - lo)), dim.lower,
                            dim.upper);
      if (dim.kind == DimensionKind::Integer)
        config.values.emplace(dim.name,
                              static_cast<std::int64_t>(std::clamp(std::floor(v + 0.5), dim.lower, dim.upper)));
      else
        config.values.emplace(dim.name, v);
    }
    out.push_back(std::move(config));
  }
  return out;
}

}  // namespace tuner

#endif  // TUNER_SPACE_HPP
