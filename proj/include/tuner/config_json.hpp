// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TUNER_CONFIG_JSON_HPP
#define TUNER_CONFIG_JSON_HPP

#include <string>

#include <nlohmann/json.hpp>

#include "tuner/space.hpp"

namespace tuner {

/// Doubles are written in shortest round-trip form, so a reader that parses
/// them back recovers the identical bits.
inline nlohmann::json config_to_json(const Configuration& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, value] : config.values)
    std::visit([&, &key = name](const auto& v) { out[key] = v; }, value);
  return out;
}

/// Reads a configuration without a space: JSON integers become integers,
/// other numbers doubles, strings categories.
inline Configuration config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "configuration must be a JSON object");
  Configuration config;
  for (const auto& [name, value] : j.items()) {
    if (value.is_number_integer())
      config.values.emplace(name, value.get<std::int64_t>());
    else if (value.is_number())
      config.values.emplace(name, value.get<double>());
    else if (value.is_string())
      config.values.emplace(name, value.get<std::string>());
    else
      throw Error(Errc::InvalidConfig, "value of '" + name + "' must be a number or string");
  }
  return config;
}

/// Coerces value types to what `space` expects (integral numbers on
/// continuous dimensions become doubles and vice versa). Values that cannot
/// be coerced are left untouched for domain checks to reject; names absent
/// from the space are kept as-is.
inline Configuration conform_to_space(Configuration config, const SearchSpace& space) {
  for (auto& [name, value] : config.values) {
    const Dimension* dim = space.find(name);
    if (!dim || std::holds_alternative<std::string>(value)) continue;
    double v = numeric_value(value);
    if (dim->kind == DimensionKind::Continuous)
      value = v;
    else if (dim->kind == DimensionKind::Integer && std::floor(v) == v && std::abs(v) < 9.0e18)
      value = static_cast<std::int64_t>(v);
  }
  return config;
}

}  // namespace tuner

#endif  // TUNER_CONFIG_JSON_HPP
