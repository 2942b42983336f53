// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TUNER_ERROR_HPP
#define TUNER_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace tuner {

enum class Errc {
  // space
  DuplicateName,
  InvalidBounds,
  LogScaleNonPositive,
  TooFewCategories,
  ConditionalUnsupported,
  ValueOutOfDomain,
  LengthMismatch,
  InvalidCount,
  DimensionUnsupported,
  // surrogate / inference
  CholeskyFailure,
  StepOutFailure,
  // stopping / scheduler
  MissingPoint,
  UnknownTrial,
  ParentNotFound,
  JobAborted,
  InvalidConfig,
  // jobstore
  AlreadyExists,
  IoError,
  NotFound,
  CorruptStore,
  // runner
  SpawnFailure,
  Timeout,
  ProtocolViolation,
  TrialFailed,
  UnknownBenchmark,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::InvalidBounds: return "InvalidBounds";
    case Errc::LogScaleNonPositive: return "LogScaleNonPositive";
    case Errc::TooFewCategories: return "TooFewCategories";
    case Errc::ConditionalUnsupported: return "ConditionalUnsupported";
    case Errc::ValueOutOfDomain: return "ValueOutOfDomain";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidCount: return "InvalidCount";
    case Errc::DimensionUnsupported: return "DimensionUnsupported";
    case Errc::CholeskyFailure: return "CholeskyFailure";
    case Errc::StepOutFailure: return "StepOutFailure";
    case Errc::MissingPoint: return "MissingPoint";
    case Errc::UnknownTrial: return "UnknownTrial";
    case Errc::ParentNotFound: return "ParentNotFound";
    case Errc::JobAborted: return "JobAborted";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::AlreadyExists: return "AlreadyExists";
    case Errc::IoError: return "IoError";
    case Errc::NotFound: return "NotFound";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::SpawnFailure: return "SpawnFailure";
    case Errc::Timeout: return "Timeout";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::TrialFailed: return "TrialFailed";
    case Errc::UnknownBenchmark: return "UnknownBenchmark";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tuner

#endif  // TUNER_ERROR_HPP
