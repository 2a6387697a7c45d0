#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qlab {

enum class ErrorKind {
  InvalidInput,
  DuplicateZero,
  NonNegativityViolation,
  FoldNotFound,
  AssumptionViolated,
  NotAnEquilibrium,
  PoleInInterval,
  EntryOutOfRange,
  NoExit,
  NoExitBeforeTmax,
  StepSizeUnderflow,
  MaxStepsExceeded,
  SeedCorrectionFailed,
  CorrectorDiverged,
  MissingArtifact,
  ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can translate it into a machine-readable record and an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qlab
