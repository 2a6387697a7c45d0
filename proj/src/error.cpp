#include "qlab/error.hpp"

namespace qlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DuplicateZero: return "DuplicateZero";
    case ErrorKind::NonNegativityViolation: return "NonNegativityViolation";
    case ErrorKind::FoldNotFound: return "FoldNotFound";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::NotAnEquilibrium: return "NotAnEquilibrium";
    case ErrorKind::PoleInInterval: return "PoleInInterval";
    case ErrorKind::EntryOutOfRange: return "EntryOutOfRange";
    case ErrorKind::NoExit: return "NoExit";
    case ErrorKind::NoExitBeforeTmax: return "NoExitBeforeTmax";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorKind::SeedCorrectionFailed: return "SeedCorrectionFailed";
    case ErrorKind::CorrectorDiverged: return "CorrectorDiverged";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace qlab
