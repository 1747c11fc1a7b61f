#include "chflow/error.hpp"

namespace chflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PotentialInvalid: return "PotentialInvalid";
    case ErrorCode::ProfileSolveFailed: return "ProfileSolveFailed";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::WrongBranch: return "WrongBranch";
    case ErrorCode::SeparationViolated: return "SeparationViolated";
    case ErrorCode::InterpolantBoundViolated: return "InterpolantBoundViolated";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::StepFloorReached: return "StepFloorReached";
    case ErrorCode::EnergyIncreaseAtFloor: return "EnergyIncreaseAtFloor";
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::NoValidZeros: return "NoValidZeros";
    case ErrorCode::PhaseHypothesisUnmet: return "PhaseHypothesisUnmet";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::EigsNotConverged: return "EigsNotConverged";
    case ErrorCode::EnergyBudgetExceeded: return "EnergyBudgetExceeded";
    case ErrorCode::ConstraintCorrectionFailed: return "ConstraintCorrectionFailed";
    case ErrorCode::PhaseNotReached: return "PhaseNotReached";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ConfigSyntax: return "ConfigSyntax";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace chflow
