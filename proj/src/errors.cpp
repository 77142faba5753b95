#include "metatrap/errors.hpp"

namespace metatrap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidChain: return "InvalidChain";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ZeroMassState: return "ZeroMassState";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::NonIntegerTime: return "NonIntegerTime";
    case ErrorCode::EmptyComplement: return "EmptyComplement";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ExtinctMass: return "ExtinctMass";
    case ErrorCode::ZeroConditioning: return "ZeroConditioning";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DisconnectedTrap: return "DisconnectedTrap";
    case ErrorCode::NotBirthDeath: return "NotBirthDeath";
    case ErrorCode::InternalBoundViolation: return "InternalBoundViolation";
    case ErrorCode::BoundViolation: return "BoundViolation";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::LumpingViolation: return "LumpingViolation";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::AllCensored: return "AllCensored";
    case ErrorCode::EmptySample: return "EmptySample";
  }
  return "Unknown";
}

}  // namespace metatrap
