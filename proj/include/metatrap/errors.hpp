#ifndef METATRAP_ERRORS_HPP
#define METATRAP_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace metatrap {

enum class ErrorCode {
  InvalidArgument,
  InvalidChain,
  ParseError,
  SingularSystem,
  ZeroMassState,
  ZeroMass,
  NonIntegerTime,
  EmptyComplement,
  EmptySet,
  DimensionMismatch,
  ExtinctMass,
  ZeroConditioning,
  NonConvergence,
  DisconnectedTrap,
  NotBirthDeath,
  InternalBoundViolation,
  BoundViolation,
  NotApplicable,
  LumpingViolation,
  TooLarge,
  AllCensored,
  EmptySample,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string &detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace metatrap

#endif
