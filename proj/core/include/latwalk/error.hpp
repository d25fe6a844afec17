#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace latwalk {

enum class ErrorCode {
  InvalidArgument,
  NonProbability,
  DegenerateSupport,
  SingularCovariance,
  GeneratesLattice,
  EmptyAnnulus,
  BudgetExceeded,
  PeriodicWalk,
  InsufficientSamples,
  DomainTooLarge,
  SolverFailure,
  KernelAccuracyInsufficient,
  MissingValue,
  CapExceeded,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception; `code()` identifies the failure class named in the
/// module contracts (e.g. EmptyAnnulus, SolverFailure).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace latwalk
