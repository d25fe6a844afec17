#include "latwalk/error.hpp"

namespace latwalk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonProbability: return "NonProbability";
    case ErrorCode::DegenerateSupport: return "DegenerateSupport";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::GeneratesLattice: return "GeneratesLattice";
    case ErrorCode::EmptyAnnulus: return "EmptyAnnulus";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::PeriodicWalk: return "PeriodicWalk";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DomainTooLarge: return "DomainTooLarge";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::KernelAccuracyInsufficient: return "KernelAccuracyInsufficient";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace latwalk
