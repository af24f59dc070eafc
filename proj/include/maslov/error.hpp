#pragma once

#include <stdexcept>
#include <string>

namespace maslov {

enum class ErrorKind {
  InvalidArgument,        // shape / dimension / malformed input
  HypothesisViolation,    // (H1)-(H3) or essential-spectrum gate
  SteadyStateResidual,    // pulse is not a steady state
  IntegrationFailure,     // step underflow, Lagrangian drift
  MonotonicityViolated,   // crossing form not positive definite
  ConsistencyFailure,     // index identities or cross-checks disagree
  NonStabilization,       // doubling loops did not settle
  Precondition,           // caller contract not met
};

const char* to_string(ErrorKind kind) noexcept;

/// Structured error carried through the pipeline; the CLI maps `kind` to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace maslov
