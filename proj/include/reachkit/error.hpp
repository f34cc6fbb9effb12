#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reachkit {

enum class ErrorCode {
  InfeasibleFace,
  DegenerateNormal,
  NumericRange,
  EmptyPolyhedron,
  Unbounded2D,
  Empty2D,
  TooFewPoints,
  DimMismatch,
  DimUnsupported,
  NonFiniteState,
  UnboundedFace,
  EmptyBoundary,
  StepTooCoarse,
  PreconditionViolated,
  AssumptionA2Violated,
  BadDeltaOrder,
  DenominatorAllDegenerate,
  Unsupported,
  Parse,
  Model,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code drives CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reachkit
