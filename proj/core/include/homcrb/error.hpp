#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace homcrb {

enum class ErrorCode {
  Dimension,
  NotInAlgebra,
  NearCutLocus,
  Domain,
  BasisClosure,
  Evaluation,
  Subalgebra,
  DegenerateSeed,
  NotReductive,
  LiftFailure,
  CutLocus,
  UnsupportedMethod,
  DegenerateModel,
  Divergence,
  Shape,
  Config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code lets the
/// CLI map failures onto exit statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace homcrb
