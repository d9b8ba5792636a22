#pragma once

#include <stdexcept>
#include <string>

namespace stvar {

enum class ErrorCode {
  // data errors
  EmptySeries,
  EmptyData,
  ZeroVariance,
  MalformedHeader,
  DimensionMismatch,
  ShortRead,
  LengthMismatch,
  GridMismatch,
  UnlabeledDate,
  InvalidSpec,
  InvalidConfig,
  MissingInput,
  // numerical errors
  SingularDesign,
  NonPDSigma,
  NonPDScale,
  InsufficientDf,
  NonPositiveDecay,
  IllConditioned,
  DegenerateDistances,
  DegenerateDraws,
  NonFiniteUpdate,
};

const char* to_string(ErrorCode code);

/// True for codes caused by the numerics rather than by malformed input.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace stvar
