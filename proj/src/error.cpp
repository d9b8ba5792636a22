#include "stvar/error.hpp"

namespace stvar {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShortRead: return "ShortRead";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::UnlabeledDate: return "UnlabeledDate";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NonPDSigma: return "NonPDSigma";
    case ErrorCode::NonPDScale: return "NonPDScale";
    case ErrorCode::InsufficientDf: return "InsufficientDf";
    case ErrorCode::NonPositiveDecay: return "NonPositiveDecay";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::DegenerateDistances: return "DegenerateDistances";
    case ErrorCode::DegenerateDraws: return "DegenerateDraws";
    case ErrorCode::NonFiniteUpdate: return "NonFiniteUpdate";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  return code >= ErrorCode::SingularDesign;
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace stvar
