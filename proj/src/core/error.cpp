#include "core/error.hpp"

namespace funres {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::UnknownColumn: return "unknown column";
    case ErrorCode::RankDeficient: return "rank-deficient design";
    case ErrorCode::Separation: return "separation";
    case ErrorCode::NotConverged: return "not converged";
    case ErrorCode::UnsupportedFamily: return "unsupported family";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::EmptyInput: return "empty input";
    case ErrorCode::UnknownScenario: return "unknown scenario";
  }
  return "unknown error";
}

}  // namespace funres
