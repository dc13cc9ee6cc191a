#include "epa/error.hpp"

namespace epa {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::ShapeMismatch: return "shape mismatch";
    case ErrorCode::OutOfRange: return "out of range";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Degenerate: return "degenerate input";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown error";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace epa
