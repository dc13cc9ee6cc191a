#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace epa {

enum class ErrorCode {
  InvalidArgument,
  ShapeMismatch,
  OutOfRange,
  Format,
  Io,
  Degenerate,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code lets callers (and tests)
/// distinguish the failure class without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace epa
