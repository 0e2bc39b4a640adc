#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mudikit {

enum class ErrorCode {
  parameter,
  degenerate_size,
  empty_mask,
  does_not_fit,
  pool_exhausted,
  contract,
  validation,
  format,
  bad_magic,
  version_mismatch,
  truncated,
  non_finite,
  metadata,
  strict_schema,
  statistic_undefined,
  schedule,
  determinism,
  io,
};

std::string_view to_string(ErrorCode code);

// Validation-class errors are caused by bad user input; the CLI maps them to
// exit code 1 and everything else to 2.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace mudikit
