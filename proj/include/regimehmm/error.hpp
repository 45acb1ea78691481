#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace regimehmm {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    nonfinite_input,
    degenerate_input,
    io_failure,
    parse_failure,
    schema_mismatch,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// All library failures surface as Error; the CLI turns them into a
// machine-readable record and a nonzero exit code.
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

}  // namespace regimehmm
