#include "regimehmm/error.hpp"

namespace regimehmm {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::nonfinite_input: return "nonfinite_input";
        case ErrorCode::degenerate_input: return "degenerate_input";
        case ErrorCode::io_failure: return "io_failure";
        case ErrorCode::parse_failure: return "parse_failure";
        case ErrorCode::schema_mismatch: return "schema_mismatch";
    }
    return "unknown";
}

}  // namespace regimehmm
