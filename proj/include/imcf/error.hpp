#pragma once

#include <stdexcept>
#include <string>

namespace imcf {

// Every failure mode in the library carries one of these codes; the CLI maps
// them onto its exit-status contract (validation/config -> 3, runtime -> 2).
enum class ErrorCode {
    // parameter validation
    DIMENSION_TOO_SMALL,
    LAMBDA_OUT_OF_RANGE,
    MU_NONNEGATIVE,
    NONFINITE_INPUT,
    H0_OUT_OF_RANGE,
    // dynamics guards
    SINGULAR_DENOMINATOR,
    NONPOSITIVE_RADIUS,
    LIMIT_BRANCH_MISUSE,
    // integration
    STEP_UNDERFLOW,
    INTERPOLANT_GAP,
    // solver pipelines
    SUPPORT_FUNCTION_VIOLATION,
    EVENT_NOT_FOUND,
    MULTIPLE_EVENTS,
    TAIL_TOO_SHORT,
    // verification
    PROFILE_TOO_SHORT,
    NO_OVERLAP,
    BAD_LADDER,
    // CLI / config
    UNKNOWN_KEY,
    TYPE_MISMATCH,
    MISSING_REQUIRED,
    IO_FAILURE,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace imcf
