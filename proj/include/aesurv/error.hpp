#pragma once

#include <stdexcept>
#include <string>

namespace aesurv {

enum class ErrorCode {
    malformed_row,
    duplicate_subject,
    non_positive_time,
    exposure_exceeds_time,
    empty_dataset,
    empty_group,
    target_in_competing_set,
    zero_person_time,
    both_hazards_zero,
    no_target_events,
    non_convergence,
    strategy_data_mismatch,
    empty_input,
    fewer_than_two_studies,
    quadrature_underflow,
    empty_table,
    invalid_argument,
    usage_error,
    io_error,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::malformed_row: return "malformed_row";
        case ErrorCode::duplicate_subject: return "duplicate_subject";
        case ErrorCode::non_positive_time: return "non_positive_time";
        case ErrorCode::exposure_exceeds_time: return "exposure_exceeds_time";
        case ErrorCode::empty_dataset: return "empty_dataset";
        case ErrorCode::empty_group: return "empty_group";
        case ErrorCode::target_in_competing_set: return "target_in_competing_set";
        case ErrorCode::zero_person_time: return "zero_person_time";
        case ErrorCode::both_hazards_zero: return "both_hazards_zero";
        case ErrorCode::no_target_events: return "no_target_events";
        case ErrorCode::non_convergence: return "non_convergence";
        case ErrorCode::strategy_data_mismatch: return "strategy_data_mismatch";
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::fewer_than_two_studies: return "fewer_than_two_studies";
        case ErrorCode::quadrature_underflow: return "quadrature_underflow";
        case ErrorCode::empty_table: return "empty_table";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::usage_error: return "usage_error";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

/// Library-wide exception. Carries a machine-checkable code next to the
/// human-readable message so callers can branch without string matching.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace aesurv
