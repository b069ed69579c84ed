#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace degrade {

/// Error categories raised across the toolkit. Every failure path maps to
/// exactly one code so callers (and tests) can dispatch without string
/// matching.
enum class Errc {
    // file / stream handling
    file_not_found,
    unsupported_format,
    corrupt_stream,
    io_error,
    // parameter validation
    invalid_quality,
    invalid_kernel,
    invalid_gamma,
    invalid_alpha,
    invalid_parameter,
    dimension_mismatch,
    factor_too_large,
    // plan parsing
    schema_error,
    unknown_operation,
    // external codec subprocess
    codec_spawn_failure,
    codec_protocol_violation,
    codec_nonzero_exit,
    // detector adapter
    detector_timeout,
    protocol_violation,
    missing_score,
    // metrics
    degenerate_class_balance,
    empty_input,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          message_(message) {}

    Errc code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }

private:
    Errc code_;
    std::string message_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace degrade
