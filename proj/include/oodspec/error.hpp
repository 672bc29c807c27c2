#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oodspec {

// Machine-readable failure codes. Every throw site in the library picks one of
// these so callers (and the CLI error reporter) can branch on the condition
// without parsing message text.
enum class errc {
    io_error,
    invalid_config,
    missing_column,
    invalid_value,
    unknown_category,
    duplicate_trial,
    empty_file,
    domain_error,
    empty_sample,
    degenerate_sample,
    sample_too_small,
    degenerate_reference,
    too_few_points,
    non_finite_data,
    aicc_undefined,
    non_comparable,
    zero_human_baseline,
    no_defined_cells,
    empty_roster,
    model_missing_regime_data,
    no_within_pairs,
    family_too_small,
    invalid_kernel,
    missing_artifact,
};

// Stable snake_case token for a code, e.g. errc::missing_column -> "missing_column".
std::string_view errc_name(errc code);

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    errc code() const noexcept { return code_; }
    std::string_view code_name() const noexcept { return errc_name(code_); }

  private:
    errc code_;
};

// True for failures caused by user-supplied inputs (bad files, bad config,
// bad flag values) as opposed to internal invariant violations. The CLI maps
// the former to exit 2 and the latter to exit 1.
bool is_input_error(errc code);

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace oodspec
