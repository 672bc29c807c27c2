#include "oodspec/error.hpp"

namespace oodspec {

std::string_view errc_name(errc code) {
    switch (code) {
        case errc::io_error: return "io_error";
        case errc::invalid_config: return "invalid_config";
        case errc::missing_column: return "missing_column";
        case errc::invalid_value: return "invalid_value";
        case errc::unknown_category: return "unknown_category";
        case errc::duplicate_trial: return "duplicate_trial";
        case errc::empty_file: return "empty_file";
        case errc::domain_error: return "domain_error";
        case errc::empty_sample: return "empty_sample";
        case errc::degenerate_sample: return "degenerate_sample";
        case errc::sample_too_small: return "sample_too_small";
        case errc::degenerate_reference: return "degenerate_reference";
        case errc::too_few_points: return "too_few_points";
        case errc::non_finite_data: return "non_finite_data";
        case errc::aicc_undefined: return "aicc_undefined";
        case errc::non_comparable: return "non_comparable";
        case errc::zero_human_baseline: return "zero_human_baseline";
        case errc::no_defined_cells: return "no_defined_cells";
        case errc::empty_roster: return "empty_roster";
        case errc::model_missing_regime_data: return "model_missing_regime_data";
        case errc::no_within_pairs: return "no_within_pairs";
        case errc::family_too_small: return "family_too_small";
        case errc::invalid_kernel: return "invalid_kernel";
        case errc::missing_artifact: return "missing_artifact";
    }
    return "unknown";
}

bool is_input_error(errc code) {
    switch (code) {
        case errc::io_error:
        case errc::invalid_config:
        case errc::missing_column:
        case errc::invalid_value:
        case errc::unknown_category:
        case errc::duplicate_trial:
        case errc::empty_file:
        case errc::invalid_kernel:
        case errc::missing_artifact:
            return true;
        default:
            return false;
    }
}

}  // namespace oodspec
