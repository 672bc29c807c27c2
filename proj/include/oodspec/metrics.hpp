#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "oodspec/ingest.hpp"

namespace oodspec {

// "Undefined" is a first-class metric outcome (never NaN): the value is
// absent and `reason` says why. Aggregations exclude undefined cells and
// report how many were excluded.
enum class UndefinedReason {
    none,
    degenerate_expectation,  // chance agreement = 1, kappa denominator 0
    no_joint_errors,         // no trials where both systems erred
    no_errors,               // neither system made any error at all
};

std::string_view undefined_reason_name(UndefinedReason reason);

// Chance-corrected agreement in trial-level correctness (binary kappa).
struct EcBreakdown {
    long n = 0;    // comparable trials
    long n_c = 0;  // jointly correct (same trial, both match the target)
    long n_e = 0;  // jointly incorrect (both wrong, labels irrelevant)
    double p_a = 0.0, p_b = 0.0;   // marginal accuracies
    double p_obs = 0.0, p_exp = 0.0;
    std::optional<double> ec;
    UndefinedReason reason = UndefinedReason::none;
};

// Chance-corrected agreement on predicted labels over jointly misclassified
// trials (multiclass kappa on the joint-error agreement matrix).
struct MaBreakdown {
    long n_err = 0;  // jointly misclassified trials
    std::vector<std::vector<long>> agreement_matrix;  // C x C, sums to n_err
    double p_o_tilde = 0.0, p_e_tilde = 0.0;
    std::optional<double> ma;
    UndefinedReason reason = UndefinedReason::none;
};

// Per-system error tally: matrix[i][j] counts trials with true class i
// predicted as j != i; the diagonal is structurally zero.
struct ErrorConfusion {
    std::vector<std::vector<long>> matrix;  // C x C, zero diagonal
    std::vector<long> per_class_errors;     // row sums
    long total_errors = 0;
};

// Error-weighted Jensen-Shannon divergence between two systems' per-class
// Dirichlet-smoothed error distributions (base-2 logs; in [0,1]).
struct CledResult {
    std::optional<double> cled;
    std::vector<double> per_class_jsd;  // per true class
    std::vector<double> weights;        // error-mass weights, sum to 1
    double alpha = 0.5;
    UndefinedReason reason = UndefinedReason::none;
};

// Throws non_comparable unless comparable(a, b).
EcBreakdown error_consistency(const ResponseSet& a, const ResponseSet& b);

MaBreakdown misclassification_agreement(const ResponseSet& a,
                                        const ResponseSet& b,
                                        const CategorySet& categories);

ErrorConfusion error_confusion(const ResponseSet& a,
                               const CategorySet& categories);

// alpha > 0 is the Dirichlet prior concentration (0.5 = Jeffreys default).
CledResult cled(const ErrorConfusion& a, const ErrorConfusion& b,
                double alpha = 0.5);

}  // namespace oodspec
