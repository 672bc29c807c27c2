#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "oodspec/stats.hpp"

namespace oodspec {

struct GmmFit {
    int k = 0;
    std::vector<double> weights;    // nonnegative, sum to 1
    std::vector<double> means;      // canonical form: sorted descending
    std::vector<double> variances;  // >= variance floor
    double log_likelihood = 0.0;
    int n_iterations = 0;
    bool converged = false;
};

// Univariate EM, best of `restarts` runs (first restart is deterministic
// quantile init, the rest jitter it). Canonicalizes components by
// descending mean. Throws too_few_points / non_finite_data.
GmmFit fit_gmm_1d(std::span<const double> data, int k, std::uint64_t seed,
                  int restarts = 10);

struct ModelCandidate {
    int k = 0;
    GmmFit fit;
    double bic = 0.0;
    double aicc = 0.0;
};

struct ModelSelection {
    std::vector<ModelCandidate> candidates;
    int best_bic_k = 0;
    int best_aicc_k = 0;
    bool criteria_agree = true;
    std::vector<int> skipped_k;  // k values where AICc is undefined (n <= p+1)
    std::vector<std::string> warnings;
};

// Scans k in [k_min, k_max]; p = 3k-1 free parameters per candidate;
// best_*_k minimize their criterion. BIC is authoritative on disagreement
// (warning recorded). Throws too_few_points when data length <= max k.
ModelSelection select_model(std::span<const double> data, int k_min, int k_max,
                            std::uint64_t seed, int restarts = 10);

struct RegimeAssignment {
    // Regime labels ordered by descending component mean; for k=4 these are
    // the canonical names, otherwise regime_1..regime_k.
    std::vector<std::string> regimes;
    std::vector<double> component_means;  // same order as `regimes`
    std::map<std::string, std::string> assignment;  // condition_id -> regime
    std::map<std::string, std::vector<double>> responsibilities;
    std::vector<double> boundaries;  // posterior crossover points, decreasing
};

// Posterior component probabilities at x (sums to 1).
std::vector<double> posterior(const GmmFit& fit, double x);

RegimeAssignment assign_regimes(const GmmFit& fit,
                                const std::vector<OODScore>& scores);

struct SpectrumOptions {
    int k_min = 1;
    int k_max = 6;
    int restarts = 10;
    std::uint64_t seed = 0;
};

struct SpectrumResult {
    std::vector<OODScore> scores;  // one per condition, references included
    double reference_mean = 0.0;   // pooled baseline, logit scale
    double reference_sd = 0.0;
    long n_reference_values = 0;
    std::vector<std::string> reference_condition_ids;
    ModelSelection selection;
    GmmFit fit;  // the best_bic_k fit
    RegimeAssignment regimes;
    std::vector<std::string> warnings;
    SpectrumOptions options_used;
};

// Full spectrum construction from human response sets: per-condition
// per-system accuracies -> empirical logits -> standardized shift against the
// pooled reference -> mixture fit/selection -> regime assignment.
// Model systems in `sets` are ignored. Throws degenerate_reference /
// too_few_points / empty_sample as appropriate.
SpectrumResult build_spectrum(const ResponseSetMap& sets,
                              const AnalysisConfig& config,
                              const SpectrumOptions& options = {});

}  // namespace oodspec
