#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oodspec/ingest.hpp"

namespace oodspec {

struct AccuracySample {
    std::vector<double> values;  // accuracies in [0,1]
    std::vector<double> logits;  // empirical logit of each value
    std::vector<long> n_trials_per_value;  // empty when built from logits

    static AccuracySample from_accuracies(const std::vector<double>& values,
                                          const std::vector<long>& n_trials);
    // For callers that already live on the logit scale (values back-filled
    // with the logistic inverse so the two lists stay aligned).
    static AccuracySample from_logits(const std::vector<double>& logits);

    std::size_t size() const { return logits.size(); }
};

struct OODScore {
    Condition condition;
    double delta = 0.0;  // Glass's delta on the logit scale; negative = worse
    double mean_logit_distorted = 0.0;
    double reference_mean = 0.0;
    double reference_sd = 0.0;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::string method;
    std::optional<double> effect_size;
};

enum class Alternative { two_sided, greater, less };

std::string_view alternative_name(Alternative alt);

// Basic sample helpers (ddof=1 for sample_sd/sample_var).
double mean(std::span<const double> x);
double sample_var(std::span<const double> x);
double sample_sd(std::span<const double> x);
double median(std::vector<double> x);  // by value: sorts its copy

// Standard normal tail helpers.
double normal_sf(double z);   // P(Z > z)
double normal_cdf(double z);  // P(Z <= z)

// ln(a'/(1-a')) with a' = (a*n + 0.5)/(n + 1): finite on the closed interval.
double empirical_logit(double a, long n);
double logistic(double logit);

// Standardized mean shift of `distorted` against the reference sample on the
// logit scale. `condition` is carried through to the result untouched.
OODScore glass_delta(const AccuracySample& distorted,
                     const AccuracySample& reference,
                     const Condition& condition = {});

struct MannWhitneyOptions {
    // Exact enumeration of the U null distribution; only valid for small
    // untied samples (throws domain_error on ties or n1+n2 > 25).
    bool exact = false;
};

// Rank-sum test with mid-ranks, tie-corrected variance and continuity
// correction. statistic = U of the first sample.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          Alternative alternative,
                          const MannWhitneyOptions& options = {});

// Exact one-tailed P(X >= k) under Binomial(n, p0), log-space summation.
TestResult binomial_above_chance(long k, long n, double p0);

// Benjamini-Hochberg step-up adjustment; output in input order.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

// Pooled-SD standardized mean difference (mean_a - mean_b)/pooled_sd.
double cohens_d(std::span<const double> a, std::span<const double> b);

struct NormalityOptions {
    std::uint64_t seed = 0;
    int lilliefors_replicates = 10000;
};

// Shapiro-Wilk, D'Agostino-Pearson and Lilliefors results, in that order.
// Requires n >= 8 (throws sample_too_small below that).
std::vector<TestResult> normality_tests(std::span<const double> x,
                                        const NormalityOptions& options = {});

}  // namespace oodspec
