#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oodspec/metrics.hpp"
#include "oodspec/spectrum.hpp"

namespace oodspec {

struct AlignmentRecord {
    Condition condition;
    std::string system_a, system_b;  // system_a < system_b lexicographically
    SystemKind kind_a = SystemKind::model, kind_b = SystemKind::model;
    std::optional<double> ec;
    std::optional<double> ma;
    std::optional<double> cled;  // pairwise, same stimulus set
    long n_trials = 0;           // EC basis
    long n_joint_errors = 0;     // MA basis
    long n_errors = 0;           // CLED basis: errors of a + errors of b
};

struct PairwiseOptions {
    double alpha = 0.5;  // CLED prior
};

struct PairwiseResult {
    std::vector<AlignmentRecord> records;
    long skipped_non_comparable = 0;
};

// EC/MA/CLED for every unordered pair of systems in one condition.
// Non-comparable pairs are skipped and counted, not fatal.
PairwiseResult pairwise_alignment(const std::vector<const ResponseSet*>& sets,
                                  const std::map<std::string, SystemInfo>& roster,
                                  const CategorySet& categories,
                                  const PairwiseOptions& options = {});

struct AlignmentRatio {
    std::string model_id;
    Condition condition;
    double rho = 0.0;      // a_model / a_human
    double a_model = 0.0;  // mean over human partners of per-pair mean(EC, MA)
    double a_human = 0.0;  // same aggregation over human-human pairs
    std::optional<double> rho_ec;  // per-metric ratios when both sides defined
    std::optional<double> rho_ma;
    long excluded_model_cells = 0;  // undefined metric cells left out
    long excluded_human_cells = 0;
};

// model_records: this model's model-human records for the condition;
// human_records: the condition's human-human records. Pair value = mean of
// that pair's defined metric cells; pairs with no defined cell are excluded.
// Throws no_defined_cells / zero_human_baseline.
AlignmentRatio alignment_ratio(const std::vector<AlignmentRecord>& model_records,
                               const std::vector<AlignmentRecord>& human_records,
                               const std::string& model_id,
                               const Condition& condition);

struct RankedModel {
    std::string model_id;
    double rho_bar = 0.0;  // mean rho over the regime's representative conditions
    double sd = 0.0;       // dispersion across those conditions (0 if single)
    int n_conditions = 0;
    bool tied = false;  // shares rho_bar with a neighbor (lexicographic order)
};

struct RegimeRanking {
    std::string regime;
    std::vector<RankedModel> entries;  // descending rho_bar
    std::vector<std::string> missing_models;  // no defined ratio in regime
};

// Rankings per regime label present in `ratios_by_regime`. Models missing
// from a regime are listed, not dropped silently.
std::vector<RegimeRanking> rank_models(
    const std::map<std::string, std::vector<AlignmentRatio>>& ratios_by_regime,
    const std::vector<std::string>& all_model_ids);

struct AlignmentVector {
    std::string model_id;
    std::vector<double> values;  // roster x {EC, MA}, roster-major
    long imputed = 0;            // entries filled with the vector's own mean
};

// Fixed-roster profile of one model's mean-over-human-partner EC and MA per
// roster condition. Missing/undefined entries are imputed with the mean of
// the model's defined entries. Throws empty_roster / no_defined_cells.
AlignmentVector alignment_vector(const std::string& model_id,
                                 const std::vector<AlignmentRecord>& records,
                                 const std::vector<std::string>& roster);

struct DistanceMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> values;  // symmetric, zero diagonal
};

DistanceMatrix euclidean_distances(const std::vector<AlignmentVector>& vectors);

struct PermutationResult {
    double observed = 0.0;
    double null_mean = 0.0;
    double null_sd = 0.0;
    double p_value = 1.0;
    double effect_size = 0.0;  // (observed - null_mean)/null_sd
    int n_permutations = 0;
    std::uint64_t seed = 0;
};

enum class PermutationLevel { within_vs_across };

// Observed statistic: mean(across-group distances) - mean(within-group
// distances); null by shuffling group labels; one-tailed upper p with the
// add-one rule. Throws no_within_pairs.
PermutationResult family_permutation_test(
    const DistanceMatrix& distances,
    const std::map<std::string, std::string>& grouping, int n_perm,
    std::uint64_t seed, PermutationLevel level = PermutationLevel::within_vs_across);

struct SeparabilityResult {
    double cohens_d = 0.0;  // within vs between; negative = coherent groups
    PermutationResult permutation;  // one-tailed lower on D
    long n_within = 0;
    long n_between = 0;
};

// Cohen's D between within-group and between-group distance values, with a
// label-shuffling permutation test (direction: more negative = stronger).
SeparabilityResult cled_group_separability(
    const DistanceMatrix& cled_matrix,
    const std::map<std::string, std::string>& grouping, int n_perm,
    std::uint64_t seed);

struct FamilyRankComparison {
    std::string family_a, family_b;
    double median_a = 0.0, median_b = 0.0;
    TestResult test;       // two-sided Mann-Whitney on per-model rho_bar
    std::string relation;  // ">" when p < 0.01 and median_a higher, else ">="
};

// All family pairs, ordered by descending median. Throws family_too_small
// unless >= 2 families have >= 2 models each.
std::vector<FamilyRankComparison> superfamily_rank_test(
    const std::map<std::string, std::vector<double>>& ratios_by_family);

struct RepresentativeEntry {
    std::string distortion_type;
    std::string regime;
    std::string condition_id;
    double delta = 0.0;
    bool tied = false;  // equidistant alternative existed
};

struct Representatives {
    std::vector<RepresentativeEntry> entries;
    std::vector<std::string> notes;  // absent (type, regime) combinations
};

// Per (distortion type, regime): the condition whose delta lies nearest the
// regime's component mean; ties go to the lexicographically smaller level
// token and are flagged.
Representatives select_representatives(const RegimeAssignment& regimes,
                                       const std::vector<OODScore>& scores);

}  // namespace oodspec
