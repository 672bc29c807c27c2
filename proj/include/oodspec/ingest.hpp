#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oodspec/error.hpp"

namespace oodspec {

enum class SystemKind { human, model };

std::string_view system_kind_name(SystemKind kind);
SystemKind parse_system_kind(const std::string& token);

struct Condition {
    std::string distortion_type;
    std::string distortion_level;

    std::string id() const { return distortion_type + "_" + distortion_level; }

    friend bool operator==(const Condition&, const Condition&) = default;
    friend auto operator<=>(const Condition&, const Condition&) = default;
};

struct TrialRecord {
    std::string system_id;
    SystemKind system_kind = SystemKind::model;
    std::string family;     // superfamily, e.g. CNN / ViT / VLM; empty = unset
    std::string subfamily;  // e.g. VGG, ResNet; empty = unset
    std::string distortion_type;
    std::string distortion_level;
    std::string image_id;
    std::string true_category;
    std::string response_category;
    std::string session_id;  // empty = unset
    std::optional<long> trial_index;

    Condition condition() const { return {distortion_type, distortion_level}; }
};

struct TrialTable {
    std::vector<TrialRecord> rows;
};

struct ResponsePair {
    std::string image_id;
    std::string true_category;
    std::string response_category;

    bool correct() const { return true_category == response_category; }
};

struct ResponseSet {
    std::string system_id;
    SystemKind kind = SystemKind::model;
    Condition condition;
    std::vector<ResponsePair> pairs;  // sorted by image_id for determinism

    std::size_t n() const { return pairs.size(); }
    std::size_t correct_count() const;
    double accuracy() const;
};

// Two sets are comparable when they cover the identical multiset of
// (image_id, true_category) stimuli; all pairwise metrics require this.
bool comparable(const ResponseSet& a, const ResponseSet& b);

// Declared label set with stable index lookup; order fixes matrix layouts.
struct CategorySet {
    std::vector<std::string> labels;

    explicit CategorySet(std::vector<std::string> category_labels = {});
    std::size_t size() const { return labels.size(); }
    int index_of(const std::string& label) const;  // -1 when absent
    int require(const std::string& label) const;   // throws unknown_category

  private:
    std::map<std::string, int> index_;
};

// The 16 entry-level labels used when a config does not declare its own set.
std::vector<std::string> default_categories();

struct FamilyInfo {
    std::string superfamily;
    std::string subfamily;
};

// Analysis-side declarations: category set, per-distortion-type reference
// level, and the model family taxonomy.
struct AnalysisConfig {
    std::vector<std::string> categories = default_categories();
    // distortion_type -> level token of its undistorted reference condition.
    // Types absent from this map have no in-type baseline and are scored
    // against the pooled reference only.
    std::map<std::string, std::string> references;
    std::map<std::string, FamilyInfo> families;  // system_id -> taxonomy

    bool is_reference(const Condition& c) const;
    std::vector<Condition> reference_conditions() const;
};

enum class TrialFormat { canonical, modelvshuman_raw };

TrialFormat parse_trial_format(const std::string& token);

// Parses one trials file. Throws missing_column / unknown_category /
// duplicate_trial / empty_file / invalid_value / io_error.
TrialTable parse_trials(const std::string& path, TrialFormat format,
                        const AnalysisConfig& config);

// Serializes to the canonical CSV column set; parse(write(t)) == t.
void write_trials(const TrialTable& table, const std::string& path);

using SetKey = std::pair<std::string, std::string>;  // (system_id, condition_id)
using ResponseSetMap = std::map<SetKey, ResponseSet>;

ResponseSetMap build_response_sets(const TrialTable& table);

struct SystemInfo {
    SystemKind kind = SystemKind::model;
    std::string family;
    std::string subfamily;
    long n_trials = 0;
};

// Distinct systems with kind/family resolved from the rows (config taxonomy
// fills families the rows leave empty). Throws invalid_value when one
// system_id appears with conflicting kinds.
std::map<std::string, SystemInfo> system_roster(const TrialTable& table,
                                                const AnalysisConfig& config);

enum class Severity { error, warning, info };

std::string_view severity_name(Severity severity);

struct Finding {
    Severity severity;
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;
    long n_rows = 0;
    long n_systems = 0;
    long n_humans = 0;
    long n_models = 0;
    long n_conditions = 0;
    // condition_id -> (system_id -> trial count)
    std::map<std::string, std::map<std::string, long>> per_condition_counts;

    bool ok() const;  // no error-severity findings
};

ValidationReport validate(const TrialTable& table, const AnalysisConfig& config);

// Loads { categories, references, families } from a JSON config file/text;
// missing keys fall back to defaults. Throws invalid_config on shape errors.
AnalysisConfig analysis_config_from_json_text(const std::string& text);
AnalysisConfig analysis_config_from_json_file(const std::string& path);

}  // namespace oodspec
