#pragma once

#include <map>
#include <string>
#include <vector>

#include "oodspec/analysis.hpp"

namespace oodspec {

// Serialization layer shared by the CLI and the tests. All JSON is emitted
// with sorted keys and no timestamps so repeated runs are byte-identical;
// run metadata (which does carry a timestamp) goes into per-command manifest
// files excluded from determinism comparisons.

// --- JSON report bodies (pretty-printed, trailing newline) ---

std::string spectrum_report_json(const SpectrumResult& spectrum);

// Parses a spectrum report back; used by downstream commands. Throws
// invalid_value on schema violations.
SpectrumResult spectrum_report_from_json_text(const std::string& text);
SpectrumResult spectrum_report_from_file(const std::string& path);

std::string ranking_report_json(
    const std::vector<RegimeRanking>& rankings,
    const std::map<std::string, std::vector<AlignmentRatio>>& ratios_by_regime,
    const Representatives& representatives,
    const std::map<std::string, std::vector<FamilyRankComparison>>&
        family_comparisons_by_regime);

struct PermtestReportEntry {
    std::string name;     // e.g. "superfamily/near-OOD"
    std::string kind;     // "alignment_distance" or "cled_separability"
    std::string grouping;
    std::string scope;    // regime label or "all_conditions"
    PermutationResult result;
    double cohens_d = 0.0;      // separability entries only
    bool has_cohens_d = false;
    long n_within = 0, n_between = 0;
};

std::string permtest_report_json(const std::vector<PermtestReportEntry>& entries);

std::string validation_report_json(const ValidationReport& report);

// --- CSV tables ---

// Metric cells: condition_id,system_a,system_b,metric,value,defined,n_basis
std::string alignment_cells_csv(const std::vector<AlignmentRecord>& records);
std::vector<AlignmentRecord> alignment_cells_from_csv(
    const std::string& path, const std::map<std::string, SystemInfo>& roster);

std::string distance_matrix_csv(const DistanceMatrix& matrix);

// --- SVG plots ---

std::string spectrum_strip_svg(const SpectrumResult& spectrum);
std::string ranking_dot_svg(const std::vector<RegimeRanking>& rankings);

// --- numeric formatting ---

// Shortest round-trip decimal form of x (the formatting used in CSV cells).
std::string format_double(double x);

// --- manifest + file helpers ---

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// FNV-1a fingerprint of the effective run configuration, hex-encoded.
std::string config_fingerprint(const std::string& canonical_config_json);

// Writes manifest_<command>.json: {command, config_hash, seed, outputs,
// generated_at}. The only place a timestamp appears.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_hash, std::uint64_t seed,
                    const std::vector<std::string>& outputs);

}  // namespace oodspec
