#include "oodspec/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oodspec/csv.hpp"

namespace oodspec {

namespace {

const char* const kCanonicalColumns[] = {
    "system_id",      "system_kind",      "family",
    "subfamily",      "distortion_type",  "distortion_level",
    "image_id",       "true_category",    "response_category",
    "session_id",     "trial_index",
};

// Raw benchmark session files are named like "<type>_subject-xx_session_n.csv";
// model files like "<type>_<model>_....csv". The part before "_subject" (or,
// failing that, before the first underscore) names the distortion type.
std::string distortion_type_from_filename(const std::string& path) {
    std::string base = path;
    auto slash = base.find_last_of("/\\");
    if (slash != std::string::npos) base = base.substr(slash + 1);
    auto dot = base.rfind('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    auto subj = base.find("_subject");
    if (subj != std::string::npos) return base.substr(0, subj);
    auto us = base.find('_');
    if (us != std::string::npos) return base.substr(0, us);
    return base;
}

long parse_long(const std::string& token, const std::string& context) {
    try {
        std::size_t pos = 0;
        long value = std::stol(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        fail(errc::invalid_value, context + ": not an integer: '" + token + "'");
    }
}

void check_categories(const TrialRecord& record, const CategorySet& categories,
                      const std::string& context) {
    if (categories.index_of(record.true_category) < 0) {
        fail(errc::unknown_category,
             context + ": true_category '" + record.true_category +
                 "' outside the declared category set");
    }
    if (categories.index_of(record.response_category) < 0) {
        fail(errc::unknown_category,
             context + ": response_category '" + record.response_category +
                 "' outside the declared category set");
    }
}

void check_duplicates(const TrialTable& table, const std::string& context) {
    std::set<std::tuple<std::string, std::string, std::string, std::string,
                        std::string, long>> seen;
    for (const auto& r : table.rows) {
        auto key = std::make_tuple(r.system_id, r.distortion_type,
                                   r.distortion_level, r.image_id, r.session_id,
                                   r.trial_index.value_or(-1));
        if (!seen.insert(key).second) {
            fail(errc::duplicate_trial,
                 context + ": duplicate trial for system '" + r.system_id +
                     "', condition '" + r.condition().id() + "', image '" +
                     r.image_id + "', session '" + r.session_id + "'");
        }
    }
}

TrialTable parse_canonical(const csv::Table& table, const std::string& path,
                           const CategorySet& categories) {
    int cols[std::size(kCanonicalColumns)];
    for (std::size_t i = 0; i < std::size(kCanonicalColumns); ++i) {
        cols[i] = table.column(kCanonicalColumns[i]);
        if (cols[i] < 0) {
            fail(errc::missing_column,
                 path + ": missing column '" + kCanonicalColumns[i] + "'");
        }
    }
    TrialTable out;
    out.rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::string context = path + ":" + std::to_string(r + 2);
        TrialRecord rec;
        rec.system_id = row[cols[0]];
        rec.system_kind = parse_system_kind(row[cols[1]]);
        rec.family = row[cols[2]];
        rec.subfamily = row[cols[3]];
        rec.distortion_type = row[cols[4]];
        rec.distortion_level = row[cols[5]];
        rec.image_id = row[cols[6]];
        rec.true_category = row[cols[7]];
        rec.response_category = row[cols[8]];
        rec.session_id = row[cols[9]];
        const std::string& trial_tok = row[cols[10]];
        if (!trial_tok.empty()) rec.trial_index = parse_long(trial_tok, context);
        if (rec.system_id.empty())
            fail(errc::invalid_value, context + ": empty system_id");
        if (rec.distortion_type.empty())
            fail(errc::invalid_value, context + ": empty distortion_type");
        if (rec.image_id.empty())
            fail(errc::invalid_value, context + ": empty image_id");
        check_categories(rec, categories, context);
        out.rows.push_back(std::move(rec));
    }
    return out;
}

TrialTable parse_modelvshuman(const csv::Table& table, const std::string& path,
                              const CategorySet& categories,
                              const AnalysisConfig& config) {
    const char* needed[] = {"subj",     "session",   "trial",
                            "object_response", "category", "condition",
                            "imagename"};
    int cols[std::size(needed)];
    for (std::size_t i = 0; i < std::size(needed); ++i) {
        cols[i] = table.column(needed[i]);
        if (cols[i] < 0)
            fail(errc::missing_column, path + ": missing column '" +
                                           std::string(needed[i]) + "'");
    }
    std::string fallback_type = distortion_type_from_filename(path);
    TrialTable out;
    out.rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::string context = path + ":" + std::to_string(r + 2);
        TrialRecord rec;
        rec.system_id = row[cols[0]];
        if (rec.system_id.empty())
            fail(errc::invalid_value, context + ": empty subj");
        rec.system_kind = rec.system_id.rfind("subject-", 0) == 0
                              ? SystemKind::human
                              : SystemKind::model;
        auto fam = config.families.find(rec.system_id);
        if (fam != config.families.end()) {
            rec.family = fam->second.superfamily;
            rec.subfamily = fam->second.subfamily;
        }
        // Condition tokens are either "<type>_<level>" or a bare level whose
        // type comes from the filename.
        const std::string& token = row[cols[5]];
        auto us = token.find('_');
        if (us != std::string::npos) {
            rec.distortion_type = token.substr(0, us);
            rec.distortion_level = token.substr(us + 1);
        } else {
            rec.distortion_type = fallback_type;
            rec.distortion_level = token;
        }
        rec.image_id = row[cols[6]];
        rec.true_category = row[cols[4]];
        rec.response_category = row[cols[3]];
        rec.session_id = row[cols[1]];
        const std::string& trial_tok = row[cols[2]];
        if (!trial_tok.empty()) rec.trial_index = parse_long(trial_tok, context);
        check_categories(rec, categories, context);
        out.rows.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

std::string_view system_kind_name(SystemKind kind) {
    return kind == SystemKind::human ? "human" : "model";
}

SystemKind parse_system_kind(const std::string& token) {
    if (token == "human") return SystemKind::human;
    if (token == "model") return SystemKind::model;
    fail(errc::invalid_value, "unknown system_kind '" + token + "'");
}

std::size_t ResponseSet::correct_count() const {
    std::size_t k = 0;
    for (const auto& p : pairs) k += p.correct() ? 1 : 0;
    return k;
}

double ResponseSet::accuracy() const {
    if (pairs.empty()) fail(errc::empty_sample, "accuracy of empty response set");
    return static_cast<double>(correct_count()) / static_cast<double>(n());
}

bool comparable(const ResponseSet& a, const ResponseSet& b) {
    if (a.pairs.size() != b.pairs.size()) return false;
    // Both sides are sorted by (image_id, ...) at construction, so the
    // stimulus multisets agree iff they agree positionally.
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        if (a.pairs[i].image_id != b.pairs[i].image_id ||
            a.pairs[i].true_category != b.pairs[i].true_category)
            return false;
    }
    return true;
}

CategorySet::CategorySet(std::vector<std::string> category_labels)
    : labels(std::move(category_labels)) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = index_.emplace(labels[i], static_cast<int>(i));
        if (!inserted)
            fail(errc::invalid_config, "duplicate category label '" + labels[i] + "'");
    }
}

int CategorySet::index_of(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
}

int CategorySet::require(const std::string& label) const {
    int idx = index_of(label);
    if (idx < 0)
        fail(errc::unknown_category, "unknown category '" + label + "'");
    return idx;
}

std::vector<std::string> default_categories() {
    return {"airplane", "bear",  "bicycle", "bird",  "boat",     "bottle",
            "car",      "cat",   "chair",   "clock", "dog",      "elephant",
            "keyboard", "knife", "oven",    "truck"};
}

bool AnalysisConfig::is_reference(const Condition& c) const {
    auto it = references.find(c.distortion_type);
    return it != references.end() && it->second == c.distortion_level;
}

std::vector<Condition> AnalysisConfig::reference_conditions() const {
    std::vector<Condition> out;
    out.reserve(references.size());
    for (const auto& [type, level] : references) out.push_back({type, level});
    return out;
}

TrialFormat parse_trial_format(const std::string& token) {
    if (token == "canonical") return TrialFormat::canonical;
    if (token == "modelvshuman") return TrialFormat::modelvshuman_raw;
    fail(errc::invalid_config, "unknown trial format '" + token +
                                   "' (expected canonical|modelvshuman)");
}

TrialTable parse_trials(const std::string& path, TrialFormat format,
                        const AnalysisConfig& config) {
    csv::Table raw = csv::read_file(path);
    if (raw.rows.empty()) fail(errc::empty_file, path + ": no data rows");
    CategorySet categories(config.categories);
    TrialTable table = format == TrialFormat::canonical
                           ? parse_canonical(raw, path, categories)
                           : parse_modelvshuman(raw, path, categories, config);
    check_duplicates(table, path);
    return table;
}

void write_trials(const TrialTable& table, const std::string& path) {
    csv::Table out;
    out.header.assign(std::begin(kCanonicalColumns), std::end(kCanonicalColumns));
    out.rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        out.rows.push_back({r.system_id,
                            std::string(system_kind_name(r.system_kind)),
                            r.family, r.subfamily, r.distortion_type,
                            r.distortion_level, r.image_id, r.true_category,
                            r.response_category, r.session_id,
                            r.trial_index ? std::to_string(*r.trial_index)
                                          : std::string()});
    }
    csv::write_file(path, out);
}

ResponseSetMap build_response_sets(const TrialTable& table) {
    ResponseSetMap sets;
    for (const auto& r : table.rows) {
        SetKey key{r.system_id, r.condition().id()};
        auto [it, inserted] = sets.try_emplace(key);
        if (inserted) {
            it->second.system_id = r.system_id;
            it->second.kind = r.system_kind;
            it->second.condition = r.condition();
        }
        it->second.pairs.push_back(
            {r.image_id, r.true_category, r.response_category});
    }
    for (auto& [key, set] : sets) {
        std::sort(set.pairs.begin(), set.pairs.end(),
                  [](const ResponsePair& a, const ResponsePair& b) {
                      if (a.image_id != b.image_id) return a.image_id < b.image_id;
                      if (a.true_category != b.true_category)
                          return a.true_category < b.true_category;
                      return a.response_category < b.response_category;
                  });
    }
    return sets;
}

std::map<std::string, SystemInfo> system_roster(const TrialTable& table,
                                                const AnalysisConfig& config) {
    std::map<std::string, SystemInfo> roster;
    for (const auto& r : table.rows) {
        auto [it, inserted] = roster.try_emplace(r.system_id);
        SystemInfo& info = it->second;
        if (inserted) {
            info.kind = r.system_kind;
            info.family = r.family;
            info.subfamily = r.subfamily;
        } else if (info.kind != r.system_kind) {
            fail(errc::invalid_value, "system '" + r.system_id +
                                          "' appears with conflicting kinds");
        }
        if (info.family.empty()) info.family = r.family;
        if (info.subfamily.empty()) info.subfamily = r.subfamily;
        info.n_trials += 1;
    }
    for (auto& [id, info] : roster) {
        auto it = config.families.find(id);
        if (it != config.families.end()) {
            if (info.family.empty()) info.family = it->second.superfamily;
            if (info.subfamily.empty()) info.subfamily = it->second.subfamily;
        }
    }
    return roster;
}

std::string_view severity_name(Severity severity) {
    switch (severity) {
        case Severity::error: return "error";
        case Severity::warning: return "warning";
        case Severity::info: return "info";
    }
    return "unknown";
}

bool ValidationReport::ok() const {
    return std::none_of(findings.begin(), findings.end(), [](const Finding& f) {
        return f.severity == Severity::error;
    });
}

ValidationReport validate(const TrialTable& table, const AnalysisConfig& config) {
    ValidationReport report;
    report.n_rows = static_cast<long>(table.rows.size());
    if (table.rows.empty()) {
        report.findings.push_back(
            {Severity::error, "empty_table", "trial table has no rows"});
        return report;
    }

    auto roster = system_roster(table, config);
    report.n_systems = static_cast<long>(roster.size());
    for (const auto& [id, info] : roster) {
        (info.kind == SystemKind::human ? report.n_humans : report.n_models) += 1;
    }

    auto sets = build_response_sets(table);
    std::map<std::string, std::vector<const ResponseSet*>> by_condition;
    for (const auto& [key, set] : sets) {
        by_condition[key.second].push_back(&set);
        report.per_condition_counts[key.second][key.first] =
            static_cast<long>(set.n());
    }
    report.n_conditions = static_cast<long>(by_condition.size());

    // Comparability of stimulus sets within each condition.
    for (const auto& [condition_id, members] : by_condition) {
        for (std::size_t i = 0; i + 1 < members.size(); ++i) {
            if (!comparable(*members[i], *members[i + 1])) {
                report.findings.push_back(
                    {Severity::warning, "non_comparable_sets",
                     "condition '" + condition_id + "': systems '" +
                         members[i]->system_id + "' and '" +
                         members[i + 1]->system_id +
                         "' saw different stimulus sets"});
            }
        }
    }

    // Reference coverage per distortion type.
    std::set<std::string> types_seen;
    std::set<std::string> condition_ids;
    for (const auto& [key, set] : sets) {
        types_seen.insert(set.condition.distortion_type);
        condition_ids.insert(key.second);
    }
    for (const auto& type : types_seen) {
        auto it = config.references.find(type);
        if (it == config.references.end()) {
            report.findings.push_back(
                {Severity::info, "no_in_type_reference",
                 "distortion type '" + type +
                     "' declares no reference level; pooled baseline applies"});
        } else if (!condition_ids.count(type + "_" + it->second)) {
            report.findings.push_back(
                {Severity::error, "missing_reference_condition",
                 "declared reference condition '" + type + "_" + it->second +
                     "' has no trials"});
        }
    }

    // Humans are required for every baseline-dependent analysis.
    if (report.n_humans == 0) {
        report.findings.push_back({Severity::warning, "no_human_systems",
                                   "table contains no human systems"});
    }
    return report;
}

namespace {

nlohmann::json parse_json_or_fail(const std::string& text,
                                  const std::string& what) {
    nlohmann::json parsed = nlohmann::json::parse(text, nullptr, false);
    if (parsed.is_discarded())
        fail(errc::invalid_config, what + ": malformed JSON");
    return parsed;
}

}  // namespace

AnalysisConfig analysis_config_from_json_text(const std::string& text) {
    nlohmann::json j = parse_json_or_fail(text, "analysis config");
    if (!j.is_object()) fail(errc::invalid_config, "analysis config: not an object");
    AnalysisConfig config;
    if (j.contains("categories")) {
        if (!j["categories"].is_array() || j["categories"].empty())
            fail(errc::invalid_config, "categories: expected non-empty array");
        config.categories.clear();
        for (const auto& c : j["categories"]) {
            if (!c.is_string())
                fail(errc::invalid_config, "categories: expected strings");
            config.categories.push_back(c.get<std::string>());
        }
    }
    if (j.contains("references")) {
        if (!j["references"].is_object())
            fail(errc::invalid_config, "references: expected object");
        for (const auto& [type, level] : j["references"].items()) {
            if (!level.is_string())
                fail(errc::invalid_config, "references: levels must be strings");
            config.references[type] = level.get<std::string>();
        }
    }
    if (j.contains("families")) {
        if (!j["families"].is_object())
            fail(errc::invalid_config, "families: expected object");
        for (const auto& [id, info] : j["families"].items()) {
            if (!info.is_object())
                fail(errc::invalid_config, "families: entries must be objects");
            FamilyInfo fi;
            fi.superfamily = info.value("superfamily", std::string());
            fi.subfamily = info.value("subfamily", std::string());
            config.families[id] = fi;
        }
    }
    return config;
}

AnalysisConfig analysis_config_from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open config: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return analysis_config_from_json_text(buffer.str());
}

}  // namespace oodspec
