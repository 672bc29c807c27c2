#include "oodspec/reports.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oodspec/csv.hpp"
#include "oodspec/rng.hpp"

namespace oodspec {

using nlohmann::json;

std::string format_double(double x) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), x);
    if (ec != std::errc()) fail(errc::domain_error, "format_double failed");
    return std::string(buffer, end);
}

namespace {

std::string fixed2(double x) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.2f", x);
    return buffer;
}

json optional_json(const std::optional<double>& value) {
    if (value) return *value;
    return nullptr;
}

json condition_json(const Condition& condition) {
    return json{{"condition_id", condition.id()},
                {"distortion_type", condition.distortion_type},
                {"distortion_level", condition.distortion_level}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse_or_fail(const std::string& text, const char* what) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded())
        fail(errc::invalid_value, std::string(what) + ": malformed JSON");
    return parsed;
}

}  // namespace

std::string spectrum_report_json(const SpectrumResult& spectrum) {
    json scores = json::array();
    for (const auto& score : spectrum.scores) {
        std::string id = score.condition.id();
        json entry = condition_json(score.condition);
        entry["delta"] = score.delta;
        entry["mean_logit"] = score.mean_logit_distorted;
        entry["regime"] = spectrum.regimes.assignment.at(id);
        entry["posterior"] = spectrum.regimes.responsibilities.at(id);
        scores.push_back(std::move(entry));
    }

    json candidates = json::array();
    for (const auto& c : spectrum.selection.candidates) {
        candidates.push_back({{"k", c.k},
                              {"log_likelihood", c.fit.log_likelihood},
                              {"converged", c.fit.converged},
                              {"bic", c.bic},
                              {"aicc", c.aicc}});
    }

    json report{
        {"reference",
         {{"mean_logit", spectrum.reference_mean},
          {"sd_logit", spectrum.reference_sd},
          {"n_values", spectrum.n_reference_values},
          {"condition_ids", spectrum.reference_condition_ids}}},
        {"scores", scores},
        {"fit",
         {{"k", spectrum.fit.k},
          {"weights", spectrum.fit.weights},
          {"means", spectrum.fit.means},
          {"variances", spectrum.fit.variances},
          {"log_likelihood", spectrum.fit.log_likelihood},
          {"n_iterations", spectrum.fit.n_iterations},
          {"converged", spectrum.fit.converged}}},
        {"selection",
         {{"best_bic_k", spectrum.selection.best_bic_k},
          {"best_aicc_k", spectrum.selection.best_aicc_k},
          {"criteria_agree", spectrum.selection.criteria_agree},
          {"candidates", candidates},
          {"skipped_k", spectrum.selection.skipped_k}}},
        {"regimes",
         {{"labels", spectrum.regimes.regimes},
          {"component_means", spectrum.regimes.component_means},
          {"boundaries", spectrum.regimes.boundaries}}},
        {"warnings", spectrum.warnings},
        {"method",
         {{"initialization", "quantile midpoints, uniform weights, pooled variance"},
          {"assignment", "argmax posterior responsibility"},
          {"criterion_priority", "bic"},
          {"k_min", spectrum.options_used.k_min},
          {"k_max", spectrum.options_used.k_max},
          {"restarts", spectrum.options_used.restarts},
          {"seed", spectrum.options_used.seed}}},
    };
    return dump(report);
}

SpectrumResult spectrum_report_from_json_text(const std::string& text) {
    json j = parse_or_fail(text, "spectrum report");
    SpectrumResult out;
    try {
        const json& ref = j.at("reference");
        out.reference_mean = ref.at("mean_logit").get<double>();
        out.reference_sd = ref.at("sd_logit").get<double>();
        out.n_reference_values = ref.at("n_values").get<long>();
        out.reference_condition_ids =
            ref.at("condition_ids").get<std::vector<std::string>>();

        const json& fit = j.at("fit");
        out.fit.k = fit.at("k").get<int>();
        out.fit.weights = fit.at("weights").get<std::vector<double>>();
        out.fit.means = fit.at("means").get<std::vector<double>>();
        out.fit.variances = fit.at("variances").get<std::vector<double>>();
        out.fit.log_likelihood = fit.at("log_likelihood").get<double>();
        out.fit.n_iterations = fit.at("n_iterations").get<int>();
        out.fit.converged = fit.at("converged").get<bool>();

        const json& sel = j.at("selection");
        out.selection.best_bic_k = sel.at("best_bic_k").get<int>();
        out.selection.best_aicc_k = sel.at("best_aicc_k").get<int>();
        out.selection.criteria_agree = sel.at("criteria_agree").get<bool>();
        out.selection.skipped_k = sel.at("skipped_k").get<std::vector<int>>();
        for (const auto& jc : sel.at("candidates")) {
            ModelCandidate c;
            c.k = jc.at("k").get<int>();
            c.fit.k = c.k;
            c.fit.log_likelihood = jc.at("log_likelihood").get<double>();
            c.fit.converged = jc.at("converged").get<bool>();
            c.bic = jc.at("bic").get<double>();
            c.aicc = jc.at("aicc").get<double>();
            out.selection.candidates.push_back(std::move(c));
        }

        const json& regimes = j.at("regimes");
        out.regimes.regimes = regimes.at("labels").get<std::vector<std::string>>();
        out.regimes.component_means =
            regimes.at("component_means").get<std::vector<double>>();
        out.regimes.boundaries =
            regimes.at("boundaries").get<std::vector<double>>();

        for (const auto& js : j.at("scores")) {
            OODScore score;
            score.condition.distortion_type =
                js.at("distortion_type").get<std::string>();
            score.condition.distortion_level =
                js.at("distortion_level").get<std::string>();
            score.delta = js.at("delta").get<double>();
            score.mean_logit_distorted = js.at("mean_logit").get<double>();
            score.reference_mean = out.reference_mean;
            score.reference_sd = out.reference_sd;
            std::string id = score.condition.id();
            out.regimes.assignment[id] = js.at("regime").get<std::string>();
            out.regimes.responsibilities[id] =
                js.at("posterior").get<std::vector<double>>();
            out.scores.push_back(std::move(score));
        }
        out.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const json::exception& e) {
        fail(errc::invalid_value,
             std::string("spectrum report: schema violation: ") + e.what());
    }
    return out;
}

SpectrumResult spectrum_report_from_file(const std::string& path) {
    return spectrum_report_from_json_text(read_text_file(path));
}

std::string ranking_report_json(
    const std::vector<RegimeRanking>& rankings,
    const std::map<std::string, std::vector<AlignmentRatio>>& ratios_by_regime,
    const Representatives& representatives,
    const std::map<std::string, std::vector<FamilyRankComparison>>&
        family_comparisons_by_regime) {
    json regimes = json::array();
    for (const auto& ranking : rankings) {
        json entries = json::array();
        for (const auto& entry : ranking.entries) {
            entries.push_back({{"model_id", entry.model_id},
                               {"rho_bar", entry.rho_bar},
                               {"sd", entry.sd},
                               {"n_conditions", entry.n_conditions},
                               {"tied", entry.tied}});
        }
        regimes.push_back({{"regime", ranking.regime},
                           {"entries", entries},
                           {"missing_models", ranking.missing_models}});
    }

    json ratios = json::array();
    for (const auto& [regime, regime_ratios] : ratios_by_regime) {
        for (const auto& ratio : regime_ratios) {
            json entry = condition_json(ratio.condition);
            entry["regime"] = regime;
            entry["model_id"] = ratio.model_id;
            entry["rho"] = ratio.rho;
            entry["a_model"] = ratio.a_model;
            entry["a_human"] = ratio.a_human;
            entry["rho_ec"] = optional_json(ratio.rho_ec);
            entry["rho_ma"] = optional_json(ratio.rho_ma);
            entry["excluded_model_cells"] = ratio.excluded_model_cells;
            entry["excluded_human_cells"] = ratio.excluded_human_cells;
            ratios.push_back(std::move(entry));
        }
    }

    json reps = json::array();
    for (const auto& entry : representatives.entries) {
        reps.push_back({{"distortion_type", entry.distortion_type},
                        {"regime", entry.regime},
                        {"condition_id", entry.condition_id},
                        {"delta", entry.delta},
                        {"tied", entry.tied}});
    }

    json comparisons = json::array();
    for (const auto& [regime, regime_comparisons] : family_comparisons_by_regime) {
        for (const auto& comparison : regime_comparisons) {
            comparisons.push_back({{"regime", regime},
                                   {"family_a", comparison.family_a},
                                   {"family_b", comparison.family_b},
                                   {"median_a", comparison.median_a},
                                   {"median_b", comparison.median_b},
                                   {"statistic", comparison.test.statistic},
                                   {"p_value", comparison.test.p_value},
                                   {"method", comparison.test.method},
                                   {"relation", comparison.relation}});
        }
    }

    json report{{"rankings", regimes},
                {"ratios", ratios},
                {"representatives",
                 {{"entries", reps}, {"notes", representatives.notes}}},
                {"family_comparisons", comparisons}};
    return dump(report);
}

std::string permtest_report_json(const std::vector<PermtestReportEntry>& entries) {
    json tests = json::array();
    for (const auto& entry : entries) {
        json row{{"name", entry.name},
                 {"kind", entry.kind},
                 {"grouping", entry.grouping},
                 {"scope", entry.scope},
                 {"observed", entry.result.observed},
                 {"null_mean", entry.result.null_mean},
                 {"null_sd", entry.result.null_sd},
                 {"p_value", entry.result.p_value},
                 {"effect_size", entry.result.effect_size},
                 {"n_permutations", entry.result.n_permutations},
                 {"seed", entry.result.seed},
                 {"n_within", entry.n_within},
                 {"n_between", entry.n_between}};
        if (entry.has_cohens_d) row["cohens_d"] = entry.cohens_d;
        tests.push_back(std::move(row));
    }
    return dump(json{{"tests", tests}});
}

std::string validation_report_json(const ValidationReport& report) {
    json findings = json::array();
    for (const auto& finding : report.findings) {
        findings.push_back({{"severity", std::string(severity_name(finding.severity))},
                            {"code", finding.code},
                            {"message", finding.message}});
    }
    json counts = json::object();
    for (const auto& [condition_id, systems] : report.per_condition_counts) {
        json block = json::object();
        for (const auto& [system_id, count] : systems) block[system_id] = count;
        counts[condition_id] = std::move(block);
    }
    return dump(json{{"ok", report.ok()},
                     {"findings", findings},
                     {"n_rows", report.n_rows},
                     {"n_systems", report.n_systems},
                     {"n_humans", report.n_humans},
                     {"n_models", report.n_models},
                     {"n_conditions", report.n_conditions},
                     {"per_condition_counts", counts}});
}

std::string alignment_cells_csv(const std::vector<AlignmentRecord>& records) {
    csv::Table table;
    table.header = {"condition_id", "system_a", "system_b",
                    "metric",       "value",    "defined",
                    "n_basis"};
    std::vector<const AlignmentRecord*> ordered;
    ordered.reserve(records.size());
    for (const auto& record : records) ordered.push_back(&record);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const AlignmentRecord* a, const AlignmentRecord* b) {
                         auto ka = std::tie(a->condition.distortion_type,
                                            a->condition.distortion_level,
                                            a->system_a, a->system_b);
                         auto kb = std::tie(b->condition.distortion_type,
                                            b->condition.distortion_level,
                                            b->system_a, b->system_b);
                         return ka < kb;
                     });
    auto push = [&](const AlignmentRecord& r, const char* metric,
                    const std::optional<double>& value, long n_basis) {
        table.rows.push_back({r.condition.id(), r.system_a, r.system_b, metric,
                              value ? format_double(*value) : std::string(),
                              value ? "true" : "false",
                              std::to_string(n_basis)});
    };
    for (const AlignmentRecord* r : ordered) {
        push(*r, "ec", r->ec, r->n_trials);
        push(*r, "ma", r->ma, r->n_joint_errors);
        push(*r, "cled", r->cled, r->n_errors);
    }
    std::string out = csv::join_row(table.header) + "\n";
    for (const auto& row : table.rows) out += csv::join_row(row) + "\n";
    return out;
}

std::vector<AlignmentRecord> alignment_cells_from_csv(
    const std::string& path, const std::map<std::string, SystemInfo>& roster) {
    csv::Table table = csv::read_file(path);
    const char* needed[] = {"condition_id", "system_a", "system_b",
                            "metric",       "value",    "defined",
                            "n_basis"};
    int cols[std::size(needed)];
    for (std::size_t i = 0; i < std::size(needed); ++i) {
        cols[i] = table.column(needed[i]);
        if (cols[i] < 0)
            fail(errc::missing_column,
                 path + ": missing column '" + std::string(needed[i]) + "'");
    }
    std::map<std::tuple<std::string, std::string, std::string>, AlignmentRecord>
        records;
    for (const auto& row : table.rows) {
        const std::string& condition_id = row[cols[0]];
        auto key = std::make_tuple(condition_id, row[cols[1]], row[cols[2]]);
        auto [it, inserted] = records.try_emplace(key);
        AlignmentRecord& record = it->second;
        if (inserted) {
            auto us = condition_id.find('_');
            if (us == std::string::npos)
                fail(errc::invalid_value,
                     path + ": condition_id '" + condition_id +
                         "' lacks a type_level separator");
            record.condition.distortion_type = condition_id.substr(0, us);
            record.condition.distortion_level = condition_id.substr(us + 1);
            record.system_a = row[cols[1]];
            record.system_b = row[cols[2]];
            auto ra = roster.find(record.system_a);
            auto rb = roster.find(record.system_b);
            if (ra == roster.end() || rb == roster.end())
                fail(errc::invalid_value,
                     path + ": system missing from roster in row for '" +
                         condition_id + "'");
            record.kind_a = ra->second.kind;
            record.kind_b = rb->second.kind;
        }
        const std::string& metric = row[cols[3]];
        bool defined = row[cols[5]] == "true";
        std::optional<double> value;
        if (defined) {
            try {
                value = std::stod(row[cols[4]]);
            } catch (const std::exception&) {
                fail(errc::invalid_value,
                     path + ": bad value '" + row[cols[4]] + "'");
            }
        }
        long n_basis = 0;
        try {
            n_basis = std::stol(row[cols[6]]);
        } catch (const std::exception&) {
            fail(errc::invalid_value, path + ": bad n_basis '" + row[cols[6]] + "'");
        }
        if (metric == "ec") {
            record.ec = value;
            record.n_trials = n_basis;
        } else if (metric == "ma") {
            record.ma = value;
            record.n_joint_errors = n_basis;
        } else if (metric == "cled") {
            record.cled = value;
            record.n_errors = n_basis;
        } else {
            fail(errc::invalid_value, path + ": unknown metric '" + metric + "'");
        }
    }
    std::vector<AlignmentRecord> out;
    out.reserve(records.size());
    for (auto& [key, record] : records) out.push_back(std::move(record));
    return out;
}

std::string distance_matrix_csv(const DistanceMatrix& matrix) {
    csv::Table table;
    table.header.push_back("label");
    for (const auto& label : matrix.labels) table.header.push_back(label);
    for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
        std::vector<std::string> row{matrix.labels[i]};
        for (double v : matrix.values[i]) row.push_back(format_double(v));
        table.rows.push_back(std::move(row));
    }
    std::string out = csv::join_row(table.header) + "\n";
    for (const auto& row : table.rows) out += csv::join_row(row) + "\n";
    return out;
}

namespace {

const char* regime_color(const std::string& regime, std::size_t index) {
    if (regime == "reference") return "#4c8dd3";
    if (regime == "near-OOD") return "#58a85f";
    if (regime == "far-OOD") return "#e0a93c";
    if (regime == "extreme-OOD") return "#cf5b51";
    static const char* palette[] = {"#4c8dd3", "#58a85f", "#e0a93c",
                                    "#cf5b51", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f"};
    return palette[index % std::size(palette)];
}

}  // namespace

std::string spectrum_strip_svg(const SpectrumResult& spectrum) {
    const double width = 920.0, height = 250.0;
    const double left = 60.0, right = 30.0, axis_y = 170.0;
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto& score : spectrum.scores) {
        lo = std::min(lo, score.delta);
        hi = std::max(hi, score.delta);
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto x_of = [&](double delta) {
        return left + (delta - lo) / (hi - lo) * (width - left - right);
    };

    std::map<std::string, std::size_t> regime_index;
    for (std::size_t i = 0; i < spectrum.regimes.regimes.size(); ++i)
        regime_index[spectrum.regimes.regimes[i]] = i;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
        << height << "\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";
    svg << "  <text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"15\" fill=\"#222\">Condition shift scores by regime"
           "</text>\n";
    // Axis.
    svg << "  <line x1=\"" << left << "\" y1=\"" << axis_y << "\" x2=\""
        << width - right << "\" y2=\"" << axis_y
        << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    for (double tick : {lo + pad, 0.0, hi - pad}) {
        if (tick < lo || tick > hi) continue;
        double x = x_of(tick);
        svg << "  <line x1=\"" << fixed2(x) << "\" y1=\"" << axis_y
            << "\" x2=\"" << fixed2(x) << "\" y2=\"" << axis_y + 6
            << "\" stroke=\"#444\"/>\n";
        svg << "  <text x=\"" << fixed2(x) << "\" y=\"" << axis_y + 22
            << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\" "
               "text-anchor=\"middle\">" << fixed2(tick) << "</text>\n";
    }
    // Regime boundaries.
    for (double boundary : spectrum.regimes.boundaries) {
        double x = x_of(boundary);
        svg << "  <line x1=\"" << fixed2(x) << "\" y1=\"60\" x2=\"" << fixed2(x)
            << "\" y2=\"" << axis_y
            << "\" stroke=\"#888\" stroke-dasharray=\"5,4\"/>\n";
        svg << "  <text x=\"" << fixed2(x) << "\" y=\"52\" "
               "font-family=\"sans-serif\" font-size=\"10\" fill=\"#666\" "
               "text-anchor=\"middle\">" << fixed2(boundary) << "</text>\n";
    }
    // Condition dots, vertically cycled to reduce overlap.
    int slot = 0;
    for (const auto& score : spectrum.scores) {
        std::string id = score.condition.id();
        const std::string& regime = spectrum.regimes.assignment.at(id);
        double x = x_of(score.delta);
        double y = 100.0 + 14.0 * (slot % 4);
        ++slot;
        svg << "  <circle cx=\"" << fixed2(x) << "\" cy=\"" << fixed2(y)
            << "\" r=\"4\" fill=\"" << regime_color(regime, regime_index[regime])
            << "\" fill-opacity=\"0.85\"><title>" << id << " (" << fixed2(score.delta)
            << ")</title></circle>\n";
    }
    // Legend.
    double lx = left;
    for (std::size_t i = 0; i < spectrum.regimes.regimes.size(); ++i) {
        const std::string& regime = spectrum.regimes.regimes[i];
        svg << "  <circle cx=\"" << fixed2(lx) << "\" cy=\"" << height - 22
            << "\" r=\"5\" fill=\"" << regime_color(regime, i) << "\"/>\n";
        svg << "  <text x=\"" << fixed2(lx + 10) << "\" y=\"" << height - 18
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">"
            << regime << "</text>\n";
        lx += 13.0 * static_cast<double>(regime.size()) + 30.0;
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string ranking_dot_svg(const std::vector<RegimeRanking>& rankings) {
    const double width = 760.0;
    const double left = 170.0, right = 40.0;
    const double row_height = 20.0, block_gap = 34.0;
    double height = 40.0;
    for (const auto& ranking : rankings)
        height += block_gap + row_height * static_cast<double>(ranking.entries.size());
    height += 20.0;

    double max_rho = 1.0;
    for (const auto& ranking : rankings) {
        for (const auto& entry : ranking.entries)
            max_rho = std::max(max_rho, entry.rho_bar + entry.sd);
    }
    double hi = std::max(1.05, 1.1 * max_rho);
    auto x_of = [&](double rho) {
        return left + std::clamp(rho, 0.0, hi) / hi * (width - left - right);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << fixed2(height) << "\" viewBox=\"0 0 " << width
        << " " << fixed2(height) << "\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << fixed2(height)
        << "\" fill=\"#ffffff\"/>\n";
    svg << "  <text x=\"20\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"15\" fill=\"#222\">Model rankings: alignment relative "
           "to the human baseline</text>\n";
    double y = 44.0;
    for (const auto& ranking : rankings) {
        svg << "  <text x=\"20\" y=\"" << fixed2(y + 12)
            << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#333\" "
               "font-weight=\"bold\">" << ranking.regime << "</text>\n";
        double block_top = y + 20.0;
        double block_bottom =
            block_top + row_height * static_cast<double>(ranking.entries.size());
        double parity = x_of(1.0);
        svg << "  <line x1=\"" << fixed2(parity) << "\" y1=\""
            << fixed2(block_top - 4) << "\" x2=\"" << fixed2(parity)
            << "\" y2=\"" << fixed2(block_bottom)
            << "\" stroke=\"#bbb\" stroke-dasharray=\"4,3\"/>\n";
        double row_y = block_top;
        for (const auto& entry : ranking.entries) {
            double cy = row_y + row_height / 2.0;
            svg << "  <text x=\"" << left - 10 << "\" y=\"" << fixed2(cy + 4)
                << "\" font-family=\"sans-serif\" font-size=\"12\" "
                   "fill=\"#333\" text-anchor=\"end\">" << entry.model_id
                << "</text>\n";
            double x0 = x_of(entry.rho_bar - entry.sd);
            double x1 = x_of(entry.rho_bar + entry.sd);
            svg << "  <line x1=\"" << fixed2(x0) << "\" y1=\"" << fixed2(cy)
                << "\" x2=\"" << fixed2(x1) << "\" y2=\"" << fixed2(cy)
                << "\" stroke=\"#777\" stroke-width=\"1.5\"/>\n";
            svg << "  <circle cx=\"" << fixed2(x_of(entry.rho_bar)) << "\" cy=\""
                << fixed2(cy) << "\" r=\"5\" fill=\"#4c8dd3\"><title>"
                << entry.model_id << " " << fixed2(entry.rho_bar)
                << "</title></circle>\n";
            row_y += row_height;
        }
        y = block_bottom + block_gap - 20.0;
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io_error, "cannot write file: " + path);
    out << content;
    if (!out) fail(errc::io_error, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string config_fingerprint(const std::string& canonical_config_json) {
    std::uint64_t hash = fnv1a64(canonical_config_json);
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(hash));
    return buffer;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_hash, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    json manifest{{"command", command},
                  {"config_hash", config_hash},
                  {"seed", seed},
                  {"outputs", outputs},
                  {"generated_at", stamp}};
    write_text_file(out_dir + "/manifest_" + command + ".json", dump(manifest));
}

}  // namespace oodspec
