// Command-line front end: validate | simulate | spectrum | align | rank |
// permtest | stats. Each command reads one JSON run config, writes its
// reports into the output directory, and records a manifest with the config
// hash and seed. Outputs are byte-stable across runs; only the manifest
// carries a timestamp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oodspec/analysis.hpp"
#include "oodspec/csv.hpp"
#include "oodspec/error.hpp"
#include "oodspec/ingest.hpp"
#include "oodspec/metrics.hpp"
#include "oodspec/reports.hpp"
#include "oodspec/spectrum.hpp"
#include "oodspec/stats.hpp"
#include "oodspec/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oodspec;

namespace {

struct RunConfig {
    AnalysisConfig analysis;
    std::vector<std::string> inputs;  // resolved trial CSV paths
    TrialFormat format = TrialFormat::canonical;
    std::uint64_t seed = 0;
    int n_perm = 2000;
    int k_min = 1, k_max = 6;
    int restarts = 10;
    double alpha = 0.5;
    std::string output_dir;  // default: "out" beside the config file
    json scenario;  // inline scenario object; null when absent
    std::string fingerprint;
};

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> n_perm;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::string> k_range;
};

std::string resolve_against(const fs::path& base, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return p.string();
    return (base / p).lexically_normal().string();
}

void parse_k_range(const std::string& token, int& k_min, int& k_max) {
    auto sep = token.find("..");
    if (sep == std::string::npos)
        fail(errc::invalid_config, "k_range must look like '1..6', got '" + token + "'");
    try {
        k_min = std::stoi(token.substr(0, sep));
        k_max = std::stoi(token.substr(sep + 2));
    } catch (const std::exception&) {
        fail(errc::invalid_config, "k_range must look like '1..6', got '" + token + "'");
    }
}

RunConfig load_run_config(const std::string& config_path, const CliOverrides& cli) {
    std::string text = read_text_file(config_path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        fail(errc::invalid_config, config_path + ": malformed JSON");
    if (!j.is_object())
        fail(errc::invalid_config, config_path + ": config must be a JSON object");

    RunConfig run;
    fs::path config_dir = fs::path(config_path).parent_path();
    try {
        run.analysis = analysis_config_from_json_text(text);
        if (j.contains("inputs")) {
            for (const auto& entry : j.at("inputs"))
                run.inputs.push_back(
                    resolve_against(config_dir, entry.get<std::string>()));
        }
        if (j.contains("format"))
            run.format = parse_trial_format(j.at("format").get<std::string>());
        if (j.contains("seed")) run.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("n_perm")) run.n_perm = j.at("n_perm").get<int>();
        if (j.contains("k_range")) {
            const auto& range = j.at("k_range");
            if (!range.is_array() || range.size() != 2)
                fail(errc::invalid_config, "k_range must be [k_min, k_max]");
            run.k_min = range[0].get<int>();
            run.k_max = range[1].get<int>();
        }
        if (j.contains("restarts")) run.restarts = j.at("restarts").get<int>();
        if (j.contains("alpha")) run.alpha = j.at("alpha").get<double>();
        if (j.contains("output_dir"))
            run.output_dir =
                resolve_against(config_dir, j.at("output_dir").get<std::string>());
        if (j.contains("scenario")) {
            const auto& scenario = j.at("scenario");
            if (scenario.is_string()) {
                std::string scenario_path =
                    resolve_against(config_dir, scenario.get<std::string>());
                json parsed =
                    json::parse(read_text_file(scenario_path), nullptr, false);
                if (parsed.is_discarded())
                    fail(errc::invalid_config, scenario_path + ": malformed JSON");
                run.scenario = parsed;
            } else if (scenario.is_object()) {
                run.scenario = scenario;
            } else {
                fail(errc::invalid_config,
                     "scenario must be an object or a file path");
            }
        }
    } catch (const json::exception& e) {
        fail(errc::invalid_config,
             config_path + ": bad config shape: " + e.what());
    }

    if (run.output_dir.empty())
        run.output_dir = resolve_against(config_dir, "out");
    if (cli.seed) run.seed = *cli.seed;
    if (cli.n_perm) run.n_perm = *cli.n_perm;
    if (cli.out) run.output_dir = *cli.out;
    if (cli.format) run.format = parse_trial_format(*cli.format);
    if (cli.k_range) parse_k_range(*cli.k_range, run.k_min, run.k_max);

    if (run.n_perm < 1) fail(errc::invalid_config, "n_perm must be positive");
    if (run.restarts < 1) fail(errc::invalid_config, "restarts must be positive");
    if (run.alpha <= 0.0) fail(errc::invalid_config, "alpha must be > 0");

    // Fingerprint of the effective configuration (post-override, canonical
    // key order) so manifests change exactly when the effective inputs do.
    json families = json::object();
    for (const auto& [system_id, info] : run.analysis.families)
        families[system_id] = {{"superfamily", info.superfamily},
                               {"subfamily", info.subfamily}};
    json effective{{"categories", run.analysis.categories},
                   {"references", run.analysis.references},
                   {"families", families},
                   {"inputs", run.inputs},
                   {"format", run.format == TrialFormat::canonical
                                  ? "canonical"
                                  : "modelvshuman"},
                   {"seed", run.seed},
                   {"n_perm", run.n_perm},
                   {"k_range", {run.k_min, run.k_max}},
                   {"restarts", run.restarts},
                   {"alpha", run.alpha},
                   {"scenario", run.scenario}};
    run.fingerprint = config_fingerprint(effective.dump());
    return run;
}

TrialTable load_trials(const RunConfig& run) {
    if (run.inputs.empty())
        fail(errc::invalid_config, "config declares no input trial files");
    TrialTable merged;
    std::set<std::tuple<std::string, std::string, std::string, std::string,
                        std::string, long>>
        seen;
    for (const auto& path : run.inputs) {
        TrialTable table = parse_trials(path, run.format, run.analysis);
        for (auto& row : table.rows) {
            auto key = std::make_tuple(row.system_id, row.distortion_type,
                                       row.distortion_level, row.image_id,
                                       row.session_id,
                                       row.trial_index.value_or(-1));
            if (!seen.insert(key).second)
                fail(errc::duplicate_trial,
                     path + ": trial duplicated across input files (system '" +
                         row.system_id + "', image '" + row.image_id + "')");
            merged.rows.push_back(std::move(row));
        }
    }
    return merged;
}

fs::path ensure_out_dir(const RunConfig& run) {
    fs::path out(run.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) fail(errc::io_error, "cannot create output directory: " + out.string());
    return out;
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        fail(errc::missing_artifact,
             path.string() + " not found; run '" + producer + "' first");
}

// Post-write schema checks: every JSON output must parse with its required
// top-level keys present, every CSV must start with the documented header.
void check_json_keys(const fs::path& path, const std::vector<std::string>& keys) {
    json parsed = json::parse(read_text_file(path.string()), nullptr, false);
    if (parsed.is_discarded())
        fail(errc::invalid_value, path.string() + ": output is not valid JSON");
    for (const auto& key : keys) {
        if (!parsed.contains(key))
            fail(errc::invalid_value,
                 path.string() + ": output missing key '" + key + "'");
    }
}

void check_csv_header(const fs::path& path, const std::vector<std::string>& columns) {
    csv::Table table = csv::read_file(path.string());
    for (const auto& column : columns) {
        if (table.column(column) < 0)
            fail(errc::invalid_value,
                 path.string() + ": output missing column '" + column + "'");
    }
}

void emit_manifest(const fs::path& out, const std::string& command,
                   const RunConfig& run, const std::vector<std::string>& outputs) {
    write_manifest(out.string(), command, run.fingerprint, run.seed, outputs);
}

// Pooled reference-condition accuracies, one value per (human, reference
// condition) pair: the undistorted baseline sample.
std::vector<double> pooled_reference_accuracies(const ResponseSetMap& sets,
                                                const AnalysisConfig& config) {
    std::vector<double> values;
    for (const auto& [key, set] : sets) {
        if (set.kind != SystemKind::human) continue;
        if (!config.is_reference(set.condition)) continue;
        values.push_back(set.accuracy());
    }
    return values;
}

// --- commands ---

int cmd_validate(const RunConfig& run) {
    TrialTable trials = load_trials(run);
    ValidationReport report = validate(trials, run.analysis);
    fs::path out = ensure_out_dir(run);
    write_text_file((out / "validation.json").string(),
                    validation_report_json(report));
    check_json_keys(out / "validation.json", {"ok", "findings", "n_rows"});
    emit_manifest(out, "validate", run, {"validation.json"});
    if (!report.ok()) {
        long n_errors = 0;
        for (const auto& finding : report.findings)
            if (finding.severity == Severity::error) ++n_errors;
        fail(errc::invalid_config,
             "validation found " + std::to_string(n_errors) +
                 " error(s); see validation.json");
    }
    return 0;
}

int cmd_simulate(const RunConfig& run) {
    if (run.scenario.is_null())
        fail(errc::invalid_config, "simulate requires a 'scenario' in the config");
    ScenarioSpec scenario = scenario_from_json_text(run.scenario.dump());
    TrialTable trials = simulate_observers(scenario, run.seed);
    fs::path out = ensure_out_dir(run);
    write_trials(trials, (out / "trials.csv").string());
    check_csv_header(out / "trials.csv",
                     {"system_id", "system_kind", "distortion_type",
                      "distortion_level", "image_id", "true_category",
                      "response_category"});
    emit_manifest(out, "simulate", run, {"trials.csv"});
    return 0;
}

int cmd_spectrum(const RunConfig& run) {
    TrialTable trials = load_trials(run);
    if (run.analysis.references.empty())
        fail(errc::invalid_config,
             "missing reference condition: config declares no references");
    ResponseSetMap sets = build_response_sets(trials);
    bool any_reference_data = false;
    for (const auto& [key, set] : sets) {
        if (set.kind == SystemKind::human && run.analysis.is_reference(set.condition)) {
            any_reference_data = true;
            break;
        }
    }
    if (!any_reference_data)
        fail(errc::invalid_config,
             "missing reference condition: no human trials in any declared "
             "reference condition");

    SpectrumOptions options;
    options.k_min = run.k_min;
    options.k_max = run.k_max;
    options.restarts = run.restarts;
    options.seed = run.seed;
    SpectrumResult spectrum = build_spectrum(sets, run.analysis, options);

    fs::path out = ensure_out_dir(run);
    write_text_file((out / "spectrum.json").string(), spectrum_report_json(spectrum));

    csv::Table criteria;
    criteria.header = {"k", "log_likelihood", "converged", "bic", "aicc",
                       "selected_bic", "selected_aicc"};
    std::string criteria_text = csv::join_row(criteria.header) + "\n";
    for (const auto& candidate : spectrum.selection.candidates) {
        criteria_text += csv::join_row(
            {std::to_string(candidate.k),
             format_double(candidate.fit.log_likelihood),
             candidate.fit.converged ? "true" : "false",
             format_double(candidate.bic), format_double(candidate.aicc),
             candidate.k == spectrum.selection.best_bic_k ? "true" : "false",
             candidate.k == spectrum.selection.best_aicc_k ? "true" : "false"});
        criteria_text += "\n";
    }
    write_text_file((out / "criteria.csv").string(), criteria_text);
    write_text_file((out / "spectrum_strip.svg").string(),
                    spectrum_strip_svg(spectrum));

    spectrum_report_from_file((out / "spectrum.json").string());  // schema check
    check_csv_header(out / "criteria.csv", {"k", "bic", "aicc"});
    emit_manifest(out, "spectrum", run,
                  {"spectrum.json", "criteria.csv", "spectrum_strip.svg"});
    return 0;
}

int cmd_align(const RunConfig& run) {
    TrialTable trials = load_trials(run);
    ResponseSetMap sets = build_response_sets(trials);
    auto roster = system_roster(trials, run.analysis);
    CategorySet categories(run.analysis.categories);

    std::vector<const ResponseSet*> set_ptrs;
    set_ptrs.reserve(sets.size());
    for (const auto& [key, set] : sets) set_ptrs.push_back(&set);

    PairwiseOptions options;
    options.alpha = run.alpha;
    PairwiseResult pairwise = pairwise_alignment(set_ptrs, roster, categories, options);

    fs::path out = ensure_out_dir(run);
    write_text_file((out / "alignment_cells.csv").string(),
                    alignment_cells_csv(pairwise.records));
    check_csv_header(out / "alignment_cells.csv",
                     {"condition_id", "system_a", "system_b", "metric", "value",
                      "defined", "n_basis"});
    emit_manifest(out, "align", run, {"alignment_cells.csv"});
    if (pairwise.skipped_non_comparable > 0)
        std::cerr << "note: skipped " << pairwise.skipped_non_comparable
                  << " non-comparable pair(s)\n";
    return 0;
}

// Shared by rank and permtest: spectrum report + alignment cells read back,
// with record conditions re-keyed through the spectrum's condition roster.
struct DownstreamInputs {
    SpectrumResult spectrum;
    std::vector<AlignmentRecord> records;
    std::map<std::string, SystemInfo> roster;
    TrialTable trials;
};

DownstreamInputs load_downstream(const RunConfig& run, const fs::path& out) {
    require_artifact(out / "spectrum.json", "spectrum");
    require_artifact(out / "alignment_cells.csv", "align");
    DownstreamInputs inputs;
    inputs.spectrum = spectrum_report_from_file((out / "spectrum.json").string());
    inputs.trials = load_trials(run);
    inputs.roster = system_roster(inputs.trials, run.analysis);
    inputs.records = alignment_cells_from_csv((out / "alignment_cells.csv").string(),
                                              inputs.roster);
    std::map<std::string, Condition> by_id;
    for (const auto& score : inputs.spectrum.scores)
        by_id[score.condition.id()] = score.condition;
    for (auto& record : inputs.records) {
        auto it = by_id.find(record.condition.id());
        if (it != by_id.end()) record.condition = it->second;
    }
    return inputs;
}

int cmd_rank(const RunConfig& run) {
    fs::path out = ensure_out_dir(run);
    DownstreamInputs inputs = load_downstream(run, out);
    const SpectrumResult& spectrum = inputs.spectrum;

    Representatives representatives =
        select_representatives(spectrum.regimes, spectrum.scores);

    // Records bucketed per condition: the model-human slice per model plus
    // the human-human baseline slice.
    std::map<std::string, std::vector<AlignmentRecord>> human_records;
    std::map<std::string, std::map<std::string, std::vector<AlignmentRecord>>>
        model_records;
    for (const auto& record : inputs.records) {
        std::string id = record.condition.id();
        bool a_human = record.kind_a == SystemKind::human;
        bool b_human = record.kind_b == SystemKind::human;
        if (a_human && b_human) {
            human_records[id].push_back(record);
        } else if (a_human != b_human) {
            const std::string& model_id = a_human ? record.system_b : record.system_a;
            model_records[id][model_id].push_back(record);
        }
    }

    std::vector<std::string> all_model_ids;
    for (const auto& [system_id, info] : inputs.roster)
        if (info.kind == SystemKind::model) all_model_ids.push_back(system_id);

    std::map<std::string, Condition> condition_by_id;
    for (const auto& score : spectrum.scores)
        condition_by_id[score.condition.id()] = score.condition;

    std::map<std::string, std::vector<AlignmentRatio>> ratios_by_regime;
    std::vector<std::string> ratio_notes;
    for (const auto& entry : representatives.entries) {
        const std::string& condition_id = entry.condition_id;
        const Condition& condition = condition_by_id.at(condition_id);
        auto humans_it = human_records.find(condition_id);
        auto models_it = model_records.find(condition_id);
        if (models_it == model_records.end()) continue;
        static const std::vector<AlignmentRecord> kNoRecords;
        const auto& humans =
            humans_it == human_records.end() ? kNoRecords : humans_it->second;
        for (const auto& model_id : all_model_ids) {
            auto per_model = models_it->second.find(model_id);
            if (per_model == models_it->second.end()) continue;
            try {
                ratios_by_regime[entry.regime].push_back(alignment_ratio(
                    per_model->second, humans, model_id, condition));
            } catch (const Error& e) {
                ratio_notes.push_back("ratio unavailable for model '" + model_id +
                                      "' in condition '" + condition_id +
                                      "': " + std::string(errc_name(e.code())));
            }
        }
    }

    std::vector<RegimeRanking> rankings = rank_models(ratios_by_regime, all_model_ids);
    // Regime display order: descending component mean, as in the spectrum.
    std::map<std::string, std::size_t> regime_order;
    for (std::size_t i = 0; i < spectrum.regimes.regimes.size(); ++i)
        regime_order[spectrum.regimes.regimes[i]] = i;
    std::stable_sort(rankings.begin(), rankings.end(),
                     [&](const RegimeRanking& a, const RegimeRanking& b) {
                         return regime_order[a.regime] < regime_order[b.regime];
                     });

    // Per-regime superfamily comparisons on the per-model mean ratios.
    std::map<std::string, std::vector<FamilyRankComparison>> family_comparisons;
    for (const auto& ranking : rankings) {
        std::map<std::string, std::vector<double>> by_family;
        for (const auto& entry : ranking.entries) {
            const auto& family = inputs.roster.at(entry.model_id).family;
            if (!family.empty()) by_family[family].push_back(entry.rho_bar);
        }
        try {
            family_comparisons[ranking.regime] = superfamily_rank_test(by_family);
        } catch (const Error& e) {
            if (e.code() != errc::family_too_small) throw;
            ratio_notes.push_back("family comparison skipped for regime '" +
                                  ranking.regime + "': too few models per family");
        }
    }

    Representatives reps_with_notes = representatives;
    for (const auto& note : ratio_notes) reps_with_notes.notes.push_back(note);

    write_text_file((out / "ranking.json").string(),
                    ranking_report_json(rankings, ratios_by_regime,
                                        reps_with_notes, family_comparisons));
    write_text_file((out / "ranking_dot.svg").string(), ranking_dot_svg(rankings));

    // Radar data: per (model family, distortion type, regime) mean ratios,
    // exported as CSV for external plotting.
    std::map<std::tuple<std::string, std::string, std::string>,
             std::map<std::string, std::vector<double>>>
        radar;
    for (const auto& [regime, ratios] : ratios_by_regime) {
        for (const auto& ratio : ratios) {
            const auto& family = inputs.roster.at(ratio.model_id).family;
            if (family.empty()) continue;
            auto key = std::make_tuple(family, ratio.condition.distortion_type, regime);
            radar[key]["rho"].push_back(ratio.rho);
            if (ratio.rho_ec) radar[key]["rho_ec"].push_back(*ratio.rho_ec);
            if (ratio.rho_ma) radar[key]["rho_ma"].push_back(*ratio.rho_ma);
        }
    }
    std::string radar_text =
        csv::join_row({"family", "distortion_type", "regime", "metric", "value",
                       "n_models"}) +
        "\n";
    for (const auto& [key, metrics] : radar) {
        for (const auto& [metric, values] : metrics) {
            radar_text += csv::join_row(
                {std::get<0>(key), std::get<1>(key), std::get<2>(key), metric,
                 format_double(mean(values)), std::to_string(values.size())});
            radar_text += "\n";
        }
    }
    write_text_file((out / "radar.csv").string(), radar_text);

    check_json_keys(out / "ranking.json",
                    {"rankings", "ratios", "representatives", "family_comparisons"});
    check_csv_header(out / "radar.csv",
                     {"family", "distortion_type", "regime", "metric", "value"});
    emit_manifest(out, "rank", run, {"ranking.json", "ranking_dot.svg", "radar.csv"});
    return 0;
}

int cmd_permtest(const RunConfig& run) {
    fs::path out = ensure_out_dir(run);
    DownstreamInputs inputs = load_downstream(run, out);
    const SpectrumResult& spectrum = inputs.spectrum;

    std::vector<PermtestReportEntry> entries;
    std::vector<std::string> written;
    std::vector<std::string> notes;

    auto count_pairs = [](const DistanceMatrix& matrix,
                          const std::map<std::string, std::string>& grouping,
                          long& n_within, long& n_between) {
        n_within = n_between = 0;
        for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
            for (std::size_t j = i + 1; j < matrix.labels.size(); ++j) {
                if (grouping.at(matrix.labels[i]) == grouping.at(matrix.labels[j]))
                    ++n_within;
                else
                    ++n_between;
            }
        }
    };

    std::vector<std::string> model_ids;
    for (const auto& [system_id, info] : inputs.roster)
        if (info.kind == SystemKind::model) model_ids.push_back(system_id);

    // Alignment-profile distances per regime, tested at the superfamily level
    // and, within each superfamily, at the subfamily level.
    for (const auto& regime : spectrum.regimes.regimes) {
        std::vector<std::string> roster_conditions;
        for (const auto& score : spectrum.scores) {
            if (spectrum.regimes.assignment.at(score.condition.id()) == regime)
                roster_conditions.push_back(score.condition.id());
        }
        std::sort(roster_conditions.begin(), roster_conditions.end());
        if (roster_conditions.empty()) continue;

        std::vector<AlignmentVector> vectors;
        for (const auto& model_id : model_ids) {
            try {
                vectors.push_back(
                    alignment_vector(model_id, inputs.records, roster_conditions));
            } catch (const Error& e) {
                if (e.code() != errc::no_defined_cells) throw;
                notes.push_back("model '" + model_id +
                                "' has no defined alignment entries in regime '" +
                                regime + "'");
            }
        }
        if (vectors.size() < 3) {
            notes.push_back("regime '" + regime +
                            "' skipped: fewer than 3 models with profiles");
            continue;
        }
        DistanceMatrix matrix = euclidean_distances(vectors);
        for (std::size_t i = 0; i < vectors.size(); ++i)
            matrix.labels[i] = vectors[i].model_id;
        std::string matrix_name = "alignment_distances_" + regime + ".csv";
        write_text_file((out / matrix_name).string(), distance_matrix_csv(matrix));
        written.push_back(matrix_name);

        std::map<std::string, std::string> superfamily;
        for (const auto& label : matrix.labels)
            superfamily[label] = inputs.roster.at(label).family;
        try {
            PermtestReportEntry entry;
            entry.name = "superfamily/" + regime;
            entry.kind = "alignment_distance";
            entry.grouping = "superfamily";
            entry.scope = regime;
            entry.result = family_permutation_test(matrix, superfamily, run.n_perm,
                                                   run.seed);
            count_pairs(matrix, superfamily, entry.n_within, entry.n_between);
            entries.push_back(std::move(entry));
        } catch (const Error& e) {
            if (e.code() != errc::no_within_pairs) throw;
            notes.push_back("superfamily test skipped in regime '" + regime +
                            "': no within-family pairs");
        }

        // Subfamily structure inside each superfamily slice.
        std::set<std::string> families;
        for (const auto& [label, family] : superfamily) families.insert(family);
        for (const auto& family : families) {
            std::vector<AlignmentVector> slice;
            for (const auto& vector : vectors)
                if (inputs.roster.at(vector.model_id).family == family)
                    slice.push_back(vector);
            if (slice.size() < 3) continue;
            DistanceMatrix sub = euclidean_distances(slice);
            for (std::size_t i = 0; i < slice.size(); ++i)
                sub.labels[i] = slice[i].model_id;
            std::map<std::string, std::string> subfamily;
            for (const auto& label : sub.labels)
                subfamily[label] = inputs.roster.at(label).subfamily;
            try {
                PermtestReportEntry entry;
                entry.name = "subfamily/" + family + "/" + regime;
                entry.kind = "alignment_distance";
                entry.grouping = "subfamily";
                entry.scope = regime;
                entry.result = family_permutation_test(sub, subfamily, run.n_perm,
                                                       run.seed);
                count_pairs(sub, subfamily, entry.n_within, entry.n_between);
                entries.push_back(std::move(entry));
            } catch (const Error& e) {
                if (e.code() != errc::no_within_pairs) throw;
                notes.push_back("subfamily test skipped for '" + family +
                                "' in regime '" + regime +
                                "': no within-subfamily pairs");
            }
        }
    }

    // Condition-by-condition CLED over pooled human errors, tested for
    // separability by distortion type and by regime.
    ResponseSetMap sets = build_response_sets(inputs.trials);
    CategorySet categories(run.analysis.categories);
    std::map<std::string, ErrorConfusion> pooled;
    std::map<std::string, Condition> condition_of;
    for (const auto& [key, set] : sets) {
        if (set.kind != SystemKind::human) continue;
        ErrorConfusion confusion = error_confusion(set, categories);
        std::string id = set.condition.id();
        condition_of[id] = set.condition;
        auto [it, inserted] = pooled.try_emplace(id, std::move(confusion));
        if (!inserted) {
            ErrorConfusion& total = it->second;
            for (std::size_t r = 0; r < total.matrix.size(); ++r) {
                for (std::size_t c = 0; c < total.matrix[r].size(); ++c)
                    total.matrix[r][c] += confusion.matrix[r][c];
                total.per_class_errors[r] += confusion.per_class_errors[r];
            }
            total.total_errors += confusion.total_errors;
        }
    }
    std::vector<std::string> cled_labels;
    for (const auto& [id, confusion] : pooled) {
        if (confusion.total_errors == 0) {
            notes.push_back("condition '" + id +
                            "' dropped from divergence matrix: no human errors");
            continue;
        }
        cled_labels.push_back(id);
    }
    if (cled_labels.size() >= 3) {
        DistanceMatrix cled_matrix;
        cled_matrix.labels = cled_labels;
        cled_matrix.values.assign(cled_labels.size(),
                                  std::vector<double>(cled_labels.size(), 0.0));
        for (std::size_t i = 0; i < cled_labels.size(); ++i) {
            for (std::size_t j = i + 1; j < cled_labels.size(); ++j) {
                CledResult result = cled(pooled.at(cled_labels[i]),
                                         pooled.at(cled_labels[j]), run.alpha);
                double value = result.cled.value_or(0.0);
                cled_matrix.values[i][j] = value;
                cled_matrix.values[j][i] = value;
            }
        }
        write_text_file((out / "cled_condition_distances.csv").string(),
                        distance_matrix_csv(cled_matrix));
        written.push_back("cled_condition_distances.csv");

        auto run_separability = [&](const std::string& name,
                                    const std::map<std::string, std::string>& grouping) {
            try {
                SeparabilityResult result = cled_group_separability(
                    cled_matrix, grouping, run.n_perm, run.seed);
                PermtestReportEntry entry;
                entry.name = name;
                entry.kind = "cled_separability";
                entry.grouping = name;
                entry.scope = "all_conditions";
                entry.result = result.permutation;
                entry.cohens_d = result.cohens_d;
                entry.has_cohens_d = true;
                entry.n_within = result.n_within;
                entry.n_between = result.n_between;
                entries.push_back(std::move(entry));
            } catch (const Error& e) {
                if (e.code() != errc::no_within_pairs &&
                    e.code() != errc::degenerate_sample &&
                    e.code() != errc::sample_too_small)
                    throw;
                notes.push_back("separability test '" + name +
                                "' skipped: " + std::string(errc_name(e.code())));
            }
        };

        std::map<std::string, std::string> by_type;
        for (const auto& label : cled_labels)
            by_type[label] = condition_of.at(label).distortion_type;
        run_separability("distortion_type", by_type);

        std::map<std::string, std::string> by_regime;
        bool all_assigned = true;
        for (const auto& label : cled_labels) {
            auto it = spectrum.regimes.assignment.find(label);
            if (it == spectrum.regimes.assignment.end()) {
                all_assigned = false;
                break;
            }
            by_regime[label] = it->second;
        }
        if (all_assigned) {
            run_separability("ood_level", by_regime);
        } else {
            notes.push_back(
                "ood_level separability skipped: conditions missing from the "
                "spectrum assignment");
        }
    } else {
        notes.push_back("divergence separability skipped: fewer than 3 "
                        "conditions with human errors");
    }

    std::string report = permtest_report_json(entries);
    // Notes belong in the report for auditability.
    json report_json = json::parse(report);
    report_json["notes"] = notes;
    write_text_file((out / "permtests.json").string(), report_json.dump(2) + "\n");
    written.push_back("permtests.json");

    check_json_keys(out / "permtests.json", {"tests", "notes"});
    emit_manifest(out, "permtest", run, written);
    return 0;
}

int cmd_stats(const RunConfig& run) {
    TrialTable trials = load_trials(run);
    ResponseSetMap sets = build_response_sets(trials);
    CategorySet categories(run.analysis.categories);
    fs::path out = ensure_out_dir(run);

    std::vector<double> reference = pooled_reference_accuracies(sets, run.analysis);
    if (reference.size() < 2)
        fail(errc::degenerate_reference,
             "need at least 2 pooled reference accuracy values, have " +
                 std::to_string(reference.size()));

    // Human accuracies and pooled correct/trial counts per condition.
    std::map<std::string, std::vector<double>> accuracies;
    std::map<std::string, std::pair<long, long>> counts;  // correct, total
    std::map<std::string, Condition> condition_of;
    for (const auto& [key, set] : sets) {
        if (set.kind != SystemKind::human) continue;
        std::string id = set.condition.id();
        condition_of[id] = set.condition;
        accuracies[id].push_back(set.accuracy());
        counts[id].first += static_cast<long>(set.correct_count());
        counts[id].second += static_cast<long>(set.n());
    }

    struct ShiftRow {
        std::string id;
        bool is_reference;
        std::size_t n_values;
        double median_accuracy;
        std::optional<TestResult> test;
    };
    std::vector<ShiftRow> shift_rows;
    std::vector<double> shift_p;
    for (const auto& [id, values] : accuracies) {
        ShiftRow row;
        row.id = id;
        row.is_reference = run.analysis.is_reference(condition_of.at(id));
        row.n_values = values.size();
        row.median_accuracy = median(values);
        if (!row.is_reference) {
            row.test = mann_whitney_u(values, reference, Alternative::two_sided);
            shift_p.push_back(row.test->p_value);
        }
        shift_rows.push_back(std::move(row));
    }
    std::vector<double> shift_adjusted = bh_adjust(shift_p);

    std::string shift_text =
        csv::join_row({"condition_id", "distortion_type", "distortion_level",
                       "is_reference", "n_values", "median_accuracy",
                       "u_statistic", "p_raw", "p_adjusted", "reject"}) +
        "\n";
    long n_shift_reject = 0;
    std::size_t shift_index = 0;
    for (const auto& row : shift_rows) {
        const Condition& condition = condition_of.at(row.id);
        std::vector<std::string> cells{
            row.id,
            condition.distortion_type,
            condition.distortion_level,
            row.is_reference ? "true" : "false",
            std::to_string(row.n_values),
            format_double(row.median_accuracy)};
        if (row.test) {
            double adjusted = shift_adjusted[shift_index++];
            bool reject = adjusted < 0.01;
            if (reject) ++n_shift_reject;
            cells.push_back(format_double(row.test->statistic));
            cells.push_back(format_double(row.test->p_value));
            cells.push_back(format_double(adjusted));
            cells.push_back(reject ? "true" : "false");
        } else {
            cells.insert(cells.end(), {"", "", "", ""});
        }
        shift_text += csv::join_row(cells) + "\n";
    }
    write_text_file((out / "shift_tests.csv").string(), shift_text);

    // One-tailed above-chance screen on pooled human counts.
    double p0 = 1.0 / static_cast<double>(categories.size());
    struct BinomialRow {
        std::string id;
        long correct, total;
        TestResult test;
    };
    std::vector<BinomialRow> binomial_rows;
    std::vector<double> binomial_p;
    for (const auto& [id, kn] : counts) {
        if (run.analysis.is_reference(condition_of.at(id))) continue;
        BinomialRow row{id, kn.first, kn.second,
                        binomial_above_chance(kn.first, kn.second, p0)};
        binomial_p.push_back(row.test.p_value);
        binomial_rows.push_back(std::move(row));
    }
    std::vector<double> binomial_adjusted = bh_adjust(binomial_p);

    std::string binomial_text =
        csv::join_row({"condition_id", "distortion_type", "distortion_level",
                       "n_correct", "n_trials", "chance_p", "p_raw",
                       "p_adjusted", "reject"}) +
        "\n";
    long n_above_chance = 0;
    for (std::size_t i = 0; i < binomial_rows.size(); ++i) {
        const auto& row = binomial_rows[i];
        const Condition& condition = condition_of.at(row.id);
        bool reject = binomial_adjusted[i] < 0.01;
        if (reject) ++n_above_chance;
        binomial_text +=
            csv::join_row({row.id, condition.distortion_type,
                           condition.distortion_level, std::to_string(row.correct),
                           std::to_string(row.total), format_double(p0),
                           format_double(row.test.p_value),
                           format_double(binomial_adjusted[i]),
                           reject ? "true" : "false"}) +
            "\n";
    }
    write_text_file((out / "binomial_tests.csv").string(), binomial_text);

    // Normality of the pooled baseline, on raw accuracies and their logits.
    std::vector<double> reference_logits;
    {
        // Trial counts per reference value for the logit transform: use each
        // set's own trial count.
        for (const auto& [key, set] : sets) {
            if (set.kind != SystemKind::human) continue;
            if (!run.analysis.is_reference(set.condition)) continue;
            reference_logits.push_back(
                empirical_logit(set.accuracy(), static_cast<long>(set.n())));
        }
    }
    NormalityOptions normality_options;
    normality_options.seed = run.seed;
    std::string normality_text =
        csv::join_row({"sample", "test", "statistic", "p_value", "n"}) + "\n";
    json normality_summary = json::object();
    for (const auto& [name, values] :
         std::vector<std::pair<std::string, const std::vector<double>*>>{
             {"accuracy", &reference}, {"logit", &reference_logits}}) {
        std::vector<TestResult> results = normality_tests(*values, normality_options);
        json block = json::object();
        for (const auto& result : results) {
            normality_text +=
                csv::join_row({name, result.method, format_double(result.statistic),
                               format_double(result.p_value),
                               std::to_string(values->size())}) +
                "\n";
            block[result.method] = result.p_value;
        }
        normality_summary[name] = std::move(block);
    }
    write_text_file((out / "normality_tests.csv").string(), normality_text);

    json summary{
        {"n_conditions", static_cast<long>(accuracies.size())},
        {"n_reference_values", static_cast<long>(reference.size())},
        {"shift",
         {{"n_tested", static_cast<long>(shift_p.size())},
          {"n_significant", n_shift_reject},
          {"alpha", 0.01}}},
        {"binomial",
         {{"n_tested", static_cast<long>(binomial_rows.size())},
          {"n_above_chance", n_above_chance},
          {"chance_p", p0},
          {"alpha", 0.01}}},
        {"normality", normality_summary}};
    write_text_file((out / "stats.json").string(), summary.dump(2) + "\n");

    check_csv_header(out / "shift_tests.csv",
                     {"condition_id", "p_raw", "p_adjusted", "reject"});
    check_csv_header(out / "binomial_tests.csv",
                     {"condition_id", "p_raw", "p_adjusted", "reject"});
    check_csv_header(out / "normality_tests.csv",
                     {"sample", "test", "statistic", "p_value"});
    check_json_keys(out / "stats.json",
                    {"n_conditions", "shift", "binomial", "normality"});
    emit_manifest(out, "stats", run,
                  {"shift_tests.csv", "binomial_tests.csv", "normality_tests.csv",
                   "stats.json"});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-centred OOD analysis pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    CliOverrides overrides;
    std::uint64_t seed_flag = 0;
    int n_perm_flag = 0;
    std::string out_flag, format_flag, k_range_flag;

    const std::vector<std::string> names = {"validate", "simulate", "spectrum",
                                            "align",    "rank",     "permtest",
                                            "stats"};
    std::map<std::string, CLI::App*> subcommands;
    for (const auto& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run config JSON")->required();
        sub->add_option("--seed", seed_flag, "seed override")
            ->each([&](const std::string&) { overrides.seed = seed_flag; });
        sub->add_option("--n-perm", n_perm_flag, "permutation count override")
            ->each([&](const std::string&) { overrides.n_perm = n_perm_flag; });
        sub->add_option("--out", out_flag, "output directory override")
            ->each([&](const std::string&) { overrides.out = out_flag; });
        sub->add_option("--format", format_flag,
                        "trial format: canonical|modelvshuman")
            ->each([&](const std::string&) { overrides.format = format_flag; });
        sub->add_option("--k-range", k_range_flag,
                        "mixture size range, e.g. 1..6")
            ->each([&](const std::string&) { overrides.k_range = k_range_flag; });
        subcommands[name] = sub;
    }

    CLI11_PARSE(app, argc, argv);

    std::string command;
    for (const auto& [name, sub] : subcommands)
        if (sub->parsed()) command = name;

    try {
        RunConfig run = load_run_config(config_path, overrides);
        if (command == "validate") return cmd_validate(run);
        if (command == "simulate") return cmd_simulate(run);
        if (command == "spectrum") return cmd_spectrum(run);
        if (command == "align") return cmd_align(run);
        if (command == "rank") return cmd_rank(run);
        if (command == "permtest") return cmd_permtest(run);
        if (command == "stats") return cmd_stats(run);
        std::cerr << "{\"error\":{\"code\":\"invalid_config\",\"message\":"
                     "\"unknown command\"}}\n";
        return 2;
    } catch (const Error& e) {
        json error{{"error",
                    {{"code", std::string(errc_name(e.code()))},
                     {"message", e.what()}}}};
        std::cerr << error.dump() << "\n";
        return is_input_error(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
        json error{{"error", {{"code", "internal"}, {"message", e.what()}}}};
        std::cerr << error.dump() << "\n";
        return 1;
    }
}
