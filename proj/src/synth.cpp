#include "oodspec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oodspec/rng.hpp"

namespace oodspec {

namespace {

char digit(int v) { return static_cast<char>('0' + v); }

std::string image_name(int idx) {
    // img_0000-style fixed-width ids keep lexicographic == numeric order.
    std::string s = "img_0000";
    for (int pos = 7; pos >= 4; --pos) {
        s[pos] = digit(idx % 10);
        idx /= 10;
    }
    return s;
}

// Row-stochastic error kernel over wrong labels for one true class.
std::vector<std::vector<double>> normalized_kernel(
    const ObserverSpec& observer, std::size_t c) {
    std::vector<std::vector<double>> kernel;
    if (observer.confusion_kernel.empty()) {
        kernel.assign(c, std::vector<double>(c, 1.0 / static_cast<double>(c - 1)));
        for (std::size_t i = 0; i < c; ++i) kernel[i][i] = 0.0;
        return kernel;
    }
    if (observer.confusion_kernel.size() != c)
        fail(errc::invalid_kernel, "observer '" + observer.system_id +
                                       "': kernel must be CxC");
    kernel = observer.confusion_kernel;
    for (std::size_t i = 0; i < c; ++i) {
        if (kernel[i].size() != c)
            fail(errc::invalid_kernel, "observer '" + observer.system_id +
                                           "': kernel must be CxC");
        kernel[i][i] = 0.0;
        double row_sum = 0.0;
        for (double v : kernel[i]) {
            if (!(v >= 0.0))
                fail(errc::invalid_kernel,
                     "observer '" + observer.system_id +
                         "': kernel entries must be nonnegative");
            row_sum += v;
        }
        if (row_sum <= 0.0)
            fail(errc::invalid_kernel,
                 "observer '" + observer.system_id +
                     "': kernel row " + std::to_string(i) + " has no mass");
        for (double& v : kernel[i]) v /= row_sum;
    }
    return kernel;
}

std::size_t index_from_deviate(double deviate,
                               const std::vector<double>& weights) {
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        acc += weights[j];
        if (deviate < acc) return j;
    }
    // Guard against rounding at the top of the CDF.
    for (std::size_t j = weights.size(); j > 0; --j) {
        if (weights[j - 1] > 0.0) return j - 1;
    }
    return 0;
}

void validate_scenario(const ScenarioSpec& spec) {
    if (spec.categories.size() < 2)
        fail(errc::invalid_config, "scenario: need >= 2 categories");
    if (spec.images_per_condition < 1)
        fail(errc::invalid_config, "scenario: images_per_condition must be >= 1");
    if (spec.images_per_condition > 9999)
        fail(errc::invalid_config, "scenario: images_per_condition capped at 9999");
    if (spec.conditions.empty())
        fail(errc::invalid_config, "scenario: no conditions");
    if (spec.observers.empty())
        fail(errc::invalid_config, "scenario: no observers");
    for (const auto& obs : spec.observers) {
        if (obs.system_id.empty())
            fail(errc::invalid_config, "scenario: observer with empty system_id");
        if (!(obs.accuracy >= 0.0 && obs.accuracy <= 1.0))
            fail(errc::invalid_config, "observer '" + obs.system_id +
                                           "': accuracy outside [0,1]");
        if (!(obs.coupling >= 0.0 && obs.coupling <= 1.0))
            fail(errc::invalid_config, "observer '" + obs.system_id +
                                           "': coupling outside [0,1]");
        if (!(obs.label_coupling >= 0.0 && obs.label_coupling <= 1.0))
            fail(errc::invalid_config, "observer '" + obs.system_id +
                                           "': label_coupling outside [0,1]");
    }
    for (const auto& cond : spec.conditions) {
        if (cond.distortion_type.empty())
            fail(errc::invalid_config, "scenario: condition with empty type");
        if (cond.accuracy_override &&
            !(*cond.accuracy_override >= 0.0 && *cond.accuracy_override <= 1.0))
            fail(errc::invalid_config, "scenario: accuracy_override outside [0,1]");
        if (!(cond.accuracy_scale >= 0.0))
            fail(errc::invalid_config, "scenario: negative accuracy_scale");
    }
}

}  // namespace

TrialTable simulate_observers(const ScenarioSpec& spec, std::uint64_t seed) {
    validate_scenario(spec);
    std::size_t c = spec.categories.size();

    std::vector<std::vector<std::vector<double>>> kernels;
    kernels.reserve(spec.observers.size());
    for (const auto& obs : spec.observers)
        kernels.push_back(normalized_kernel(obs, c));

    TrialTable table;
    table.rows.reserve(spec.conditions.size() * spec.observers.size() *
                       static_cast<std::size_t>(spec.images_per_condition));

    for (const auto& cond : spec.conditions) {
        Condition condition{cond.distortion_type, cond.distortion_level};
        std::string condition_id = condition.id();

        // Shared per-image channel: target label, difficulty draw, and a
        // label deviate consumed by label-coupled error draws.
        struct Image {
            int true_idx;
            double difficulty;
            double label_deviate;
        };
        Rng cond_rng = seeded_rng(seed, fnv1a64("cond:" + condition_id));
        std::vector<Image> images(
            static_cast<std::size_t>(spec.images_per_condition));
        for (auto& img : images) {
            img.true_idx = static_cast<int>(
                uniform_below(cond_rng, static_cast<std::uint64_t>(c)));
            img.difficulty = uniform01(cond_rng);
            img.label_deviate = uniform01(cond_rng);
        }

        for (std::size_t o = 0; o < spec.observers.size(); ++o) {
            const ObserverSpec& obs = spec.observers[o];
            double eff_acc =
                cond.accuracy_override
                    ? *cond.accuracy_override
                    : std::clamp(obs.accuracy * cond.accuracy_scale, 0.0, 1.0);
            if (eff_acc < 1.0 && c < 2)
                fail(errc::invalid_config, "errors impossible with one category");
            Rng rng = seeded_rng(
                seed ^ obs.seed,
                fnv1a64("obs:" + obs.system_id + ":" + condition_id));
            for (int idx = 0; idx < spec.images_per_condition; ++idx) {
                const Image& img = images[static_cast<std::size_t>(idx)];
                // Fixed four-draw layout per trial keeps streams aligned
                // across parameter choices.
                double gate = uniform01(rng);
                double private_difficulty = uniform01(rng);
                double label_gate = uniform01(rng);
                double private_label = uniform01(rng);

                double w = gate < obs.coupling ? img.difficulty
                                               : private_difficulty;
                bool correct = w < eff_acc;
                int response_idx = img.true_idx;
                if (!correct) {
                    double deviate = label_gate < obs.label_coupling
                                         ? img.label_deviate
                                         : private_label;
                    response_idx = static_cast<int>(index_from_deviate(
                        deviate, kernels[o][static_cast<std::size_t>(
                                     img.true_idx)]));
                    if (cond.label_rotation != 0) {
                        int span = static_cast<int>(c);
                        int shift =
                            ((cond.label_rotation % span) + span) % span;
                        response_idx = (response_idx + shift) % span;
                        if (response_idx == img.true_idx)
                            response_idx = (response_idx + 1) % span;
                    }
                }

                TrialRecord rec;
                rec.system_id = obs.system_id;
                rec.system_kind = obs.kind;
                rec.family = obs.family;
                rec.subfamily = obs.subfamily;
                rec.distortion_type = cond.distortion_type;
                rec.distortion_level = cond.distortion_level;
                rec.image_id = condition_id + "_" + image_name(idx);
                rec.true_category =
                    spec.categories[static_cast<std::size_t>(img.true_idx)];
                rec.response_category =
                    spec.categories[static_cast<std::size_t>(response_idx)];
                rec.session_id = "1";
                rec.trial_index = idx + 1;
                table.rows.push_back(std::move(rec));
            }
        }
    }
    return table;
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

ScenarioSpec scenario_from_json_text(const std::string& text) {
    nlohmann::json j = parse_json_or_fail(text, "scenario");
    if (!j.is_object()) fail(errc::invalid_config, "scenario: not an object");
    ScenarioSpec spec;
    if (j.contains("categories")) {
        for (const auto& cat : j["categories"])
            spec.categories.push_back(cat.get<std::string>());
    } else {
        spec.categories = default_categories();
    }
    spec.images_per_condition = j.value("images_per_condition", 0);
    if (!j.contains("conditions") || !j["conditions"].is_array())
        fail(errc::invalid_config, "scenario: missing conditions array");
    for (const auto& jc : j["conditions"]) {
        ConditionSpec cond;
        cond.distortion_type = jc.value("distortion_type", std::string());
        cond.distortion_level = jc.value("distortion_level", std::string());
        cond.accuracy_scale = jc.value("accuracy_scale", 1.0);
        if (jc.contains("accuracy_override"))
            cond.accuracy_override = jc["accuracy_override"].get<double>();
        cond.label_rotation = jc.value("label_rotation", 0);
        spec.conditions.push_back(std::move(cond));
    }
    if (!j.contains("observers") || !j["observers"].is_array())
        fail(errc::invalid_config, "scenario: missing observers array");
    for (const auto& jo : j["observers"]) {
        ObserverSpec obs;
        obs.system_id = jo.value("system_id", std::string());
        obs.kind = parse_system_kind(jo.value("kind", std::string("model")));
        obs.family = jo.value("family", std::string());
        obs.subfamily = jo.value("subfamily", std::string());
        obs.accuracy = jo.value("accuracy", 1.0);
        obs.coupling = jo.value("coupling", 0.0);
        obs.label_coupling = jo.value("label_coupling", 0.0);
        obs.seed = jo.value("seed", 0ULL);
        if (jo.contains("confusion_kernel")) {
            for (const auto& row : jo["confusion_kernel"])
                obs.confusion_kernel.push_back(row.get<std::vector<double>>());
        }
        spec.observers.push_back(std::move(obs));
    }
    return spec;
}

ScenarioSpec scenario_from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open scenario: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return scenario_from_json_text(buffer.str());
}

// --- Brute-force oracle -----------------------------------------------------
// Everything below recomputes the three metrics straight from their written
// definitions, on purpose without reusing the metrics module: label-keyed
// maps instead of index matrices, log2 instead of scaled natural logs.

OracleMetrics oracle_metrics(const ResponseSet& a, const ResponseSet& b,
                             const CategorySet& categories, double alpha) {
    // Comparability: identical (image, target) multisets.
    auto stimuli = [](const ResponseSet& s) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& p : s.pairs) out.emplace_back(p.image_id, p.true_category);
        std::sort(out.begin(), out.end());
        return out;
    };
    if (stimuli(a) != stimuli(b))
        fail(errc::non_comparable, "oracle_metrics: different stimulus sets");
    if (a.pairs.empty()) fail(errc::empty_sample, "oracle_metrics: empty sets");

    OracleMetrics out;
    double n = static_cast<double>(a.pairs.size());

    // EC.
    {
        double correct_a = 0, correct_b = 0, both_correct = 0, both_wrong = 0;
        for (std::size_t i = 0; i < a.pairs.size(); ++i) {
            bool ca = a.pairs[i].response_category == a.pairs[i].true_category;
            bool cb = b.pairs[i].response_category == b.pairs[i].true_category;
            correct_a += ca;
            correct_b += cb;
            both_correct += ca && cb;
            both_wrong += !ca && !cb;
        }
        double pa = correct_a / n, pb = correct_b / n;
        double p_obs = (both_correct + both_wrong) / n;
        double p_exp = pa * pb + (1 - pa) * (1 - pb);
        if (p_exp < 1.0) out.ec = (p_obs - p_exp) / (1.0 - p_exp);
    }

    // MA over jointly misclassified trials.
    {
        std::map<std::pair<std::string, std::string>, long> joint;
        std::map<std::string, long> marg_a, marg_b;
        long n_err = 0;
        for (std::size_t i = 0; i < a.pairs.size(); ++i) {
            bool ca = a.pairs[i].response_category == a.pairs[i].true_category;
            bool cb = b.pairs[i].response_category == b.pairs[i].true_category;
            if (ca || cb) continue;
            ++n_err;
            joint[{a.pairs[i].response_category, b.pairs[i].response_category}]++;
            marg_a[a.pairs[i].response_category]++;
            marg_b[b.pairs[i].response_category]++;
        }
        if (n_err > 0) {
            double same = 0.0;
            for (const auto& [labels, count] : joint) {
                if (labels.first == labels.second) same += count;
            }
            double p_o = same / static_cast<double>(n_err);
            double p_e = 0.0;
            for (const auto& [label, count_a] : marg_a) {
                auto it = marg_b.find(label);
                if (it == marg_b.end()) continue;
                p_e += (static_cast<double>(count_a) / n_err) *
                       (static_cast<double>(it->second) / n_err);
            }
            if (p_e < 1.0) out.ma = (p_o - p_e) / (1.0 - p_e);
        }
    }

    // CLED from per-class error tallies.
    {
        std::size_t c = categories.size();
        auto tally = [&](const ResponseSet& s) {
            std::map<std::string, std::map<std::string, long>> errors;
            for (const auto& p : s.pairs) {
                if (p.response_category == p.true_category) continue;
                errors[p.true_category][p.response_category]++;
            }
            return errors;
        };
        auto errors_a = tally(a), errors_b = tally(b);
        double total = 0.0;
        for (const auto& [cls, row] : errors_a)
            for (const auto& [lbl, cnt] : row) total += cnt;
        for (const auto& [cls, row] : errors_b)
            for (const auto& [lbl, cnt] : row) total += cnt;
        if (total > 0.0) {
            double cled_sum = 0.0;
            for (const auto& cls : categories.labels) {
                double n_a = 0.0, n_b = 0.0;
                auto it_a = errors_a.find(cls);
                auto it_b = errors_b.find(cls);
                if (it_a != errors_a.end())
                    for (const auto& [lbl, cnt] : it_a->second) n_a += cnt;
                if (it_b != errors_b.end())
                    for (const auto& [lbl, cnt] : it_b->second) n_b += cnt;
                double weight = (n_a + n_b) / total;
                if (weight == 0.0) continue;
                double jsd = 0.0;
                for (const auto& lbl : categories.labels) {
                    double f_a = 0.0, f_b = 0.0;
                    if (it_a != errors_a.end()) {
                        auto f = it_a->second.find(lbl);
                        if (f != it_a->second.end()) f_a = f->second;
                    }
                    if (it_b != errors_b.end()) {
                        auto f = it_b->second.find(lbl);
                        if (f != it_b->second.end()) f_b = f->second;
                    }
                    double pi_a = (f_a + alpha) / (n_a + alpha * c);
                    double pi_b = (f_b + alpha) / (n_b + alpha * c);
                    double m = 0.5 * (pi_a + pi_b);
                    jsd += 0.5 * pi_a * std::log2(pi_a / m) +
                           0.5 * pi_b * std::log2(pi_b / m);
                }
                cled_sum += weight * jsd;
            }
            out.cled = cled_sum;
        }
    }
    return out;
}

}  // namespace oodspec
