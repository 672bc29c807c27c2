#include "oodspec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "oodspec/rng.hpp"

namespace oodspec {

namespace {

SystemKind kind_of(const std::map<std::string, SystemInfo>& roster,
                   const std::string& id) {
    auto it = roster.find(id);
    if (it == roster.end())
        fail(errc::invalid_value, "system '" + id + "' missing from roster");
    return it->second.kind;
}

// Mean over the record's defined metric cells; nullopt when neither EC nor
// MA is defined for the pair.
std::optional<double> pair_value(const AlignmentRecord& record,
                                 long* undefined_cells) {
    double sum = 0.0;
    int defined = 0;
    for (const auto& cell : {record.ec, record.ma}) {
        if (cell) {
            sum += *cell;
            ++defined;
        } else if (undefined_cells) {
            ++*undefined_cells;
        }
    }
    if (defined == 0) return std::nullopt;
    return sum / defined;
}

}  // namespace

PairwiseResult pairwise_alignment(const std::vector<const ResponseSet*>& sets,
                                  const std::map<std::string, SystemInfo>& roster,
                                  const CategorySet& categories,
                                  const PairwiseOptions& options) {
    // Pairs are formed within one condition; different conditions never share
    // stimuli, so cross-condition pairs are not candidates at all.
    std::map<std::string, std::vector<const ResponseSet*>> by_condition;
    for (const ResponseSet* set : sets)
        by_condition[set->condition.id()].push_back(set);

    PairwiseResult result;
    for (auto& [condition_id, group] : by_condition) {
        std::sort(group.begin(), group.end(),
                  [](const ResponseSet* a, const ResponseSet* b) {
                      return a->system_id < b->system_id;
                  });
        std::vector<ErrorConfusion> confusions(group.size());
        std::vector<bool> have_confusion(group.size(), false);
        for (std::size_t i = 0; i < group.size(); ++i) {
            for (std::size_t j = i + 1; j < group.size(); ++j) {
                const ResponseSet& a = *group[i];
                const ResponseSet& b = *group[j];
                if (!comparable(a, b)) {
                    ++result.skipped_non_comparable;
                    continue;
                }
                if (!have_confusion[i]) {
                    confusions[i] = error_confusion(a, categories);
                    have_confusion[i] = true;
                }
                if (!have_confusion[j]) {
                    confusions[j] = error_confusion(b, categories);
                    have_confusion[j] = true;
                }
                AlignmentRecord record;
                record.condition = a.condition;
                record.system_a = a.system_id;
                record.system_b = b.system_id;
                record.kind_a = kind_of(roster, a.system_id);
                record.kind_b = kind_of(roster, b.system_id);
                EcBreakdown ec = error_consistency(a, b);
                MaBreakdown ma = misclassification_agreement(a, b, categories);
                CledResult cl = cled(confusions[i], confusions[j], options.alpha);
                record.ec = ec.ec;
                record.ma = ma.ma;
                record.cled = cl.cled;
                record.n_trials = ec.n;
                record.n_joint_errors = ma.n_err;
                record.n_errors =
                    confusions[i].total_errors + confusions[j].total_errors;
                result.records.push_back(std::move(record));
            }
        }
    }
    return result;
}

AlignmentRatio alignment_ratio(const std::vector<AlignmentRecord>& model_records,
                               const std::vector<AlignmentRecord>& human_records,
                               const std::string& model_id,
                               const Condition& condition) {
    AlignmentRatio ratio;
    ratio.model_id = model_id;
    ratio.condition = condition;

    auto aggregate = [](const std::vector<AlignmentRecord>& records,
                        long* excluded) {
        std::vector<double> pair_values;
        std::vector<double> ec_values, ma_values;
        for (const auto& record : records) {
            if (auto v = pair_value(record, excluded)) pair_values.push_back(*v);
            if (record.ec) ec_values.push_back(*record.ec);
            if (record.ma) ma_values.push_back(*record.ma);
        }
        struct {
            std::optional<double> combined, ec, ma;
        } out;
        if (!pair_values.empty()) out.combined = mean(pair_values);
        if (!ec_values.empty()) out.ec = mean(ec_values);
        if (!ma_values.empty()) out.ma = mean(ma_values);
        return out;
    };

    auto model_side = aggregate(model_records, &ratio.excluded_model_cells);
    auto human_side = aggregate(human_records, &ratio.excluded_human_cells);
    if (!model_side.combined)
        fail(errc::no_defined_cells,
             "alignment_ratio: no defined model-human cells for '" + model_id +
                 "' in condition '" + condition.id() + "'");
    if (!human_side.combined)
        fail(errc::no_defined_cells,
             "alignment_ratio: no defined human-human cells in condition '" +
                 condition.id() + "'");
    ratio.a_model = *model_side.combined;
    ratio.a_human = *human_side.combined;
    if (ratio.a_human == 0.0)
        fail(errc::zero_human_baseline,
             "alignment_ratio: human-human baseline is zero in condition '" +
                 condition.id() + "'");
    ratio.rho = ratio.a_model / ratio.a_human;
    if (model_side.ec && human_side.ec && *human_side.ec != 0.0)
        ratio.rho_ec = *model_side.ec / *human_side.ec;
    if (model_side.ma && human_side.ma && *human_side.ma != 0.0)
        ratio.rho_ma = *model_side.ma / *human_side.ma;
    return ratio;
}

std::vector<RegimeRanking> rank_models(
    const std::map<std::string, std::vector<AlignmentRatio>>& ratios_by_regime,
    const std::vector<std::string>& all_model_ids) {
    std::vector<RegimeRanking> rankings;
    for (const auto& [regime, ratios] : ratios_by_regime) {
        RegimeRanking ranking;
        ranking.regime = regime;
        std::map<std::string, std::vector<double>> by_model;
        for (const auto& ratio : ratios) by_model[ratio.model_id].push_back(ratio.rho);
        for (const auto& [model_id, rhos] : by_model) {
            RankedModel entry;
            entry.model_id = model_id;
            entry.rho_bar = mean(rhos);
            entry.sd = rhos.size() >= 2 ? sample_sd(rhos) : 0.0;
            entry.n_conditions = static_cast<int>(rhos.size());
            ranking.entries.push_back(std::move(entry));
        }
        std::sort(ranking.entries.begin(), ranking.entries.end(),
                  [](const RankedModel& a, const RankedModel& b) {
                      if (a.rho_bar != b.rho_bar) return a.rho_bar > b.rho_bar;
                      return a.model_id < b.model_id;
                  });
        for (std::size_t i = 0; i + 1 < ranking.entries.size(); ++i) {
            if (ranking.entries[i].rho_bar == ranking.entries[i + 1].rho_bar) {
                ranking.entries[i].tied = true;
                ranking.entries[i + 1].tied = true;
            }
        }
        for (const auto& model_id : all_model_ids) {
            if (!by_model.count(model_id))
                ranking.missing_models.push_back(model_id);
        }
        rankings.push_back(std::move(ranking));
    }
    return rankings;
}

AlignmentVector alignment_vector(const std::string& model_id,
                                 const std::vector<AlignmentRecord>& records,
                                 const std::vector<std::string>& roster) {
    if (roster.empty())
        fail(errc::empty_roster, "alignment_vector: empty condition roster");
    AlignmentVector out;
    out.model_id = model_id;

    // Mean EC / MA over the model's human partners, per roster condition.
    for (const auto& condition_id : roster) {
        std::vector<double> ec_values, ma_values;
        for (const auto& record : records) {
            if (record.condition.id() != condition_id) continue;
            bool a_is_model = record.system_a == model_id &&
                              record.kind_b == SystemKind::human;
            bool b_is_model = record.system_b == model_id &&
                              record.kind_a == SystemKind::human;
            if (!a_is_model && !b_is_model) continue;
            if (record.ec) ec_values.push_back(*record.ec);
            if (record.ma) ma_values.push_back(*record.ma);
        }
        out.values.push_back(ec_values.empty()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : mean(ec_values));
        out.values.push_back(ma_values.empty()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : mean(ma_values));
    }

    double sum = 0.0;
    long defined = 0;
    for (double v : out.values) {
        if (!std::isnan(v)) {
            sum += v;
            ++defined;
        }
    }
    if (defined == 0)
        fail(errc::no_defined_cells,
             "alignment_vector: no defined entries for model '" + model_id + "'");
    double fill = sum / static_cast<double>(defined);
    for (double& v : out.values) {
        if (std::isnan(v)) {
            v = fill;
            ++out.imputed;
        }
    }
    return out;
}

DistanceMatrix euclidean_distances(const std::vector<AlignmentVector>& vectors) {
    DistanceMatrix matrix;
    if (vectors.empty()) return matrix;
    std::size_t dim = vectors.front().values.size();
    for (const auto& v : vectors) {
        if (v.values.size() != dim)
            fail(errc::domain_error,
                 "euclidean_distances: vectors differ in length");
        matrix.labels.push_back(v.model_id);
    }
    std::size_t n = vectors.size();
    matrix.values.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double ss = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                double diff = vectors[i].values[d] - vectors[j].values[d];
                ss += diff * diff;
            }
            double dist = std::sqrt(ss);
            matrix.values[i][j] = dist;
            matrix.values[j][i] = dist;
        }
    }
    return matrix;
}

namespace {

struct PairPartition {
    std::vector<double> within, across;
};

PairPartition partition_pairs(const DistanceMatrix& distances,
                              const std::vector<int>& groups) {
    PairPartition partition;
    std::size_t n = distances.labels.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            (groups[i] == groups[j] ? partition.within : partition.across)
                .push_back(distances.values[i][j]);
        }
    }
    return partition;
}

std::vector<int> group_codes(const DistanceMatrix& distances,
                             const std::map<std::string, std::string>& grouping) {
    std::vector<int> codes;
    std::map<std::string, int> group_index;
    for (const auto& label : distances.labels) {
        auto it = grouping.find(label);
        if (it == grouping.end())
            fail(errc::invalid_value,
                 "permutation test: no group for '" + label + "'");
        auto [gi, inserted] =
            group_index.emplace(it->second, static_cast<int>(group_index.size()));
        codes.push_back(gi->second);
    }
    return codes;
}

void summarize_null(PermutationResult& result,
                    const std::vector<double>& null_stats) {
    result.null_mean = mean(null_stats);
    double sd = null_stats.size() >= 2 ? sample_sd(null_stats) : 0.0;
    result.null_sd = sd;
    result.effect_size =
        sd > 0.0 ? (result.observed - result.null_mean) / sd : 0.0;
}

}  // namespace

PermutationResult family_permutation_test(
    const DistanceMatrix& distances,
    const std::map<std::string, std::string>& grouping, int n_perm,
    std::uint64_t seed, PermutationLevel) {
    if (n_perm < 1)
        fail(errc::domain_error, "family_permutation_test: n_perm must be >= 1");
    std::vector<int> codes = group_codes(distances, grouping);
    PairPartition observed_partition = partition_pairs(distances, codes);
    if (observed_partition.within.empty())
        fail(errc::no_within_pairs,
             "family_permutation_test: grouping yields no within-group pairs");
    if (observed_partition.across.empty())
        fail(errc::no_within_pairs,
             "family_permutation_test: grouping yields no across-group pairs");

    PermutationResult result;
    result.n_permutations = n_perm;
    result.seed = seed;
    result.observed =
        mean(observed_partition.across) - mean(observed_partition.within);

    std::vector<double> null_stats;
    null_stats.reserve(static_cast<std::size_t>(n_perm));
    long exceed = 0;
    std::vector<int> shuffled = codes;
    for (int r = 1; r <= n_perm; ++r) {
        shuffled = codes;
        Rng rng = seeded_rng(seed, fnv1a64("family_perm") +
                                       static_cast<std::uint64_t>(r));
        shuffle(rng, shuffled);
        PairPartition partition = partition_pairs(distances, shuffled);
        double stat = mean(partition.across) - mean(partition.within);
        null_stats.push_back(stat);
        if (stat >= result.observed) ++exceed;
    }
    result.p_value = static_cast<double>(1 + exceed) /
                     static_cast<double>(n_perm + 1);
    summarize_null(result, null_stats);
    return result;
}

SeparabilityResult cled_group_separability(
    const DistanceMatrix& cled_matrix,
    const std::map<std::string, std::string>& grouping, int n_perm,
    std::uint64_t seed) {
    if (n_perm < 1)
        fail(errc::domain_error, "cled_group_separability: n_perm must be >= 1");
    std::vector<int> codes = group_codes(cled_matrix, grouping);
    PairPartition observed_partition = partition_pairs(cled_matrix, codes);
    if (observed_partition.within.empty())
        fail(errc::no_within_pairs,
             "cled_group_separability: grouping yields no within-group pairs");
    if (observed_partition.across.empty())
        fail(errc::no_within_pairs,
             "cled_group_separability: grouping yields no between-group pairs");

    SeparabilityResult result;
    result.n_within = static_cast<long>(observed_partition.within.size());
    result.n_between = static_cast<long>(observed_partition.across.size());
    result.cohens_d =
        cohens_d(observed_partition.within, observed_partition.across);

    PermutationResult& perm = result.permutation;
    perm.n_permutations = n_perm;
    perm.seed = seed;
    perm.observed = result.cohens_d;

    std::vector<double> null_stats;
    null_stats.reserve(static_cast<std::size_t>(n_perm));
    long exceed = 0;
    std::vector<int> shuffled = codes;
    for (int r = 1; r <= n_perm; ++r) {
        shuffled = codes;
        Rng rng = seeded_rng(seed, fnv1a64("cled_perm") +
                                       static_cast<std::uint64_t>(r));
        shuffle(rng, shuffled);
        PairPartition partition = partition_pairs(cled_matrix, shuffled);
        double stat = cohens_d(partition.within, partition.across);
        null_stats.push_back(stat);
        // Coherent groupings push D negative: lower tail.
        if (stat <= perm.observed) ++exceed;
    }
    perm.p_value = static_cast<double>(1 + exceed) /
                   static_cast<double>(n_perm + 1);
    summarize_null(perm, null_stats);
    return result;
}

std::vector<FamilyRankComparison> superfamily_rank_test(
    const std::map<std::string, std::vector<double>>& ratios_by_family) {
    long families_with_two = 0;
    for (const auto& [family, ratios] : ratios_by_family) {
        if (ratios.empty())
            fail(errc::empty_sample,
                 "superfamily_rank_test: family '" + family + "' has no models");
        if (ratios.size() >= 2) ++families_with_two;
    }
    if (ratios_by_family.size() < 2 || families_with_two < 2)
        fail(errc::family_too_small,
             "superfamily_rank_test: need >= 2 families with >= 2 models each");

    struct FamilyStat {
        std::string name;
        double median_value;
        const std::vector<double>* ratios;
    };
    std::vector<FamilyStat> ordered;
    for (const auto& [family, ratios] : ratios_by_family)
        ordered.push_back({family, median(ratios), &ratios});
    std::sort(ordered.begin(), ordered.end(),
              [](const FamilyStat& a, const FamilyStat& b) {
                  if (a.median_value != b.median_value)
                      return a.median_value > b.median_value;
                  return a.name < b.name;
              });

    std::vector<FamilyRankComparison> table;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        for (std::size_t j = i + 1; j < ordered.size(); ++j) {
            FamilyRankComparison cmp;
            cmp.family_a = ordered[i].name;
            cmp.family_b = ordered[j].name;
            cmp.median_a = ordered[i].median_value;
            cmp.median_b = ordered[j].median_value;
            cmp.test = mann_whitney_u(*ordered[i].ratios, *ordered[j].ratios,
                                      Alternative::two_sided);
            cmp.relation = cmp.test.p_value < 0.01 && cmp.median_a > cmp.median_b
                               ? ">"
                               : ">=";
            table.push_back(std::move(cmp));
        }
    }
    return table;
}

Representatives select_representatives(const RegimeAssignment& regimes,
                                       const std::vector<OODScore>& scores) {
    std::map<std::string, double> regime_mean;
    std::map<std::string, std::size_t> regime_order;
    for (std::size_t i = 0; i < regimes.regimes.size(); ++i) {
        regime_mean[regimes.regimes[i]] = regimes.component_means[i];
        regime_order[regimes.regimes[i]] = i;
    }

    struct Best {
        const OODScore* score = nullptr;
        double distance = 0.0;
        bool tied = false;
    };
    std::map<std::pair<std::string, std::string>, Best> best;  // (type, regime)
    std::set<std::string> types;
    for (const auto& score : scores) {
        const std::string condition_id = score.condition.id();
        auto it = regimes.assignment.find(condition_id);
        if (it == regimes.assignment.end())
            fail(errc::invalid_value,
                 "select_representatives: condition '" + condition_id +
                     "' has no regime assignment");
        const std::string& regime = it->second;
        types.insert(score.condition.distortion_type);
        double distance = std::abs(score.delta - regime_mean.at(regime));
        auto key = std::make_pair(score.condition.distortion_type, regime);
        auto [slot, inserted] = best.try_emplace(key);
        Best& b = slot->second;
        if (inserted || distance < b.distance) {
            b.score = &score;
            b.distance = distance;
            b.tied = false;
        } else if (distance == b.distance) {
            b.tied = true;
            if (score.condition.distortion_level <
                b.score->condition.distortion_level) {
                b.score = &score;
            }
        }
    }

    Representatives out;
    for (const auto& type : types) {
        for (const auto& regime : regimes.regimes) {
            auto it = best.find({type, regime});
            if (it == best.end()) {
                out.notes.push_back("distortion type '" + type +
                                    "' has no condition in regime '" + regime +
                                    "'");
                continue;
            }
            RepresentativeEntry entry;
            entry.distortion_type = type;
            entry.regime = regime;
            entry.condition_id = it->second.score->condition.id();
            entry.delta = it->second.score->delta;
            entry.tied = it->second.tied;
            out.entries.push_back(std::move(entry));
        }
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [&](const RepresentativeEntry& a, const RepresentativeEntry& b) {
                  if (a.distortion_type != b.distortion_type)
                      return a.distortion_type < b.distortion_type;
                  return regime_order.at(a.regime) < regime_order.at(b.regime);
              });
    return out;
}

}  // namespace oodspec
