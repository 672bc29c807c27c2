#include "oodspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "oodspec/rng.hpp"

namespace oodspec {

namespace {

constexpr double kEmTolerance = 1e-8;
constexpr int kEmMaxIterations = 500;

double quantile_sorted(const std::vector<double>& sorted, double p) {
    double pos = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

struct EmState {
    std::vector<double> weights, means, variances;
};

double log_density(double x, double weight, double mean, double variance) {
    if (weight <= 0.0) return -HUGE_VAL;
    double d = x - mean;
    return std::log(weight) - 0.5 * std::log(2.0 * std::numbers::pi * variance) -
           0.5 * d * d / variance;
}

// One EM run from the given initialization; returns the fit without
// canonicalization. Log-likelihood is checked to be nondecreasing.
GmmFit run_em(const std::vector<double>& data, EmState state,
              double variance_floor) {
    std::size_t n = data.size();
    std::size_t k = state.means.size();
    std::vector<std::vector<double>> resp(n, std::vector<double>(k));
    double prev_ll = -HUGE_VAL;
    GmmFit fit;
    fit.k = static_cast<int>(k);
    for (int iter = 1; iter <= kEmMaxIterations; ++iter) {
        // E-step with per-point max subtraction for stability.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double max_lp = -HUGE_VAL;
            for (std::size_t j = 0; j < k; ++j) {
                resp[i][j] = log_density(data[i], state.weights[j],
                                         state.means[j], state.variances[j]);
                max_lp = std::max(max_lp, resp[i][j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                resp[i][j] = std::exp(resp[i][j] - max_lp);
                sum += resp[i][j];
            }
            for (std::size_t j = 0; j < k; ++j) resp[i][j] /= sum;
            ll += max_lp + std::log(sum);
        }
        if (ll + 1e-9 < prev_ll) {
            fail(errc::domain_error,
                 "EM log-likelihood decreased; numerical failure");
        }
        fit.log_likelihood = ll;
        fit.n_iterations = iter;
        if (std::abs(ll - prev_ll) < kEmTolerance) {
            fit.converged = true;
            break;
        }
        prev_ll = ll;
        // M-step with variance floor projection.
        for (std::size_t j = 0; j < k; ++j) {
            double mass = 0.0, mx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mass += resp[i][j];
                mx += resp[i][j] * data[i];
            }
            if (mass <= 0.0) {
                state.weights[j] = 0.0;
                state.variances[j] = std::max(state.variances[j], variance_floor);
                continue;
            }
            double mean_j = mx / mass;
            double var_j = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = data[i] - mean_j;
                var_j += resp[i][j] * d * d;
            }
            var_j /= mass;
            state.weights[j] = mass / static_cast<double>(n);
            state.means[j] = mean_j;
            state.variances[j] = std::max(var_j, variance_floor);
        }
    }
    fit.weights = std::move(state.weights);
    fit.means = std::move(state.means);
    fit.variances = std::move(state.variances);
    return fit;
}

void canonicalize(GmmFit& fit) {
    std::vector<std::size_t> order(fit.means.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fit.means[a] > fit.means[b];
    });
    GmmFit sorted = fit;
    for (std::size_t j = 0; j < order.size(); ++j) {
        sorted.weights[j] = fit.weights[order[j]];
        sorted.means[j] = fit.means[order[j]];
        sorted.variances[j] = fit.variances[order[j]];
    }
    fit = std::move(sorted);
}

}  // namespace

GmmFit fit_gmm_1d(std::span<const double> data, int k, std::uint64_t seed,
                  int restarts) {
    if (k < 1) fail(errc::domain_error, "fit_gmm_1d: k must be >= 1");
    if (restarts < 1) fail(errc::domain_error, "fit_gmm_1d: restarts must be >= 1");
    if (static_cast<int>(data.size()) < k)
        fail(errc::too_few_points, "fit_gmm_1d: need at least k data points");
    for (double v : data) {
        if (!std::isfinite(v))
            fail(errc::non_finite_data, "fit_gmm_1d: non-finite data value");
    }

    std::vector<double> values(data.begin(), data.end());
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    double range = sorted.back() - sorted.front();
    double variance_floor =
        range > 0.0 ? 1e-6 * range * range
                    : 1e-12 * std::max(1.0, sorted.back() * sorted.back());

    double data_mean =
        std::accumulate(values.begin(), values.end(), 0.0) /
        static_cast<double>(values.size());
    double pooled_var = 0.0;
    for (double v : values) pooled_var += (v - data_mean) * (v - data_mean);
    pooled_var = std::max(pooled_var / static_cast<double>(values.size()),
                          variance_floor);
    double data_sd = std::sqrt(pooled_var);

    std::vector<double> quantile_means(k);
    for (int j = 0; j < k; ++j) {
        quantile_means[j] =
            quantile_sorted(sorted, (static_cast<double>(j) + 0.5) /
                                        static_cast<double>(k));
    }

    GmmFit best;
    bool have_best = false;
    for (int r = 0; r < restarts; ++r) {
        EmState init;
        init.weights.assign(k, 1.0 / static_cast<double>(k));
        init.means = quantile_means;
        init.variances.assign(k, pooled_var);
        if (r > 0) {
            Rng rng = seeded_rng(seed, fnv1a64("gmm_restart") +
                                           static_cast<std::uint64_t>(r));
            for (int j = 0; j < k; ++j)
                init.means[j] += 0.25 * data_sd * standard_normal(rng);
        }
        GmmFit fit = run_em(values, std::move(init), variance_floor);
        if (!have_best || fit.log_likelihood > best.log_likelihood) {
            best = std::move(fit);
            have_best = true;
        }
        // Ties keep the earlier restart: (log-likelihood, restart index)
        // lexicographic order, so the outcome is schedule-independent.
    }
    canonicalize(best);
    return best;
}

ModelSelection select_model(std::span<const double> data, int k_min, int k_max,
                            std::uint64_t seed, int restarts) {
    if (k_min < 1 || k_max > 8 || k_min > k_max)
        fail(errc::domain_error, "select_model: k range must lie within [1,8]");
    if (static_cast<int>(data.size()) <= k_max)
        fail(errc::too_few_points,
             "select_model: need more data points than the largest k");
    double n = static_cast<double>(data.size());

    ModelSelection selection;
    for (int k = k_min; k <= k_max; ++k) {
        double p = 3.0 * k - 1.0;
        if (n <= p + 1.0) {
            selection.skipped_k.push_back(k);
            std::ostringstream msg;
            msg << "AICc undefined for k=" << k << " (n=" << data.size()
                << " <= p+1=" << p + 1.0 << "); candidate skipped";
            selection.warnings.push_back(msg.str());
            continue;
        }
        ModelCandidate candidate;
        candidate.k = k;
        candidate.fit = fit_gmm_1d(data, k, seed, restarts);
        double ll = candidate.fit.log_likelihood;
        candidate.bic = p * std::log(n) - 2.0 * ll;
        candidate.aicc = 2.0 * p - 2.0 * ll + 2.0 * p * (p + 1.0) / (n - p - 1.0);
        selection.candidates.push_back(std::move(candidate));
    }
    if (selection.candidates.empty())
        fail(errc::aicc_undefined,
             "select_model: every k in range was skipped (sample too small)");

    const ModelCandidate* best_bic = &selection.candidates.front();
    const ModelCandidate* best_aicc = &selection.candidates.front();
    for (const auto& c : selection.candidates) {
        if (c.bic < best_bic->bic) best_bic = &c;
        if (c.aicc < best_aicc->aicc) best_aicc = &c;
    }
    selection.best_bic_k = best_bic->k;
    selection.best_aicc_k = best_aicc->k;
    selection.criteria_agree = selection.best_bic_k == selection.best_aicc_k;
    if (!selection.criteria_agree) {
        std::ostringstream msg;
        msg << "information criteria disagree (BIC k=" << selection.best_bic_k
            << ", AICc k=" << selection.best_aicc_k << "); BIC is authoritative";
        selection.warnings.push_back(msg.str());
    }
    return selection;
}

std::vector<double> posterior(const GmmFit& fit, double x) {
    std::size_t k = fit.means.size();
    std::vector<double> post(k);
    double max_lp = -HUGE_VAL;
    for (std::size_t j = 0; j < k; ++j) {
        post[j] = log_density(x, fit.weights[j], fit.means[j], fit.variances[j]);
        max_lp = std::max(max_lp, post[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        post[j] = std::exp(post[j] - max_lp);
        sum += post[j];
    }
    for (std::size_t j = 0; j < k; ++j) post[j] /= sum;
    return post;
}

namespace {

// Delta value where the posteriors of adjacent components i (higher mean) and
// j = i+1 (lower mean) are equal; falls back to the midpoint when the
// analytic crossover does not lie between the two means.
double crossover(const GmmFit& fit, std::size_t i, std::size_t j) {
    double mi = fit.means[i], mj = fit.means[j];
    double vi = fit.variances[i], vj = fit.variances[j];
    double wi = fit.weights[i], wj = fit.weights[j];
    double midpoint = 0.5 * (mi + mj);
    if (wi <= 0.0 || wj <= 0.0) return midpoint;
    double lo = std::min(mi, mj), hi = std::max(mi, mj);

    double a = 0.5 * (1.0 / vj - 1.0 / vi);
    double b = mi / vi - mj / vj;
    double c = 0.5 * (mj * mj / vj - mi * mi / vi) + std::log(wi / wj) +
               0.5 * std::log(vj / vi);
    auto in_interval = [&](double x) { return x > lo && x < hi; };
    if (std::abs(a) < 1e-14) {
        if (std::abs(b) < 1e-14) return midpoint;
        double x = -c / b;
        return in_interval(x) ? x : midpoint;
    }
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return midpoint;
    double sq = std::sqrt(disc);
    double r1 = (-b + sq) / (2.0 * a), r2 = (-b - sq) / (2.0 * a);
    bool ok1 = in_interval(r1), ok2 = in_interval(r2);
    if (ok1 && ok2) return midpoint;  // ambiguous: two crossings inside
    if (ok1) return r1;
    if (ok2) return r2;
    return midpoint;
}

}  // namespace

RegimeAssignment assign_regimes(const GmmFit& fit,
                                const std::vector<OODScore>& scores) {
    RegimeAssignment out;
    int k = fit.k;
    if (k == 4) {
        out.regimes = {"reference", "near-OOD", "far-OOD", "extreme-OOD"};
    } else {
        for (int j = 1; j <= k; ++j)
            out.regimes.push_back("regime_" + std::to_string(j));
    }
    out.component_means = fit.means;  // canonical form: descending

    for (const auto& score : scores) {
        std::vector<double> post = posterior(fit, score.delta);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < post.size(); ++j) {
            if (post[j] > post[arg]) arg = j;
        }
        std::string id = score.condition.id();
        out.assignment[id] = out.regimes[arg];
        out.responsibilities[id] = std::move(post);
    }
    for (int j = 0; j + 1 < k; ++j) {
        out.boundaries.push_back(
            crossover(fit, static_cast<std::size_t>(j),
                      static_cast<std::size_t>(j) + 1));
    }
    return out;
}

SpectrumResult build_spectrum(const ResponseSetMap& sets,
                              const AnalysisConfig& config,
                              const SpectrumOptions& options) {
    // Per-condition human accuracy samples.
    std::map<Condition, std::pair<std::vector<double>, std::vector<long>>>
        by_condition;
    std::vector<double> reference_acc;
    std::vector<long> reference_n;
    std::set<std::string> reference_ids;
    for (const auto& [key, set] : sets) {
        if (set.kind != SystemKind::human) continue;
        if (set.pairs.empty()) continue;
        auto& [accs, ns] = by_condition[set.condition];
        accs.push_back(set.accuracy());
        ns.push_back(static_cast<long>(set.n()));
        if (config.is_reference(set.condition)) {
            reference_acc.push_back(set.accuracy());
            reference_n.push_back(static_cast<long>(set.n()));
            reference_ids.insert(set.condition.id());
        }
    }
    if (by_condition.empty())
        fail(errc::empty_sample, "build_spectrum: no human response sets");
    if (reference_acc.size() < 2)
        fail(errc::degenerate_reference,
             "build_spectrum: need >= 2 reference accuracy values (declare "
             "reference conditions and provide human trials for them)");

    AccuracySample reference =
        AccuracySample::from_accuracies(reference_acc, reference_n);

    SpectrumResult result;
    result.n_reference_values = static_cast<long>(reference_acc.size());
    result.reference_condition_ids.assign(reference_ids.begin(),
                                          reference_ids.end());

    std::vector<double> deltas;
    for (const auto& [condition, sample] : by_condition) {
        AccuracySample distorted =
            AccuracySample::from_accuracies(sample.first, sample.second);
        OODScore score = glass_delta(distorted, reference, condition);
        deltas.push_back(score.delta);
        result.scores.push_back(std::move(score));
    }
    result.reference_mean = result.scores.front().reference_mean;
    result.reference_sd = result.scores.front().reference_sd;

    result.selection = select_model(deltas, options.k_min, options.k_max,
                                    options.seed, options.restarts);
    for (const auto& c : result.selection.candidates) {
        if (c.k == result.selection.best_bic_k) {
            result.fit = c.fit;
            break;
        }
    }
    result.regimes = assign_regimes(result.fit, result.scores);
    result.warnings = result.selection.warnings;
    result.options_used = options;
    return result;
}

}  // namespace oodspec
