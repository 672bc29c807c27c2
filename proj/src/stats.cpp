#include "oodspec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oodspec {

std::string_view alternative_name(Alternative alt) {
    switch (alt) {
        case Alternative::two_sided: return "two_sided";
        case Alternative::greater: return "greater";
        case Alternative::less: return "less";
    }
    return "unknown";
}

double mean(std::span<const double> x) {
    if (x.empty()) fail(errc::empty_sample, "mean of empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_var(std::span<const double> x) {
    if (x.size() < 2) fail(errc::sample_too_small, "variance needs >= 2 values");
    double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

double sample_sd(std::span<const double> x) { return std::sqrt(sample_var(x)); }

double median(std::vector<double> x) {
    if (x.empty()) fail(errc::empty_sample, "median of empty sample");
    std::sort(x.begin(), x.end());
    std::size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double empirical_logit(double a, long n) {
    if (!(a >= 0.0 && a <= 1.0))
        fail(errc::domain_error, "accuracy outside [0,1]");
    if (n < 1) fail(errc::domain_error, "trial count must be >= 1");
    double nd = static_cast<double>(n);
    double adjusted = (a * nd + 0.5) / (nd + 1.0);
    return std::log(adjusted / (1.0 - adjusted));
}

double logistic(double logit) { return 1.0 / (1.0 + std::exp(-logit)); }

AccuracySample AccuracySample::from_accuracies(const std::vector<double>& values,
                                               const std::vector<long>& n_trials) {
    if (values.size() != n_trials.size())
        fail(errc::domain_error, "accuracy/trial-count length mismatch");
    AccuracySample sample;
    sample.values = values;
    sample.n_trials_per_value = n_trials;
    sample.logits.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        sample.logits.push_back(empirical_logit(values[i], n_trials[i]));
    return sample;
}

AccuracySample AccuracySample::from_logits(const std::vector<double>& logits) {
    AccuracySample sample;
    sample.logits = logits;
    sample.values.reserve(logits.size());
    for (double l : logits) sample.values.push_back(logistic(l));
    return sample;
}

OODScore glass_delta(const AccuracySample& distorted,
                     const AccuracySample& reference,
                     const Condition& condition) {
    if (distorted.logits.empty())
        fail(errc::empty_sample, "glass_delta: empty distorted sample");
    if (reference.logits.size() < 2)
        fail(errc::degenerate_reference,
             "glass_delta: reference needs >= 2 values");
    double ref_sd = sample_sd(reference.logits);
    if (!(ref_sd > 0.0))
        fail(errc::degenerate_reference, "glass_delta: reference sd is zero");
    OODScore score;
    score.condition = condition;
    score.mean_logit_distorted = mean(distorted.logits);
    score.reference_mean = mean(reference.logits);
    score.reference_sd = ref_sd;
    score.delta = (score.mean_logit_distorted - score.reference_mean) / ref_sd;
    return score;
}

namespace {

// Mid-ranks of the pooled sample plus the tie-term sum(t^3 - t).
struct RankInfo {
    std::vector<double> ranks;  // aligned with the pooled input order
    double tie_term = 0.0;
};

RankInfo midranks(const std::vector<double>& pooled) {
    std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pooled[a] < pooled[b];
    });
    RankInfo info;
    info.ranks.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) info.ranks[order[k]] = shared;
        double t = static_cast<double>(j - i + 1);
        info.tie_term += t * t * t - t;
        i = j + 1;
    }
    return info;
}

// Null distribution of the rank sum for untied samples: ways[s] = number of
// n1-subsets of {1..N} whose ranks sum to s.
std::vector<double> exact_rank_sum_counts(std::size_t n1, std::size_t n_total) {
    std::size_t max_sum = 0;
    for (std::size_t r = n_total - n1 + 1; r <= n_total; ++r) max_sum += r;
    std::vector<std::vector<double>> ways(
        n1 + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t rank = 1; rank <= n_total; ++rank) {
        for (std::size_t chosen = std::min(rank, n1); chosen >= 1; --chosen) {
            auto& row = ways[chosen];
            const auto& prev = ways[chosen - 1];
            for (std::size_t s = max_sum; s >= rank; --s) {
                row[s] += prev[s - rank];
            }
        }
    }
    return ways[n1];
}

TestResult mann_whitney_exact(const std::vector<double>& x,
                              const std::vector<double>& y,
                              Alternative alternative, double u1,
                              const RankInfo& rank_info) {
    if (rank_info.tie_term != 0.0)
        fail(errc::domain_error,
             "exact Mann-Whitney enumeration requires untied samples");
    std::size_t n1 = x.size(), n2 = y.size(), n_total = n1 + n2;
    if (n_total > 25)
        fail(errc::domain_error,
             "exact Mann-Whitney enumeration limited to n1+n2 <= 25");
    auto counts = exact_rank_sum_counts(n1, n_total);
    double total = 0.0;
    for (double c : counts) total += c;
    // Rank sum offset: U = R1 - n1(n1+1)/2.
    double offset = 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    double cdf = 0.0, sf = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        double u = static_cast<double>(s) - offset;
        if (u <= u1 + 1e-9) cdf += counts[s];
        if (u >= u1 - 1e-9) sf += counts[s];
    }
    double p_less = cdf / total, p_greater = sf / total;
    TestResult result;
    result.statistic = u1;
    result.method = "mann_whitney_u_exact";
    switch (alternative) {
        case Alternative::two_sided:
            result.p_value = std::min(1.0, 2.0 * std::min(p_less, p_greater));
            break;
        case Alternative::greater:
            result.p_value = p_greater;
            break;
        case Alternative::less:
            result.p_value = p_less;
            break;
    }
    return result;
}

}  // namespace

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          Alternative alternative,
                          const MannWhitneyOptions& options) {
    if (x.empty() || y.empty())
        fail(errc::empty_sample, "mann_whitney_u: empty sample");
    std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
    std::vector<double> pooled = xs;
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    RankInfo rank_info = midranks(pooled);

    double n1 = static_cast<double>(xs.size());
    double n2 = static_cast<double>(ys.size());
    double r1 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) r1 += rank_info.ranks[i];
    double u1 = r1 - n1 * (n1 + 1.0) / 2.0;

    if (options.exact)
        return mann_whitney_exact(xs, ys, alternative, u1, rank_info);

    double n_total = n1 + n2;
    double mu = n1 * n2 / 2.0;
    double tie_adjust =
        rank_info.tie_term / (n_total * (n_total - 1.0));
    double variance = n1 * n2 / 12.0 * ((n_total + 1.0) - tie_adjust);

    TestResult result;
    result.statistic = u1;
    result.method = "mann_whitney_u_normal_cc";
    if (variance <= 0.0) {
        // Fully tied pooled sample: no rank information at all.
        result.p_value = 1.0;
        return result;
    }
    double sd = std::sqrt(variance);
    switch (alternative) {
        case Alternative::two_sided: {
            double z = std::max(0.0, std::abs(u1 - mu) - 0.5) / sd;
            result.p_value = std::min(1.0, 2.0 * normal_sf(z));
            break;
        }
        case Alternative::greater: {
            double z = (u1 - mu - 0.5) / sd;
            result.p_value = normal_sf(z);
            break;
        }
        case Alternative::less: {
            double z = (u1 - mu + 0.5) / sd;
            result.p_value = normal_cdf(z);
            break;
        }
    }
    return result;
}

TestResult binomial_above_chance(long k, long n, double p0) {
    if (n < 1 || k < 0 || k > n)
        fail(errc::domain_error, "binomial_above_chance: need 0 <= k <= n, n >= 1");
    if (!(p0 > 0.0 && p0 < 1.0))
        fail(errc::domain_error, "binomial_above_chance: need 0 < p0 < 1");
    TestResult result;
    result.statistic = static_cast<double>(k);
    result.method = "binomial_tail_exact";
    if (k == 0) {
        result.p_value = 1.0;
        return result;
    }
    if (k == n) {
        result.p_value = std::pow(p0, static_cast<double>(n));
        return result;
    }
    // log-space tail sum with a running max for stability.
    double log_p = std::log(p0), log_q = std::log1p(-p0);
    double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n - k + 1));
    double max_term = -HUGE_VAL;
    for (long i = k; i <= n; ++i) {
        double di = static_cast<double>(i);
        double term = lg_n1 - std::lgamma(di + 1.0) -
                      std::lgamma(static_cast<double>(n - i) + 1.0) +
                      di * log_p + static_cast<double>(n - i) * log_q;
        terms.push_back(term);
        max_term = std::max(max_term, term);
    }
    long double acc = 0.0L;
    for (double t : terms) acc += std::exp(static_cast<long double>(t - max_term));
    double p = static_cast<double>(std::exp(static_cast<long double>(max_term)) * acc);
    result.p_value = std::min(1.0, p);
    return result;
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0))
            fail(errc::domain_error, "bh_adjust: p-value outside [0,1]");
    }
    std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return p_values[a] < p_values[b];
    });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t i = m; i >= 1; --i) {
        std::size_t idx = order[i - 1];
        double scaled = p_values[idx] * static_cast<double>(m) /
                        static_cast<double>(i);
        running = std::min(running, std::min(1.0, scaled));
        adjusted[idx] = running;
    }
    return adjusted;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        fail(errc::sample_too_small, "cohens_d: both samples need >= 2 values");
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double pooled_var =
        ((na - 1.0) * sample_var(a) + (nb - 1.0) * sample_var(b)) /
        (na + nb - 2.0);
    if (!(pooled_var > 0.0))
        fail(errc::degenerate_sample, "cohens_d: pooled sd is zero");
    return (mean(a) - mean(b)) / std::sqrt(pooled_var);
}

}  // namespace oodspec
