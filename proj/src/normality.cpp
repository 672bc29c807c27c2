#include <algorithm>
#include <cmath>
#include <vector>

#include "oodspec/rng.hpp"
#include "oodspec/stats.hpp"

// Shapiro-Wilk follows Royston's 1995 algorithm (AS R94): Blom scores with
// polynomial corrections to the two extreme coefficients, then a
// sample-size-dependent transform of W to an approximate normal deviate.
// D'Agostino-Pearson combines the skewness and kurtosis deviates into a
// two-degree chi-square. Lilliefors uses the KS statistic with estimated
// mean/sd and a seeded Monte Carlo null.

namespace oodspec {

namespace {

// Wichura's PPND16 (algorithm AS 241): inverse standard normal CDF.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        fail(errc::domain_error, "normal_quantile: p outside (0,1)");
    double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

double polyval(const double* coeffs, int count, double x) {
    // coeffs given highest order first.
    double acc = 0.0;
    for (int i = 0; i < count; ++i) acc = acc * x + coeffs[i];
    return acc;
}

TestResult shapiro_wilk(std::vector<double> x) {
    std::size_t n = x.size();
    std::sort(x.begin(), x.end());
    if (!(x.back() > x.front()))
        fail(errc::degenerate_sample, "shapiro_wilk: constant sample");

    std::vector<double> m(n);
    double m_norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) /
                               (static_cast<double>(n) + 0.25));
        m_norm2 += m[i] * m[i];
    }
    double rsn = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> a(n);
    double c_last = m[n - 1] / std::sqrt(m_norm2);
    static const double c1[] = {-2.706056, 4.434685, -2.071190,
                                -0.147981, 0.221157,  0.0};
    static const double c2[] = {-3.582633, 5.682633, -1.752461,
                                -0.293762, 0.042981,  0.0};
    double a_n = polyval(c1, 6, rsn) + c_last;
    if (n > 5) {
        double c_prev = m[n - 2] / std::sqrt(m_norm2);
        double a_n1 = polyval(c2, 6, rsn) + c_prev;
        double phi = (m_norm2 - 2.0 * m[n - 1] * m[n - 1] -
                      2.0 * m[n - 2] * m[n - 2]) /
                     (1.0 - 2.0 * a_n * a_n - 2.0 * a_n1 * a_n1);
        double scale = std::sqrt(phi);
        for (std::size_t i = 2; i + 2 < n; ++i) a[i] = m[i] / scale;
        a[n - 1] = a_n;
        a[n - 2] = a_n1;
        a[0] = -a_n;
        a[1] = -a_n1;
    } else {
        double phi =
            (m_norm2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * a_n * a_n);
        double scale = std::sqrt(phi);
        for (std::size_t i = 1; i + 1 < n; ++i) a[i] = m[i] / scale;
        a[n - 1] = a_n;
        a[0] = -a_n;
    }

    double xbar = mean(x);
    double numerator = 0.0, denominator = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        numerator += a[i] * x[i];
        denominator += (x[i] - xbar) * (x[i] - xbar);
    }
    double w = numerator * numerator / denominator;
    w = std::min(w, 1.0);

    double nd = static_cast<double>(n);
    double p;
    if (n == 3) {
        constexpr double pi6 = 1.90985931710274;   // 6/pi
        constexpr double stqr = 1.04719755119660;  // asin(sqrt(3/4))
        p = pi6 * (std::asin(std::sqrt(w)) - stqr);
        p = std::clamp(p, 0.0, 1.0);
    } else if (n <= 11) {
        double gamma = -2.273 + 0.459 * nd;
        double wt = -std::log(gamma - std::log1p(-w));
        double mu = 0.5440 - 0.39978 * nd + 0.025054 * nd * nd -
                    0.0006714 * nd * nd * nd;
        double sigma = std::exp(1.3822 - 0.77857 * nd + 0.062767 * nd * nd -
                                0.0020322 * nd * nd * nd);
        p = normal_sf((wt - mu) / sigma);
    } else {
        double ln_n = std::log(nd);
        double wt = std::log1p(-w);
        double mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n * ln_n +
                    0.0038915 * ln_n * ln_n * ln_n;
        double sigma =
            std::exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n * ln_n);
        p = normal_sf((wt - mu) / sigma);
    }

    TestResult result;
    result.statistic = w;
    result.p_value = p;
    result.method = "shapiro_wilk";
    return result;
}

double skewness_z(const std::vector<double>& x) {
    double nd = static_cast<double>(x.size());
    double m1 = mean(x);
    double m2 = 0.0, m3 = 0.0;
    for (double v : x) {
        double d = v - m1;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= nd;
    m3 /= nd;
    double b1 = m3 / std::pow(m2, 1.5);
    double y = b1 * std::sqrt((nd + 1.0) * (nd + 3.0) / (6.0 * (nd - 2.0)));
    double beta2 = 3.0 * (nd * nd + 27.0 * nd - 70.0) * (nd + 1.0) * (nd + 3.0) /
                   ((nd - 2.0) * (nd + 5.0) * (nd + 7.0) * (nd + 9.0));
    double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
    double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
    double alpha = std::sqrt(2.0 / (w2 - 1.0));
    double ya = y / alpha;
    return delta * std::log(ya + std::sqrt(ya * ya + 1.0));
}

double kurtosis_z(const std::vector<double>& x) {
    double nd = static_cast<double>(x.size());
    double m1 = mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        double d = v - m1;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= nd;
    m4 /= nd;
    double b2 = m4 / (m2 * m2);
    double e = 3.0 * (nd - 1.0) / (nd + 1.0);
    double var = 24.0 * nd * (nd - 2.0) * (nd - 3.0) /
                 ((nd + 1.0) * (nd + 1.0) * (nd + 3.0) * (nd + 5.0));
    double xs = (b2 - e) / std::sqrt(var);
    double beta1 = 6.0 * (nd * nd - 5.0 * nd + 2.0) / ((nd + 7.0) * (nd + 9.0)) *
                   std::sqrt(6.0 * (nd + 3.0) * (nd + 5.0) /
                             (nd * (nd - 2.0) * (nd - 3.0)));
    double a = 6.0 + 8.0 / beta1 *
                         (2.0 / beta1 + std::sqrt(1.0 + 4.0 / (beta1 * beta1)));
    double denom = 1.0 + xs * std::sqrt(2.0 / (a - 4.0));
    double term = std::cbrt((1.0 - 2.0 / a) / denom);
    return ((1.0 - 2.0 / (9.0 * a)) - term) / std::sqrt(2.0 / (9.0 * a));
}

TestResult dagostino_pearson(const std::vector<double>& x) {
    double z1 = skewness_z(x);
    double z2 = kurtosis_z(x);
    double k2 = z1 * z1 + z2 * z2;
    TestResult result;
    result.statistic = k2;
    result.p_value = std::exp(-0.5 * k2);  // chi-square survival, 2 df
    result.method = "dagostino_pearson";
    return result;
}

double lilliefors_statistic(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    double nd = static_cast<double>(x.size());
    double mu = mean(x);
    double sd = sample_sd(x);
    if (!(sd > 0.0))
        fail(errc::degenerate_sample, "lilliefors: constant sample");
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = normal_cdf((x[i] - mu) / sd);
        double upper = static_cast<double>(i + 1) / nd - z;
        double lower = z - static_cast<double>(i) / nd;
        d = std::max(d, std::max(upper, lower));
    }
    return d;
}

TestResult lilliefors(const std::vector<double>& x, std::uint64_t seed,
                      int replicates) {
    double d_obs = lilliefors_statistic(x);
    long exceed = 0;
    std::vector<double> sample(x.size());
    for (int r = 0; r < replicates; ++r) {
        Rng rng = seeded_rng(seed, fnv1a64("lilliefors") + static_cast<std::uint64_t>(r));
        for (auto& v : sample) v = standard_normal(rng);
        if (lilliefors_statistic(sample) >= d_obs) ++exceed;
    }
    TestResult result;
    result.statistic = d_obs;
    result.p_value = static_cast<double>(1 + exceed) /
                     static_cast<double>(replicates + 1);
    result.method = "lilliefors_mc";
    return result;
}

}  // namespace

std::vector<TestResult> normality_tests(std::span<const double> x,
                                        const NormalityOptions& options) {
    if (x.size() < 8)
        fail(errc::sample_too_small, "normality_tests: need n >= 8");
    if (options.lilliefors_replicates < 1)
        fail(errc::domain_error, "normality_tests: replicates must be >= 1");
    for (double v : x) {
        if (!std::isfinite(v))
            fail(errc::non_finite_data, "normality_tests: non-finite value");
    }
    std::vector<double> values(x.begin(), x.end());
    std::vector<TestResult> results;
    results.push_back(shapiro_wilk(values));
    results.push_back(dagostino_pearson(values));
    results.push_back(lilliefors(values, options.seed, options.lilliefors_replicates));
    return results;
}

}  // namespace oodspec
