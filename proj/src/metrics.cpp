#include "oodspec/metrics.hpp"

#include <cmath>

namespace oodspec {

namespace {

void require_comparable(const ResponseSet& a, const ResponseSet& b,
                        const char* op) {
    if (!comparable(a, b)) {
        fail(errc::non_comparable,
             std::string(op) + ": response sets '" + a.system_id + "' and '" +
                 b.system_id + "' cover different stimuli");
    }
}

}  // namespace

std::string_view undefined_reason_name(UndefinedReason reason) {
    switch (reason) {
        case UndefinedReason::none: return "none";
        case UndefinedReason::degenerate_expectation:
            return "degenerate_expectation";
        case UndefinedReason::no_joint_errors: return "no_joint_errors";
        case UndefinedReason::no_errors: return "no_errors";
    }
    return "unknown";
}

EcBreakdown error_consistency(const ResponseSet& a, const ResponseSet& b) {
    require_comparable(a, b, "error_consistency");
    if (a.pairs.empty())
        fail(errc::empty_sample, "error_consistency: empty response sets");

    EcBreakdown out;
    out.n = static_cast<long>(a.pairs.size());
    long correct_a = 0, correct_b = 0;
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        bool ca = a.pairs[i].correct();
        bool cb = b.pairs[i].correct();
        correct_a += ca ? 1 : 0;
        correct_b += cb ? 1 : 0;
        if (ca && cb) ++out.n_c;
        if (!ca && !cb) ++out.n_e;
    }
    double n = static_cast<double>(out.n);
    out.p_a = static_cast<double>(correct_a) / n;
    out.p_b = static_cast<double>(correct_b) / n;
    out.p_obs = static_cast<double>(out.n_c + out.n_e) / n;
    out.p_exp = out.p_a * out.p_b + (1.0 - out.p_a) * (1.0 - out.p_b);
    if (!(out.p_exp < 1.0)) {
        out.reason = UndefinedReason::degenerate_expectation;
        return out;
    }
    out.ec = (out.p_obs - out.p_exp) / (1.0 - out.p_exp);
    return out;
}

MaBreakdown misclassification_agreement(const ResponseSet& a,
                                        const ResponseSet& b,
                                        const CategorySet& categories) {
    require_comparable(a, b, "misclassification_agreement");
    std::size_t c = categories.size();
    MaBreakdown out;
    out.agreement_matrix.assign(c, std::vector<long>(c, 0));
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        if (a.pairs[i].correct() || b.pairs[i].correct()) continue;
        int ia = categories.require(a.pairs[i].response_category);
        int ib = categories.require(b.pairs[i].response_category);
        out.agreement_matrix[ia][ib] += 1;
        ++out.n_err;
    }
    if (out.n_err == 0) {
        out.reason = UndefinedReason::no_joint_errors;
        return out;
    }
    double n_err = static_cast<double>(out.n_err);
    double trace = 0.0, p_e = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        trace += static_cast<double>(out.agreement_matrix[i][i]);
        long row = 0, col = 0;
        for (std::size_t j = 0; j < c; ++j) {
            row += out.agreement_matrix[i][j];
            col += out.agreement_matrix[j][i];
        }
        p_e += (static_cast<double>(row) / n_err) *
               (static_cast<double>(col) / n_err);
    }
    out.p_o_tilde = trace / n_err;
    out.p_e_tilde = p_e;
    if (!(out.p_e_tilde < 1.0)) {
        out.reason = UndefinedReason::degenerate_expectation;
        return out;
    }
    out.ma = (out.p_o_tilde - out.p_e_tilde) / (1.0 - out.p_e_tilde);
    return out;
}

ErrorConfusion error_confusion(const ResponseSet& a,
                               const CategorySet& categories) {
    std::size_t c = categories.size();
    ErrorConfusion out;
    out.matrix.assign(c, std::vector<long>(c, 0));
    out.per_class_errors.assign(c, 0);
    for (const auto& pair : a.pairs) {
        if (pair.correct()) continue;
        int it = categories.require(pair.true_category);
        int ir = categories.require(pair.response_category);
        out.matrix[it][ir] += 1;
        out.per_class_errors[it] += 1;
        out.total_errors += 1;
    }
    return out;
}

CledResult cled(const ErrorConfusion& a, const ErrorConfusion& b, double alpha) {
    if (!(alpha > 0.0)) fail(errc::domain_error, "cled: alpha must be > 0");
    std::size_t c = a.matrix.size();
    if (b.matrix.size() != c)
        fail(errc::non_comparable, "cled: confusion matrices differ in size");

    CledResult out;
    out.alpha = alpha;
    out.per_class_jsd.assign(c, 0.0);
    out.weights.assign(c, 0.0);

    double total_mass =
        static_cast<double>(a.total_errors) + static_cast<double>(b.total_errors);
    if (total_mass <= 0.0) {
        out.reason = UndefinedReason::no_errors;
        return out;
    }

    const double inv_log2 = 1.0 / std::log(2.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        double denom_a =
            static_cast<double>(a.per_class_errors[i]) + alpha * static_cast<double>(c);
        double denom_b =
            static_cast<double>(b.per_class_errors[i]) + alpha * static_cast<double>(c);
        double jsd = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            double pa = (static_cast<double>(a.matrix[i][j]) + alpha) / denom_a;
            double pb = (static_cast<double>(b.matrix[i][j]) + alpha) / denom_b;
            double m = 0.5 * (pa + pb);
            jsd += 0.5 * pa * std::log(pa / m) * inv_log2 +
                   0.5 * pb * std::log(pb / m) * inv_log2;
        }
        // Clamp tiny negative rounding noise; JSD is bounded by [0,1] in base 2.
        jsd = std::min(1.0, std::max(0.0, jsd));
        out.per_class_jsd[i] = jsd;
        out.weights[i] = (static_cast<double>(a.per_class_errors[i]) +
                          static_cast<double>(b.per_class_errors[i])) /
                         total_mass;
        acc += out.weights[i] * jsd;
    }
    out.cled = acc;
    return out;
}

}  // namespace oodspec
