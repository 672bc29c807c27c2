#include <doctest.h>

#include <oodspec/ingest.hpp>
#include <oodspec/metrics.hpp>

#include <string>
#include <vector>

#include "test_util.hpp"

using namespace oodspec;

namespace {

// Builds a ResponseSet from parallel (true, response) label lists, assigning
// stable image ids img_00, img_01, ...
ResponseSet make_set(const std::string& system_id,
                     const std::vector<std::string>& truths,
                     const std::vector<std::string>& responses,
                     SystemKind kind = SystemKind::model) {
  REQUIRE(truths.size() == responses.size());
  ResponseSet set;
  set.system_id = system_id;
  set.kind = kind;
  set.condition = {"blur", "1"};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    std::string id = "img_" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    set.pairs.push_back({id, truths[i], responses[i]});
  }
  return set;
}

const CategorySet kAbc{{"a", "b", "c"}};

}  // namespace

TEST_CASE("error_consistency reproduces the hand-worked kappa fixture") {
  // 4 trials, both systems 75% correct, agreeing on correctness twice:
  // p_obs = 0.5, p_exp = 0.625, kappa = -1/3.
  ResponseSet a = make_set("A", {"a", "a", "a", "a"}, {"a", "a", "a", "b"});
  ResponseSet b = make_set("B", {"a", "a", "a", "a"}, {"a", "a", "b", "a"});
  EcBreakdown ec = error_consistency(a, b);
  REQUIRE(ec.ec.has_value());
  CHECK(*ec.ec == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(ec.n == 4);
  CHECK(ec.n_c == 2);
  CHECK(ec.n_e == 0);
  CHECK(ec.p_a == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ec.p_b == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ec.p_obs == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ec.p_exp == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(ec.reason == UndefinedReason::none);
}

TEST_CASE("error_consistency is symmetric and maximal on identical systems") {
  ResponseSet a = make_set("A", {"a", "a", "b", "b"}, {"a", "c", "b", "a"});
  ResponseSet b = make_set("B", {"a", "a", "b", "b"}, {"a", "b", "c", "b"});
  EcBreakdown ab = error_consistency(a, b);
  EcBreakdown ba = error_consistency(b, a);
  REQUIRE(ab.ec.has_value());
  REQUIRE(ba.ec.has_value());
  CHECK(*ab.ec == doctest::Approx(*ba.ec).epsilon(1e-15));

  // A system compared to itself with 0 < accuracy < 1 gives kappa = 1.
  EcBreakdown self = error_consistency(a, a);
  REQUIRE(self.ec.has_value());
  CHECK(*self.ec == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("error_consistency is undefined when chance agreement is one") {
  // Both systems perfect: p_exp = 1, kappa denominator vanishes.
  ResponseSet a = make_set("A", {"a", "b", "c"}, {"a", "b", "c"});
  ResponseSet b = make_set("B", {"a", "b", "c"}, {"a", "b", "c"});
  EcBreakdown ec = error_consistency(a, b);
  CHECK_FALSE(ec.ec.has_value());
  CHECK(ec.reason == UndefinedReason::degenerate_expectation);

  // Both systems fully wrong also degenerates (p_exp = 1 from the error side).
  ResponseSet c = make_set("C", {"a", "a"}, {"b", "b"});
  ResponseSet d = make_set("D", {"a", "a"}, {"c", "c"});
  EcBreakdown ec2 = error_consistency(c, d);
  CHECK_FALSE(ec2.ec.has_value());
  CHECK(ec2.reason == UndefinedReason::degenerate_expectation);
}

TEST_CASE("error_consistency requires comparable stimulus coverage") {
  ResponseSet a = make_set("A", {"a", "b"}, {"a", "b"});
  ResponseSet b = make_set("B", {"a", "b"}, {"a", "b"});
  b.pairs[1].image_id = "img_99";
  CHECK_FAILS_WITH(error_consistency(a, b), errc::non_comparable);

  ResponseSet empty_a = make_set("A", {}, {});
  ResponseSet empty_b = make_set("B", {}, {});
  CHECK_FAILS_WITH(error_consistency(empty_a, empty_b), errc::empty_sample);
}

TEST_CASE("misclassification_agreement reproduces the hand-worked fixture") {
  // 3 joint errors on true class c1 (here 'a'); A answers b,b,c; B answers
  // b,c,c. Agreement 2/3, chance 4/9, kappa = 0.4.
  ResponseSet a = make_set("A", {"a", "a", "a"}, {"b", "b", "c"});
  ResponseSet b = make_set("B", {"a", "a", "a"}, {"b", "c", "c"});
  MaBreakdown ma = misclassification_agreement(a, b, kAbc);
  REQUIRE(ma.ma.has_value());
  CHECK(*ma.ma == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(ma.n_err == 3);
  CHECK(ma.p_o_tilde == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(ma.p_e_tilde == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  REQUIRE(ma.agreement_matrix.size() == 3);
  CHECK(ma.agreement_matrix[1][1] == 1);  // (b, b)
  CHECK(ma.agreement_matrix[1][2] == 1);  // (b, c)
  CHECK(ma.agreement_matrix[2][2] == 1);  // (c, c)
}

TEST_CASE("misclassification_agreement only counts joint errors") {
  // Trials where either system is correct contribute nothing.
  ResponseSet a = make_set("A", {"a", "a", "a", "a"}, {"a", "b", "b", "c"});
  ResponseSet b = make_set("B", {"a", "a", "a", "a"}, {"b", "a", "b", "c"});
  MaBreakdown ma = misclassification_agreement(a, b, kAbc);
  CHECK(ma.n_err == 2);  // only the last two trials are joint errors
}

TEST_CASE("misclassification_agreement undefined cases carry distinct reasons") {
  // No joint errors at all.
  ResponseSet a = make_set("A", {"a", "b"}, {"a", "b"});
  ResponseSet b = make_set("B", {"a", "b"}, {"a", "b"});
  MaBreakdown none = misclassification_agreement(a, b, kAbc);
  CHECK_FALSE(none.ma.has_value());
  CHECK(none.reason == UndefinedReason::no_joint_errors);

  // Every joint error lands on the same (label, label) cell: chance = 1.
  ResponseSet c = make_set("C", {"a", "a", "a"}, {"b", "b", "b"});
  ResponseSet d = make_set("D", {"a", "a", "a"}, {"b", "b", "b"});
  MaBreakdown degen = misclassification_agreement(c, d, kAbc);
  CHECK_FALSE(degen.ma.has_value());
  CHECK(degen.reason == UndefinedReason::degenerate_expectation);
}

TEST_CASE("misclassification_agreement is symmetric") {
  ResponseSet a = make_set("A", {"a", "a", "b", "b", "c"},
                           {"b", "c", "a", "c", "b"});
  ResponseSet b = make_set("B", {"a", "a", "b", "b", "c"},
                           {"c", "c", "c", "a", "a"});
  MaBreakdown ab = misclassification_agreement(a, b, kAbc);
  MaBreakdown ba = misclassification_agreement(b, a, kAbc);
  REQUIRE(ab.ma.has_value());
  REQUIRE(ba.ma.has_value());
  CHECK(*ab.ma == doctest::Approx(*ba.ma).epsilon(1e-15));
}

TEST_CASE("misclassification_agreement rejects labels outside the category set") {
  ResponseSet a = make_set("A", {"a"}, {"z"});
  ResponseSet b = make_set("B", {"a"}, {"b"});
  CHECK_FAILS_WITH(misclassification_agreement(a, b, kAbc),
                   errc::unknown_category);
}

TEST_CASE("error_confusion tallies errors with a structurally zero diagonal") {
  ResponseSet a = make_set("A", {"a", "a", "a", "b", "b", "c"},
                           {"a", "b", "c", "b", "a", "c"});
  ErrorConfusion conf = error_confusion(a, kAbc);
  CHECK(conf.total_errors == 3);
  CHECK(conf.matrix[0][1] == 1);  // a -> b
  CHECK(conf.matrix[0][2] == 1);  // a -> c
  CHECK(conf.matrix[1][0] == 1);  // b -> a
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(conf.matrix[i][i] == 0);
    long row_sum = 0;
    for (std::size_t j = 0; j < 3; ++j) row_sum += conf.matrix[i][j];
    CHECK(row_sum == conf.per_class_errors[i]);
  }
  CHECK(conf.per_class_errors[0] == 2);
  CHECK(conf.per_class_errors[1] == 1);
  CHECK(conf.per_class_errors[2] == 0);
}

TEST_CASE("cled reproduces the frozen smoothed-JSD fixture") {
  // Both systems err only on true class 'a': A always answers b, B always c.
  // Smoothed rows [1,5,1]/7 vs [1,1,5]/7, single class carries weight 1.
  ResponseSet a = make_set("A", {"a", "a", "b"}, {"b", "b", "b"});
  ResponseSet b = make_set("B", {"a", "a", "b"}, {"c", "c", "b"});
  ErrorConfusion ca = error_confusion(a, kAbc);
  ErrorConfusion cb = error_confusion(b, kAbc);
  CledResult r = cled(ca, cb, 0.5);
  REQUIRE(r.cled.has_value());
  CHECK(*r.cled == doctest::Approx(0.29998078144426776).epsilon(1e-6));
  CHECK(r.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.weights[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.per_class_jsd[0] == doctest::Approx(0.29998078144426776).epsilon(1e-6));
}

TEST_CASE("cled is zero for identical error profiles and symmetric otherwise") {
  ResponseSet a = make_set("A", {"a", "a", "b", "c"}, {"b", "c", "a", "a"});
  ResponseSet b = make_set("B", {"a", "a", "b", "c"}, {"c", "c", "c", "b"});
  ErrorConfusion ca = error_confusion(a, kAbc);
  ErrorConfusion cb = error_confusion(b, kAbc);

  CledResult self = cled(ca, ca);
  REQUIRE(self.cled.has_value());
  CHECK(*self.cled == doctest::Approx(0.0).epsilon(1e-12));

  CledResult ab = cled(ca, cb);
  CledResult ba = cled(cb, ca);
  REQUIRE(ab.cled.has_value());
  REQUIRE(ba.cled.has_value());
  CHECK(*ab.cled == doctest::Approx(*ba.cled).epsilon(1e-15));
  CHECK(*ab.cled >= 0.0);
  CHECK(*ab.cled <= 1.0);

  double weight_sum = 0.0;
  for (double w : ab.weights) weight_sum += w;
  CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cled undefined and invalid-argument handling") {
  ResponseSet perfect = make_set("A", {"a", "b"}, {"a", "b"});
  ErrorConfusion none = error_confusion(perfect, kAbc);
  CledResult r = cled(none, none);
  CHECK_FALSE(r.cled.has_value());
  CHECK(r.reason == UndefinedReason::no_errors);

  ResponseSet some = make_set("B", {"a", "b"}, {"b", "b"});
  ErrorConfusion conf = error_confusion(some, kAbc);
  CHECK_FAILS_WITH(cled(conf, conf, 0.0), errc::domain_error);
  CHECK_FAILS_WITH(cled(conf, conf, -1.0), errc::domain_error);

  ErrorConfusion wrong_size;
  wrong_size.matrix.assign(2, std::vector<long>(2, 0));
  wrong_size.per_class_errors.assign(2, 0);
  CHECK_FAILS_WITH(cled(conf, wrong_size), errc::non_comparable);
}

TEST_CASE("cled with one-sided errors is still defined") {
  // Only system A errs; total error mass is positive, so the metric exists.
  ResponseSet a = make_set("A", {"a", "a"}, {"b", "c"});
  ResponseSet b = make_set("B", {"a", "a"}, {"a", "a"});
  ErrorConfusion ca = error_confusion(a, kAbc);
  ErrorConfusion cb = error_confusion(b, kAbc);
  CledResult r = cled(ca, cb);
  REQUIRE(r.cled.has_value());
  CHECK(*r.cled > 0.0);
}

TEST_CASE("undefined_reason_name yields stable tokens") {
  CHECK(undefined_reason_name(UndefinedReason::none) == "none");
  CHECK(undefined_reason_name(UndefinedReason::degenerate_expectation) ==
        "degenerate_expectation");
  CHECK(undefined_reason_name(UndefinedReason::no_joint_errors) ==
        "no_joint_errors");
  CHECK(undefined_reason_name(UndefinedReason::no_errors) == "no_errors");
}
