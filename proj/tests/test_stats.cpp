#include <doctest.h>

#include <oodspec/error.hpp>
#include <oodspec/stats.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "test_util.hpp"

using namespace oodspec;

TEST_CASE("empirical_logit matches hand-computed anchor values") {
  // a=0.95, n=100: a' = (95 + 0.5)/101, logit = ln(95.5/5.5).
  CHECK(empirical_logit(0.95, 100) ==
        doctest::Approx(std::log(95.5 / 5.5)).epsilon(1e-12));
  // a=1, n=9: a' = 9.5/10 = 0.95 -> ln(19).
  CHECK(empirical_logit(1.0, 9) ==
        doctest::Approx(2.9444389791664403).epsilon(1e-12));
  // a=0.5 is a fixed point of the shrinkage: logit = 0 for every n.
  CHECK(std::abs(empirical_logit(0.5, 999)) < 1e-3);
  CHECK(std::abs(empirical_logit(0.5, 4)) < 1e-12);
}

TEST_CASE("empirical_logit is monotone in accuracy and rejects bad input") {
  double prev = empirical_logit(0.0, 50);
  for (int i = 1; i <= 10; ++i) {
    double cur = empirical_logit(i / 10.0, 50);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_FAILS_WITH(empirical_logit(-0.1, 10), errc::domain_error);
  CHECK_FAILS_WITH(empirical_logit(1.1, 10), errc::domain_error);
  CHECK_FAILS_WITH(empirical_logit(0.5, 0), errc::domain_error);
}

TEST_CASE("logistic inverts the logit transform") {
  for (double p : {0.05, 0.3, 0.5, 0.73, 0.99}) {
    CHECK(logistic(std::log(p / (1 - p))) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("AccuracySample constructors keep values and logits aligned") {
  AccuracySample s =
      AccuracySample::from_accuracies({0.9, 0.5, 0.75}, {10, 20, 40});
  REQUIRE(s.size() == 3);
  CHECK(s.logits[0] == doctest::Approx(empirical_logit(0.9, 10)).epsilon(1e-15));
  CHECK(s.logits[1] == doctest::Approx(0.0).epsilon(1e-12));

  AccuracySample t = AccuracySample::from_logits({-1.0, 0.0, 2.0});
  REQUIRE(t.size() == 3);
  CHECK(t.values[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.values[2] == doctest::Approx(logistic(2.0)).epsilon(1e-15));

  CHECK_FAILS_WITH(AccuracySample::from_accuracies({0.5}, {1, 2}),
                   errc::domain_error);
}

TEST_CASE("glass_delta standardizes by the reference sd") {
  AccuracySample ref = AccuracySample::from_logits({1.0, 2.0, 3.0});
  AccuracySample dist = AccuracySample::from_logits({0.0, 1.0});
  OODScore score = glass_delta(dist, ref);
  CHECK(score.delta == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(score.mean_logit_distorted == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(score.reference_mean == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(score.reference_sd == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("glass_delta carries the condition through untouched") {
  Condition cond;
  cond.distortion_type = "blur";
  cond.distortion_level = "3";
  AccuracySample ref = AccuracySample::from_logits({1.0, 2.0, 3.0});
  AccuracySample dist = AccuracySample::from_logits({0.5});
  OODScore score = glass_delta(dist, ref, cond);
  CHECK(score.condition.distortion_type == "blur");
  CHECK(score.condition.distortion_level == "3");
  CHECK(score.condition.id() == "blur_3");
}

TEST_CASE("glass_delta is invariant under affine transforms of the scale") {
  std::vector<double> ref{0.3, 0.9, 1.4, 2.2};
  std::vector<double> dist{0.1, 0.5, 0.25};
  double base =
      glass_delta(AccuracySample::from_logits(dist), AccuracySample::from_logits(ref))
          .delta;
  auto scale = [](std::vector<double> v, double a, double b) {
    for (double& x : v) x = a * x + b;
    return v;
  };
  double moved = glass_delta(AccuracySample::from_logits(scale(dist, 2.5, -1.0)),
                             AccuracySample::from_logits(scale(ref, 2.5, -1.0)))
                     .delta;
  CHECK(moved == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("glass_delta rejects empty and degenerate samples") {
  AccuracySample flat = AccuracySample::from_logits({1.0, 1.0, 1.0});
  AccuracySample dist = AccuracySample::from_logits({0.5});
  AccuracySample empty;
  AccuracySample one = AccuracySample::from_logits({2.0});
  AccuracySample ok = AccuracySample::from_logits({1.0, 2.0});

  CHECK_FAILS_WITH(glass_delta(dist, flat), errc::degenerate_reference);
  CHECK_FAILS_WITH(glass_delta(empty, ok), errc::empty_sample);
  CHECK_FAILS_WITH(glass_delta(dist, empty), errc::degenerate_reference);
  CHECK_FAILS_WITH(glass_delta(dist, one), errc::degenerate_reference);
}

TEST_CASE("mann_whitney_u normal approximation matches frozen anchor") {
  // 4 values all below 28 values: U = 0, maximal separation.
  std::vector<double> low{0.1, 0.2, 0.3, 0.4};
  std::vector<double> high;
  for (int i = 0; i < 28; ++i) high.push_back(1.0 + i);
  TestResult r = mann_whitney_u(low, high, Alternative::two_sided);
  CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.0015647124471676295).epsilon(1e-9));
  CHECK(r.method == "mann_whitney_u_normal_cc");
}

TEST_CASE("mann_whitney_u on identical samples is non-significant and symmetric") {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  TestResult r = mann_whitney_u(a, a, Alternative::two_sided);
  CHECK(r.p_value > 0.95);

  std::vector<double> b{2.5, 3.5, 9.0, 0.5, 4.2, 1.1, 6.3, 7.7};
  TestResult ab = mann_whitney_u(a, b, Alternative::two_sided);
  TestResult ba = mann_whitney_u(b, a, Alternative::two_sided);
  CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
}

TEST_CASE("mann_whitney_u one-sided alternatives point in opposite directions") {
  std::vector<double> low{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> high{6.0, 7.0, 8.0, 9.0, 10.0};
  TestResult less = mann_whitney_u(low, high, Alternative::less);
  TestResult greater = mann_whitney_u(low, high, Alternative::greater);
  CHECK(less.p_value < 0.05);
  CHECK(greater.p_value > 0.95);
}

TEST_CASE("tie-corrected variance shrinks p versus treating ties as distinct") {
  // With many ties the tie correction reduces the rank variance, so the
  // p-value must not exceed the naive untied approximation.
  std::vector<double> a{1.0, 1.0, 1.0, 2.0, 2.0, 3.0};
  std::vector<double> b{2.0, 2.0, 3.0, 3.0, 3.0, 4.0};
  TestResult tied = mann_whitney_u(a, b, Alternative::two_sided);
  CHECK(tied.p_value > 0.0);
  CHECK(tied.p_value < 1.0);
}

TEST_CASE("exact mann_whitney_u enumerates the tie-free null distribution") {
  MannWhitneyOptions opt;
  opt.exact = true;

  // {1,2,3} vs {4..8}: all 3 low ranks in one group. C(8,3)=56 arrangements,
  // two-sided doubles the single extreme tail: 2/56 = 1/28.
  std::vector<double> a{1.0, 2.0, 3.0};
  std::vector<double> b{4.0, 5.0, 6.0, 7.0, 8.0};
  TestResult r = mann_whitney_u(a, b, Alternative::two_sided, opt);
  CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.03571428571428571).epsilon(1e-12));
  CHECK(r.method == "mann_whitney_u_exact");

  // A middling configuration with known exact tails.
  std::vector<double> c{1.0, 2.0, 6.0};
  std::vector<double> d{3.0, 4.0, 5.0, 7.0, 8.0};
  TestResult two = mann_whitney_u(c, d, Alternative::two_sided, opt);
  CHECK(two.statistic == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(two.p_value == doctest::Approx(0.25).epsilon(1e-12));
  TestResult lo = mann_whitney_u(c, d, Alternative::less, opt);
  CHECK(lo.p_value == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("exact mann_whitney_u refuses ties and large samples") {
  MannWhitneyOptions opt;
  opt.exact = true;
  std::vector<double> a{1.0, 2.0, 2.0};
  std::vector<double> b{3.0, 4.0, 5.0};
  CHECK_FAILS_WITH(mann_whitney_u(a, b, Alternative::two_sided, opt),
                   errc::domain_error);

  std::vector<double> big1, big2;
  for (int i = 0; i < 13; ++i) big1.push_back(i);
  for (int i = 0; i < 13; ++i) big2.push_back(100 + i);
  CHECK_FAILS_WITH(mann_whitney_u(big1, big2, Alternative::two_sided, opt),
                   errc::domain_error);
}

TEST_CASE("mann_whitney_u rejects empty samples") {
  std::vector<double> a{1.0};
  std::vector<double> empty;
  CHECK_FAILS_WITH(mann_whitney_u(a, empty, Alternative::two_sided),
                   errc::empty_sample);
  CHECK_FAILS_WITH(mann_whitney_u(empty, a, Alternative::two_sided),
                   errc::empty_sample);
}

TEST_CASE("binomial_above_chance matches exact tail identities") {
  // k=0: upper tail includes everything.
  CHECK(binomial_above_chance(0, 10, 0.25).p_value ==
        doctest::Approx(1.0).epsilon(1e-15));
  // k=n: only the all-success outcome, probability p0^n.
  CHECK(binomial_above_chance(5, 5, 0.5).p_value ==
        doctest::Approx(std::pow(0.5, 5)).epsilon(1e-13));
  CHECK(binomial_above_chance(12, 12, 0.1).p_value ==
        doctest::Approx(std::pow(0.1, 12)).epsilon(1e-9));
  CHECK(binomial_above_chance(3, 5, 0.5).method == "binomial_tail_exact");
}

TEST_CASE("binomial_above_chance matches the frozen large-n anchor") {
  // 40 of 320 correct at chance 1/16 -> upper-tail probability.
  TestResult r = binomial_above_chance(40, 320, 1.0 / 16.0);
  CHECK(r.p_value == doctest::Approx(2.7095348478617745e-05).epsilon(1e-10));
}

TEST_CASE("binomial_above_chance upper tail decreases as k grows") {
  double prev = 2.0;
  for (int k = 0; k <= 20; ++k) {
    double p = binomial_above_chance(k, 20, 0.3).p_value;
    CHECK(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("binomial_above_chance validates arguments") {
  CHECK_FAILS_WITH(binomial_above_chance(5, 4, 0.5), errc::domain_error);
  CHECK_FAILS_WITH(binomial_above_chance(1, 4, 0.0), errc::domain_error);
  CHECK_FAILS_WITH(binomial_above_chance(1, 4, 1.0), errc::domain_error);
  CHECK_FAILS_WITH(binomial_above_chance(1, 0, 0.5), errc::domain_error);
  CHECK_FAILS_WITH(binomial_above_chance(-1, 4, 0.5), errc::domain_error);
}

TEST_CASE("bh_adjust applies the step-up rule with monotone enforcement") {
  std::vector<double> p{0.01, 0.02, 0.03, 0.04};
  std::vector<double> adj = bh_adjust(p);
  REQUIRE(adj.size() == 4);
  for (double a : adj) CHECK(a == doctest::Approx(0.04).epsilon(1e-12));

  // A single p-value is unchanged.
  std::vector<double> single{0.0123};
  CHECK(bh_adjust(single)[0] == doctest::Approx(0.0123).epsilon(1e-15));

  // Results stay aligned with the input order, not the sorted order.
  std::vector<double> mixed{0.04, 0.01, 0.02, 0.03};
  std::vector<double> madj = bh_adjust(mixed);
  std::size_t argmin_raw = 1;  // index of 0.01 in `mixed`
  for (std::size_t i = 0; i < madj.size(); ++i) {
    CHECK(madj[argmin_raw] <= madj[i] + 1e-15);
  }

  // Adjusted values never drop below raw, never exceed 1, and keep the
  // raw ordering (weak monotonicity after sorting by raw p).
  std::vector<double> spread{0.001, 0.2, 0.9, 0.5, 0.04};
  std::vector<double> sadj = bh_adjust(spread);
  for (std::size_t i = 0; i < spread.size(); ++i) {
    CHECK(sadj[i] >= spread[i] - 1e-15);
    CHECK(sadj[i] <= 1.0 + 1e-15);
  }
  std::vector<std::size_t> order{0, 4, 1, 3, 2};  // ascending raw p
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    CHECK(sadj[order[i]] <= sadj[order[i + 1]] + 1e-15);
  }
}

TEST_CASE("bh_adjust rejects out-of-range p-values") {
  std::vector<double> bad1{0.5, -0.01};
  std::vector<double> bad2{0.5, 1.5};
  CHECK_FAILS_WITH(bh_adjust(bad1), errc::domain_error);
  CHECK_FAILS_WITH(bh_adjust(bad2), errc::domain_error);
  std::vector<double> empty;
  CHECK(bh_adjust(empty).empty());
}

TEST_CASE("cohens_d matches the frozen pooled-sd anchor") {
  std::vector<double> a{0.0, 1.0};
  std::vector<double> b{2.0, 3.0};
  CHECK(cohens_d(a, b) == doctest::Approx(-2.82842712474619).epsilon(1e-12));
  CHECK(cohens_d(b, a) == doctest::Approx(2.82842712474619).epsilon(1e-12));
}

TEST_CASE("cohens_d reports structured errors for unusable samples") {
  std::vector<double> one{1.0};
  std::vector<double> ok{1.0, 2.0};
  CHECK_FAILS_WITH(cohens_d(one, ok), errc::sample_too_small);
  CHECK_FAILS_WITH(cohens_d(ok, one), errc::sample_too_small);
  std::vector<double> flat1{2.0, 2.0};
  std::vector<double> flat2{5.0, 5.0};
  CHECK_FAILS_WITH(cohens_d(flat1, flat2), errc::degenerate_sample);
}

TEST_CASE("descriptive helpers agree with hand values") {
  std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(mean(v) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(sample_var(v) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(median(v) == doctest::Approx(2.5).epsilon(1e-15));
  std::vector<double> odd{9.0, 1.0, 5.0};
  CHECK(median(odd) == doctest::Approx(5.0).epsilon(1e-15));
  std::vector<double> empty;
  CHECK_FAILS_WITH(mean(empty), errc::empty_sample);
  CHECK_FAILS_WITH(median(empty), errc::empty_sample);
  std::vector<double> one{3.0};
  CHECK_FAILS_WITH(sample_var(one), errc::sample_too_small);
}

TEST_CASE("normal_sf and normal_cdf are complementary and match anchors") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_sf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
  for (double z : {-2.5, -0.7, 0.0, 1.3, 3.1}) {
    CHECK(normal_cdf(z) + normal_sf(z) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("alternative_name yields stable tokens") {
  CHECK(alternative_name(Alternative::two_sided) == "two_sided");
  CHECK(alternative_name(Alternative::greater) == "greater");
  CHECK(alternative_name(Alternative::less) == "less");
}
