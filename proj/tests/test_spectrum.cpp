#include <doctest.h>

#include <oodspec/rng.hpp>
#include <oodspec/spectrum.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "test_util.hpp"

using namespace oodspec;

namespace {

// Two tight, well-separated clusters around fixed centers.
std::vector<double> two_cluster_data(std::uint64_t seed, int per_cluster,
                                     double mu1, double mu2, double sd) {
  Rng rng = seeded_rng(seed, 0);
  std::vector<double> data;
  for (int i = 0; i < per_cluster; ++i)
    data.push_back(mu1 + sd * standard_normal(rng));
  for (int i = 0; i < per_cluster; ++i)
    data.push_back(mu2 + sd * standard_normal(rng));
  return data;
}

}  // namespace

TEST_CASE("fit_gmm_1d recovers two well-separated components") {
  std::vector<double> data = two_cluster_data(11, 60, 0.0, -6.0, 0.3);
  GmmFit fit = fit_gmm_1d(data, 2, 7);
  REQUIRE(fit.k == 2);
  REQUIRE(fit.means.size() == 2);
  CHECK(fit.converged);
  // Canonical order: descending means.
  CHECK(fit.means[0] > fit.means[1]);
  CHECK(std::abs(fit.means[0] - 0.0) < 0.15);
  CHECK(std::abs(fit.means[1] + 6.0) < 0.15);
  CHECK(std::abs(fit.weights[0] - 0.5) < 0.1);
  double weight_sum = fit.weights[0] + fit.weights[1];
  CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : fit.variances) CHECK(v > 0.0);
}

TEST_CASE("fit_gmm_1d is deterministic per seed") {
  std::vector<double> data = two_cluster_data(21, 40, 1.0, -3.0, 0.4);
  GmmFit a = fit_gmm_1d(data, 3, 99);
  GmmFit b = fit_gmm_1d(data, 3, 99);
  REQUIRE(a.means.size() == b.means.size());
  for (std::size_t i = 0; i < a.means.size(); ++i) {
    CHECK(a.means[i] == b.means[i]);
    CHECK(a.weights[i] == b.weights[i]);
    CHECK(a.variances[i] == b.variances[i]);
  }
  CHECK(a.log_likelihood == b.log_likelihood);
}

TEST_CASE("fit_gmm_1d input validation") {
  std::vector<double> tiny{1.0, 2.0};
  CHECK_FAILS_WITH(fit_gmm_1d(tiny, 3, 0), errc::too_few_points);

  std::vector<double> data = two_cluster_data(5, 10, 0.0, -4.0, 0.2);
  data[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FAILS_WITH(fit_gmm_1d(data, 2, 0), errc::non_finite_data);

  CHECK_FAILS_WITH(fit_gmm_1d(two_cluster_data(5, 10, 0, -4, 0.2), 0, 0),
                   errc::domain_error);
}

TEST_CASE("k=1 fit matches the sample moments") {
  std::vector<double> data{1.0, 2.0, 3.0, 4.0, 5.0};
  GmmFit fit = fit_gmm_1d(data, 1, 0);
  REQUIRE(fit.k == 1);
  CHECK(fit.means[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
  // ML variance (ddof=0) of {1..5} is 2.
  CHECK(fit.variances[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("posterior responsibilities sum to one and favor the near component") {
  std::vector<double> data = two_cluster_data(31, 50, 2.0, -5.0, 0.3);
  GmmFit fit = fit_gmm_1d(data, 2, 3);
  for (double x : {2.0, -5.0, -1.5}) {
    std::vector<double> post = posterior(fit, x);
    REQUIRE(post.size() == 2);
    double total = post[0] + post[1];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Point at a component center is overwhelmingly assigned to it.
  CHECK(posterior(fit, 2.0)[0] > 0.999);
  CHECK(posterior(fit, -5.0)[1] > 0.999);
}

TEST_CASE("select_model picks four components for four planted clusters") {
  Rng rng = seeded_rng(1234, 9);
  std::vector<double> data;
  for (double mu : {0.0, -2.5, -5.0, -7.5}) {
    // Tight clusters: the small-sample criterion's light penalty at this n
    // only rejects spurious within-cluster splits once the variance floor
    // regularizes them, which requires strong separation relative to spread.
    for (int i = 0; i < 40; ++i) data.push_back(mu + 0.005 * standard_normal(rng));
  }
  ModelSelection sel = select_model(data, 1, 6, 77);
  CHECK(sel.best_bic_k == 4);
  CHECK(sel.best_aicc_k == 4);
  CHECK(sel.criteria_agree);
  CHECK(sel.skipped_k.empty());
  REQUIRE(sel.candidates.size() == 6);
  for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
    CHECK(sel.candidates[i].k == static_cast<int>(i) + 1);
    CHECK(std::isfinite(sel.candidates[i].bic));
  }
  // BIC at the winner is minimal across candidates.
  double best_bic = std::numeric_limits<double>::infinity();
  for (const auto& c : sel.candidates) best_bic = std::min(best_bic, c.bic);
  for (const auto& c : sel.candidates) {
    if (c.k == sel.best_bic_k)
      CHECK(c.bic == doctest::Approx(best_bic).epsilon(1e-12));
  }
}

TEST_CASE("select_model skips k where AICc is undefined (n <= p + 1)") {
  // n = 12: k=4 has p=11 -> n <= 12 fails the AICc requirement n > p+1.
  Rng rng = seeded_rng(4, 0);
  std::vector<double> data;
  for (int i = 0; i < 6; ++i) data.push_back(0.0 + 0.1 * standard_normal(rng));
  for (int i = 0; i < 6; ++i) data.push_back(-4.0 + 0.1 * standard_normal(rng));
  ModelSelection sel = select_model(data, 1, 5, 3);
  CHECK(std::find(sel.skipped_k.begin(), sel.skipped_k.end(), 4) !=
        sel.skipped_k.end());
  CHECK(std::find(sel.skipped_k.begin(), sel.skipped_k.end(), 5) !=
        sel.skipped_k.end());
  // Skipped k values contribute no candidates.
  for (const auto& c : sel.candidates) CHECK(c.k < 4);
  CHECK(sel.best_bic_k == 2);
}

TEST_CASE("select_model validates its k range") {
  std::vector<double> data = two_cluster_data(6, 30, 0.0, -4.0, 0.3);
  CHECK_FAILS_WITH(select_model(data, 3, 2, 0), errc::domain_error);
  CHECK_FAILS_WITH(select_model(data, 0, 4, 0), errc::domain_error);
  std::vector<double> tiny{1.0, 2.0, 3.0};
  CHECK_FAILS_WITH(select_model(tiny, 1, 4, 0), errc::too_few_points);
}

TEST_CASE("assign_regimes names four regimes canonically, others generically") {
  std::vector<double> data;
  Rng rng = seeded_rng(8, 2);
  std::vector<double> centers{0.0, -3.0, -6.0, -9.0};
  for (double mu : centers) {
    for (int i = 0; i < 30; ++i) data.push_back(mu + 0.2 * standard_normal(rng));
  }
  GmmFit fit = fit_gmm_1d(data, 4, 5);

  std::vector<OODScore> scores;
  auto add_score = [&](const std::string& type, const std::string& level,
                       double delta) {
    OODScore s;
    s.condition = {type, level};
    s.delta = delta;
    scores.push_back(s);
  };
  add_score("blur", "0", 0.05);
  add_score("blur", "1", -3.1);
  add_score("blur", "2", -5.9);
  add_score("blur", "3", -9.2);

  RegimeAssignment ra = assign_regimes(fit, scores);
  REQUIRE(ra.regimes.size() == 4);
  CHECK(ra.regimes[0] == "reference");
  CHECK(ra.regimes[1] == "near-OOD");
  CHECK(ra.regimes[2] == "far-OOD");
  CHECK(ra.regimes[3] == "extreme-OOD");
  CHECK(ra.assignment.at("blur_0") == "reference");
  CHECK(ra.assignment.at("blur_1") == "near-OOD");
  CHECK(ra.assignment.at("blur_2") == "far-OOD");
  CHECK(ra.assignment.at("blur_3") == "extreme-OOD");

  // Component means descend alongside the labels.
  for (std::size_t i = 0; i + 1 < ra.component_means.size(); ++i) {
    CHECK(ra.component_means[i] > ra.component_means[i + 1]);
  }

  // Boundaries sit strictly between adjacent component means, descending.
  REQUIRE(ra.boundaries.size() == 3);
  for (std::size_t i = 0; i < ra.boundaries.size(); ++i) {
    CHECK(ra.boundaries[i] < ra.component_means[i]);
    CHECK(ra.boundaries[i] > ra.component_means[i + 1]);
  }

  // Responsibilities are recorded per condition and sum to one.
  for (const auto& [cid, post] : ra.responsibilities) {
    double total = 0.0;
    for (double p : post) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Non-four component counts fall back to generic regime names.
  GmmFit fit2 = fit_gmm_1d(data, 2, 5);
  RegimeAssignment ra2 = assign_regimes(fit2, scores);
  REQUIRE(ra2.regimes.size() == 2);
  CHECK(ra2.regimes[0] == "regime_1");
  CHECK(ra2.regimes[1] == "regime_2");
}

TEST_CASE("build_spectrum runs the full pipeline on synthetic human sets") {
  // Four humans, two distortion types with a shared reference level and
  // increasingly degraded levels; accuracies chosen to form two clusters on
  // the logit scale.
  AnalysisConfig config;
  config.categories = {"a", "b"};
  config.references = {{"blur", "0"}, {"noise", "0"}};

  ResponseSetMap sets;
  auto add_set = [&](const std::string& sys, const std::string& type,
                     const std::string& level, int n_correct, int n_total) {
    ResponseSet set;
    set.system_id = sys;
    set.kind = SystemKind::human;
    set.condition = {type, level};
    for (int i = 0; i < n_total; ++i) {
      std::string img = "img_" + std::to_string(i);
      bool correct = i < n_correct;
      set.pairs.push_back({img, "a", correct ? "a" : "b"});
    }
    sets[{sys, set.condition.id()}] = set;
  };

  // Reference accuracy ~0.9 with small jitter per subject; distorted levels
  // degrade from ~0.35 down to ~0.26, forming one low cluster on the logit
  // scale far from the reference cluster.
  int ref_correct[4] = {89, 90, 91, 92};
  int bad_correct[3][4] = {{34, 35, 36, 33}, {30, 31, 32, 29}, {26, 27, 28, 25}};
  for (int s = 0; s < 4; ++s) {
    std::string sys = "subject-0" + std::to_string(s + 1);
    for (const std::string& type : {"blur", "noise"}) {
      add_set(sys, type, "0", ref_correct[s], 100);
      for (int level = 1; level <= 3; ++level) {
        add_set(sys, type, std::to_string(level), bad_correct[level - 1][s],
                100);
      }
    }
  }
  // A model set that must be ignored by the human-side spectrum.
  ResponseSet model;
  model.system_id = "resnet50";
  model.kind = SystemKind::model;
  model.condition = {"blur", "5"};
  model.pairs.push_back({"img_0", "a", "b"});
  sets[{model.system_id, "blur_5"}] = model;

  SpectrumOptions opt;
  opt.k_min = 1;
  opt.k_max = 2;
  opt.seed = 11;
  SpectrumResult res = build_spectrum(sets, config, opt);

  CHECK(res.n_reference_values == 8);  // 4 subjects x 2 reference conditions
  REQUIRE(res.reference_condition_ids.size() == 2);
  CHECK(res.scores.size() == 8);  // 2 types x 4 levels
  CHECK(res.selection.best_bic_k == 2);
  CHECK(res.fit.k == 2);

  // Reference conditions score near zero, distorted ones far below.
  for (const OODScore& s : res.scores) {
    if (config.is_reference(s.condition)) {
      CHECK(std::abs(s.delta) < 2.0);
    } else {
      CHECK(s.delta < -5.0);
    }
    CHECK(s.reference_mean == doctest::Approx(res.reference_mean).epsilon(1e-12));
  }

  // Regime assignment covers every scored condition.
  for (const OODScore& s : res.scores) {
    CHECK(res.regimes.assignment.count(s.condition.id()) == 1);
  }
  CHECK(res.options_used.seed == 11);
}

TEST_CASE("build_spectrum requires a usable reference pool") {
  AnalysisConfig config;
  config.categories = {"a", "b"};
  config.references = {{"blur", "0"}};

  ResponseSetMap sets;
  ResponseSet set;
  set.system_id = "subject-01";
  set.kind = SystemKind::human;
  set.condition = {"blur", "0"};
  set.pairs.push_back({"img_0", "a", "a"});
  sets[{set.system_id, "blur_0"}] = set;
  // Only one reference value: sd undefined.
  CHECK_FAILS_WITH(build_spectrum(sets, config, {}), errc::degenerate_reference);
}
