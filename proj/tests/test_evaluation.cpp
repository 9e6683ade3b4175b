#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "lrknn/evaluation.hpp"
#include "lrknn/rng.hpp"

using namespace lrknn;

namespace {

// independent pairwise comparison count: wins + half-ties over all pos/neg pairs
double pairwise_auc(const ScoredSet& s) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.labels[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s.labels[j]) continue;
      ++pairs;
      if (s.scores[i] > s.scores[j]) sum += 1.0;
      else if (s.scores[i] == s.scores[j]) sum += 0.5;
    }
  }
  return sum / static_cast<double>(pairs);
}

ScoredSet random_set(Rng& rng, std::size_t n, int grid) {
  ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    s.scores.push_back(static_cast<double>(rng.below(static_cast<std::uint64_t>(grid))) /
                       static_cast<double>(grid));
    s.labels.push_back(static_cast<std::uint8_t>(rng.bernoulli(0.4)));
  }
  // ensure both classes
  s.labels[0] = 1;
  s.labels[n - 1] = 0;
  return s;
}

} // namespace

TEST_CASE("AUC matches hand-counted pair wins", "[evaluation]") {
  // pairs: (.8,.6)+, (.8,.2)+, (.4,.6)-, (.4,.2)+ -> 3/4
  CHECK(auc({{0.8, 0.4, 0.6, 0.2}, {1, 1, 0, 0}}) == 0.75);
  CHECK(auc({{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}}) == 1.0);
  CHECK(auc({{0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}}) == 0.0);
  CHECK(auc({{0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}}) == 0.5);
  CHECK(auc({{0.7, 0.7, 0.3}, {1, 0, 0}}) == 0.75); // one tie, one win
}

TEST_CASE("flipping all labels mirrors the AUC around one half", "[evaluation]") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ScoredSet s = random_set(rng, 40, 7);
    ScoredSet flipped = s;
    for (auto& l : flipped.labels) l = l ? 0 : 1;
    CHECK(auc(s) + auc(flipped) == Catch::Approx(1.0).margin(1e-15));
  }
}

TEST_CASE("AUC is invariant under monotone score transforms", "[evaluation]") {
  Rng rng(5);
  ScoredSet s = random_set(rng, 60, 11);
  ScoredSet warped = s;
  for (auto& x : warped.scores) x = std::exp(3.0 * x) - 0.5;
  CHECK(auc(warped) == auc(s)); // ranks unchanged, bitwise equal
}

TEST_CASE("rank-based AUC equals the quadratic pairwise scan exactly", "[evaluation]") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const int grid = 2 + static_cast<int>(rng.below(30)); // coarse grids force many ties
    ScoredSet s = random_set(rng, n, grid);
    CHECK(auc(s) == pairwise_auc(s));
  }
}

TEST_CASE("AUC rejects degenerate inputs", "[evaluation]") {
  CHECK_THROWS_AS(auc({{0.5, 0.4}, {1, 1}}), domain_error);
  CHECK_THROWS_AS(auc({{0.5, 0.4}, {0, 0}}), domain_error);
  CHECK_THROWS_AS(auc({{}, {}}), domain_error);
  CHECK_THROWS_AS(auc({{0.5}, {1, 0}}), domain_error);
  CHECK_THROWS_AS(auc({{0.5, std::nan("")}, {1, 0}}), domain_error);
}

TEST_CASE("the ROC staircase starts at the origin and ends at (1,1)", "[evaluation]") {
  Rng rng(9);
  ScoredSet s = random_set(rng, 50, 6);
  auto points = roc_points(s);
  REQUIRE(points.size() >= 2);
  CHECK(std::isinf(points.front().threshold));
  CHECK(points.front().fpr == 0.0);
  CHECK(points.front().tpr == 0.0);
  CHECK(points.back().fpr == 1.0);
  CHECK(points.back().tpr == 1.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].threshold < points[i - 1].threshold);
    CHECK(points[i].fpr >= points[i - 1].fpr);
    CHECK(points[i].tpr >= points[i - 1].tpr);
  }
}

TEST_CASE("trapezoids under the ROC curve integrate to the AUC", "[evaluation]") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    ScoredSet s = random_set(rng, 30 + rng.below(60), 3 + static_cast<int>(rng.below(20)));
    auto points = roc_points(s);
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    CHECK(area == Catch::Approx(auc(s)).margin(1e-12));
  }
}

TEST_CASE("all-tied scores collapse the staircase to two points", "[evaluation]") {
  auto points = roc_points({{0.5, 0.5, 0.5}, {1, 0, 1}});
  REQUIRE(points.size() == 2);
  CHECK(points[1].threshold == 0.5);
  CHECK(points[1].fpr == 1.0);
  CHECK(points[1].tpr == 1.0);
}

TEST_CASE("a perfect classifier's staircase passes through (0,1)", "[evaluation]") {
  auto points = roc_points({{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}});
  bool corner = false;
  for (const auto& p : points) corner = corner || (p.fpr == 0.0 && p.tpr == 1.0);
  CHECK(corner);
}

TEST_CASE("percentiles interpolate between order statistics", "[evaluation]") {
  std::vector<double> sorted{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  // h = 9*0.025 + 1 = 1.225 -> 0.1 + 0.225*(0.2-0.1)
  CHECK(detail::percentile_sorted(sorted, 0.025) == Catch::Approx(0.1225).margin(1e-15));
  CHECK(detail::percentile_sorted(sorted, 0.975) == Catch::Approx(0.9775).margin(1e-15));
  CHECK(detail::percentile_sorted(sorted, 0.0) == 0.1);
  CHECK(detail::percentile_sorted(sorted, 1.0) == 1.0);
  CHECK(detail::percentile_sorted(sorted, 0.5) == Catch::Approx(0.55).margin(1e-15));
  CHECK(detail::percentile_sorted({0.42}, 0.975) == 0.42);
}

TEST_CASE("bootstrap estimates are deterministic in the seed", "[evaluation]") {
  Rng rng(17);
  ScoredSet s = random_set(rng, 80, 9);
  AucEstimate a = bootstrap_auc(s, 100, 42);
  AucEstimate b = bootstrap_auc(s, 100, 42);
  CHECK(a.point_auc == b.point_auc);
  CHECK(a.boot_mean == b.boot_mean);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.replicates == b.replicates);
  CHECK(a.replicate_aucs == b.replicate_aucs);

  AucEstimate c = bootstrap_auc(s, 100, 43);
  CHECK(a.replicate_aucs != c.replicate_aucs);
}

TEST_CASE("thread count never changes bootstrap results", "[evaluation]") {
  Rng rng(19);
  ScoredSet s = random_set(rng, 60, 8);
  AucEstimate one = bootstrap_auc(s, 64, 7, 1);
  for (unsigned threads : {2u, 5u, 16u}) {
    AucEstimate multi = bootstrap_auc(s, 64, 7, threads);
    CHECK(multi.boot_mean == one.boot_mean);
    CHECK(multi.ci_low == one.ci_low);
    CHECK(multi.ci_high == one.ci_high);
    CHECK(multi.replicate_aucs == one.replicate_aucs);
  }
}

TEST_CASE("the interval can be re-derived from the replicate dump", "[evaluation]") {
  Rng rng(23);
  ScoredSet s = random_set(rng, 70, 10);
  AucEstimate est = bootstrap_auc(s, 200, 99);
  REQUIRE(est.replicates == est.replicate_aucs.size());
  std::vector<double> sorted = est.replicate_aucs;
  std::sort(sorted.begin(), sorted.end());
  CHECK(detail::percentile_sorted(sorted, 0.025) == est.ci_low);
  CHECK(detail::percentile_sorted(sorted, 0.975) == est.ci_high);
  double sum = 0.0;
  for (double v : est.replicate_aucs) sum += v;
  CHECK(sum / static_cast<double>(est.replicates) == est.boot_mean);
  CHECK(est.ci_low <= est.boot_mean);
  CHECK(est.boot_mean <= est.ci_high);
}

TEST_CASE("a perfectly separated set bootstraps to a degenerate interval", "[evaluation]") {
  ScoredSet s{{0.9, 0.85, 0.8, 0.2, 0.15, 0.1}, {1, 1, 1, 0, 0, 0}};
  AucEstimate est = bootstrap_auc(s, 50, 5);
  CHECK(est.point_auc == 1.0);
  CHECK(est.ci_low == 1.0);
  CHECK(est.ci_high == 1.0);
  CHECK(est.boot_mean == 1.0);
  CHECK(est.replicates == 50);
}

TEST_CASE("wider samples tighten the bootstrap interval", "[evaluation]") {
  double small_width = 0.0, big_width = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    ScoredSet small_set = random_set(rng, 50, 9);
    ScoredSet big_set = random_set(rng, 500, 9);
    AucEstimate se = bootstrap_auc(small_set, 200, seed);
    AucEstimate be = bootstrap_auc(big_set, 200, seed);
    small_width += se.ci_high - se.ci_low;
    big_width += be.ci_high - be.ci_low;
  }
  CHECK(big_width < small_width);
}

TEST_CASE("bootstrap validates the replicate count", "[evaluation]") {
  ScoredSet s{{0.9, 0.1}, {1, 0}};
  CHECK_THROWS_AS(bootstrap_auc(s, 0, 1), domain_error);
  AucEstimate est = bootstrap_auc(s, 3, 1);
  CHECK(est.replicates == 3); // resampling retries until both labels appear
}

TEST_CASE("the JSON report carries every estimate field", "[evaluation]") {
  ScoredSet s{{0.9, 0.7, 0.3, 0.1}, {1, 1, 0, 0}};
  AucEstimate est = bootstrap_auc(s, 20, 11);
  nlohmann::json j = auc_report_json(est);
  CHECK(j["point_auc"] == est.point_auc);
  CHECK(j["boot_mean"] == est.boot_mean);
  CHECK(j["ci_low"] == est.ci_low);
  CHECK(j["ci_high"] == est.ci_high);
  CHECK(j["replicates"] == est.replicates);
  CHECK(j["seed"] == est.seed);
  CHECK(j["replicate_aucs"].size() == est.replicate_aucs.size());
}

TEST_CASE("ROC tables render as threshold/fpr/tpr rows", "[evaluation]") {
  std::string csv = roc_csv({RocPoint{0.5, 0.25, 0.75}});
  CHECK(csv == "threshold,fpr,tpr\n0.5,0.25,0.75\n");
}

TEST_CASE("scored sets parse from CSV with flexible column order", "[evaluation]") {
  std::istringstream in("label,extra,score\n1,x,0.9\n0,y,0.4\n");
  ScoredSet s = scored_set_from_csv(in);
  REQUIRE(s.size() == 2);
  CHECK(s.scores == std::vector<double>{0.9, 0.4});
  CHECK(s.labels == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("score CSV parsing rejects malformed input", "[evaluation]") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return scored_set_from_csv(in);
  };
  CHECK_THROWS_AS(parse(""), domain_error);
  CHECK_THROWS_AS(parse("score,other\n0.5,1\n"), domain_error);
  CHECK_THROWS_AS(parse("score,label\n"), domain_error);
  CHECK_THROWS_AS(parse("score,label\nabc,1\n"), domain_error);
  CHECK_THROWS_AS(parse("score,label\n0.5,2\n"), domain_error);
  CHECK_THROWS_AS(parse("score,label\n0.5\n"), domain_error);
}
