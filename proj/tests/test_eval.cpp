#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "shapegd/eval.hpp"
#include "shapegd/rng.hpp"

using namespace shapegd;

namespace {

std::vector<ScoredUnit> units_of(const std::vector<std::pair<double, Label>>& rows) {
  std::vector<ScoredUnit> out;
  for (const auto& [s, t] : rows) out.push_back({s, t});
  return out;
}

// Independent AUC oracle: the Mann-Whitney pairwise statistic with half
// credit for ties.
double pairwise_auc(const std::vector<ScoredUnit>& units) {
  double wins = 0.0;
  std::size_t pos = 0, neg = 0;
  for (const auto& u : units) (u.truth == Label::malicious ? pos : neg) += 1;
  for (const auto& p : units) {
    if (p.truth != Label::malicious) continue;
    for (const auto& n : units) {
      if (n.truth != Label::benign) continue;
      if (p.score > n.score)
        wins += 1.0;
      else if (p.score == n.score)
        wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace

TEST_CASE("roc_auc on two hand-checked four-unit sets") {
  // Separable pair sets: three of four (pos, neg) pairs ordered correctly.
  const auto mixed = units_of({{0.35, Label::malicious},
                               {0.8, Label::malicious},
                               {0.1, Label::benign},
                               {0.4, Label::benign}});
  CHECK(roc_auc(mixed).auc == Catch::Approx(0.75).margin(1e-12));

  // Fully separated: every malicious score beats every benign score.
  const auto separated = units_of({{0.1, Label::benign},
                                   {0.4, Label::malicious},
                                   {0.35, Label::benign},
                                   {0.8, Label::malicious}});
  CHECK(roc_auc(separated).auc == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("roc_auc groups tied scores into one sweep step") {
  std::vector<ScoredUnit> tied;
  for (int i = 0; i < 6; ++i)
    tied.push_back({1.0, i < 2 ? Label::malicious : Label::benign});
  const auto roc = roc_auc(tied);
  REQUIRE(roc.points.size() == 2);
  CHECK(roc.points[0] == std::pair<double, double>{0.0, 0.0});
  CHECK(roc.points[1] == std::pair<double, double>{1.0, 1.0});
  CHECK(roc.auc == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("roc_auc equals the pairwise statistic on random tied data") {
  rng::Xoshiro256pp gen(3131);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen.below(40);
    std::vector<ScoredUnit> units;
    for (std::size_t i = 0; i < n; ++i)
      units.push_back({static_cast<double>(gen.below(8)) / 4.0,
                       gen.below(2) ? Label::malicious : Label::benign});
    units[0].truth = Label::benign;
    units[1].truth = Label::malicious;
    CHECK(roc_auc(units).auc == Catch::Approx(pairwise_auc(units)).margin(1e-12));
  }
}

TEST_CASE("roc curves are monotone from the origin to (1,1)") {
  rng::Xoshiro256pp gen(3232);
  std::vector<ScoredUnit> units;
  for (int i = 0; i < 50; ++i)
    units.push_back({gen.normal(0.0, 1.0), gen.below(2) ? Label::malicious : Label::benign});
  units[0].truth = Label::benign;
  units[1].truth = Label::malicious;
  const auto roc = roc_auc(units);
  CHECK(roc.points.front() == std::pair<double, double>{0.0, 0.0});
  CHECK(roc.points.back() == std::pair<double, double>{1.0, 1.0});
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    CHECK(roc.points[k].first >= roc.points[k - 1].first);
    CHECK(roc.points[k].second >= roc.points[k - 1].second);
  }
}

TEST_CASE("roc_auc requires both classes") {
  CHECK_THROWS(roc_auc(units_of({{1.0, Label::benign}, {2.0, Label::benign}})));
  CHECK_THROWS(roc_auc(units_of({{1.0, Label::malicious}})));
  CHECK_THROWS(roc_auc({}));
}

TEST_CASE("prf1 on hand-checked counts") {
  auto m = prf1(3, 1, 1);
  CHECK(m.precision == 0.75);
  CHECK(m.recall == 0.75);
  CHECK(m.f1 == Catch::Approx(0.75).margin(1e-12));

  m = prf1(2, 1, 3);
  CHECK(m.precision == Catch::Approx(2.0 / 3.0));
  CHECK(m.recall == Catch::Approx(0.4));
  CHECK(m.f1 == Catch::Approx(0.5).margin(1e-12));

  m = prf1(5, 0, 0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
}

TEST_CASE("prf1 defines empty ratios as zero") {
  auto m = prf1(0, 0, 0);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  m = prf1(0, 5, 0);  // no actual positives
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  m = prf1(0, 0, 5);  // no predicted positives
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
}

TEST_CASE("score_histogram on a hand-checked two-bin case") {
  const auto h = score_histogram({0.5, 1.5}, {1.5, 2.5}, 2);
  REQUIRE(h.edges.size() == 3);
  CHECK(h.edges[0] == 0.5);
  CHECK(h.edges[1] == 1.5);
  CHECK(h.edges[2] == 2.5);
  CHECK(h.benign == std::vector<double>{0.5, 0.5});
  CHECK(h.malicious == std::vector<double>{0.0, 1.0});
  CHECK(h.overlap == 0.5);
}

TEST_CASE("score_histogram overlap extremes") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  CHECK(score_histogram(a, a, 4).overlap == Catch::Approx(1.0).margin(1e-12));

  const auto disjoint = score_histogram({0.0, 0.1, 0.2}, {100.0, 100.1}, 8);
  CHECK(disjoint.overlap == 0.0);

  // Identical constant scores widen a degenerate range and overlap fully.
  const auto constant = score_histogram({2.0, 2.0}, {2.0}, 2);
  CHECK(constant.edges.front() == 1.5);
  CHECK(constant.edges.back() == 2.5);
  CHECK(constant.overlap == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("score_histogram normalizes each class separately") {
  rng::Xoshiro256pp gen(3434);
  std::vector<double> benign(200), malicious(50);
  for (double& v : benign) v = gen.normal(0.0, 1.0);
  for (double& v : malicious) v = gen.normal(3.0, 1.0);
  const auto h = score_histogram(benign, malicious, 20);
  double sb = 0.0, sm = 0.0;
  for (const double v : h.benign) sb += v;
  for (const double v : h.malicious) sm += v;
  CHECK(sb == Catch::Approx(1.0).margin(1e-12));
  CHECK(sm == Catch::Approx(1.0).margin(1e-12));
  CHECK(h.overlap < 0.5);  // well separated means little shared mass
  CHECK(h.overlap >= 0.0);
}

TEST_CASE("score_histogram input validation") {
  CHECK_THROWS(score_histogram({}, {1.0}, 4));
  CHECK_THROWS(score_histogram({1.0}, {}, 4));
  CHECK_THROWS(score_histogram({1.0}, {2.0}, 1));
  CHECK_THROWS(score_histogram({1.0}, {2.0}, 2000));
}
