#pragma once

// Evaluation metrics: ROC/AUC over scored units, precision/recall/F1 over
// verdicts, and score-distribution overlap between classes.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shapegd/core.hpp"

namespace shapegd {

struct ScoredUnit {
  double score = 0.0;
  Label truth = Label::benign;
};

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fp_rate, tp_rate)
  double auc = 0.0;
};

// Threshold sweep over scores, higher = more suspicious. Tied scores are
// grouped into a single sweep step so the curve is threshold-consistent;
// AUC is the trapezoid area, which equals the Mann-Whitney pairwise
// statistic with half credit for ties.
inline RocCurve roc_auc(std::vector<ScoredUnit> units) {
  std::size_t pos = 0, neg = 0;
  for (const auto& u : units) (u.truth == Label::malicious ? pos : neg) += 1;
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("ROC needs at least one unit of each class");

  std::sort(units.begin(), units.end(),
            [](const ScoredUnit& a, const ScoredUnit& b) { return a.score > b.score; });

  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < units.size()) {
    std::size_t j = i;
    while (j < units.size() && units[j].score == units[i].score) {
      (units[j].truth == Label::malicious ? tp : fp) += 1;
      ++j;
    }
    roc.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos));
    i = j;
  }
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    const auto& [fp0, tp0] = roc.points[k - 1];
    const auto& [fp1, tp1] = roc.points[k];
    roc.auc += (fp1 - fp0) * (tp0 + tp1) / 2.0;
  }
  return roc;
}

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Counts-based precision/recall/F1; every 0/0 ratio is defined as 0.
inline Prf1 prf1(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg) {
  Prf1 out;
  const std::size_t pred_pos = true_pos + false_pos;
  const std::size_t actual_pos = true_pos + false_neg;
  if (pred_pos > 0)
    out.precision = static_cast<double>(true_pos) / static_cast<double>(pred_pos);
  if (actual_pos > 0)
    out.recall = static_cast<double>(true_pos) / static_cast<double>(actual_pos);
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

struct ScoreHistogram {
  std::vector<double> edges;
  std::vector<double> benign;     // normalized
  std::vector<double> malicious;  // normalized
  double overlap = 0.0;           // sum of per-bin minima
};

// Histograms both score sets on shared equal-width edges spanning the joint
// range; overlap is the total mass the two normalized histograms share.
inline ScoreHistogram score_histogram(const std::vector<double>& benign,
                                      const std::vector<double>& malicious,
                                      std::size_t bins) {
  if (benign.empty() || malicious.empty())
    throw std::invalid_argument("score histogram needs both score sets non-empty");
  if (bins < 2 || bins > 1024)
    throw std::invalid_argument("histogram bin count must be in [2, 1024]");

  double lo = benign[0], hi = benign[0];
  for (const double v : benign) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const double v : malicious) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }

  ScoreHistogram out;
  out.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i)
    out.edges[i] = lo + width * static_cast<double>(i);
  out.edges[bins] = hi;

  out.benign.assign(bins, 0.0);
  out.malicious.assign(bins, 0.0);
  for (const double v : benign) out.benign[bin_index(out.edges, v)] += 1.0;
  for (const double v : malicious) out.malicious[bin_index(out.edges, v)] += 1.0;
  for (double& v : out.benign) v /= static_cast<double>(benign.size());
  for (double& v : out.malicious) v /= static_cast<double>(malicious.size());
  for (std::size_t i = 0; i < bins; ++i)
    out.overlap += std::min(out.benign[i], out.malicious[i]);
  return out;
}

}  // namespace shapegd
