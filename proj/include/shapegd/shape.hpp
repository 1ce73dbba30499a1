#pragma once

// Shape scoring: coordinate-wise 1-D Wasserstein distance between a
// neighborhood's vector histogram and a benign reference, plus threshold
// calibration and neighborhood classification.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "shapegd/core.hpp"

namespace shapegd {

// First Wasserstein distance between two histograms on the same b-bin grid
// with unit ground distance between adjacent bins:
//   d_W(p, q) = sum_i | sum_{j<=i} (p(j) - q(j)) |.
// Expects rows normalized to total mass 1 (or both all-zero).
inline double wasserstein_1d(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("wasserstein_1d requires equal-length histograms");
  double cum = 0.0, dist = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum += p[i] - q[i];
    dist += std::abs(cum);
  }
  return dist;
}

// Sum of per-row Wasserstein distances between a histogram and a reference
// of identical shape.
inline double shape_score(const VectorHistogram& h, const VectorHistogram& ref) {
  if (h.rows.size() != ref.rows.size())
    throw std::invalid_argument("histogram row count does not match reference");
  double score = 0.0;
  for (std::size_t l = 0; l < h.rows.size(); ++l)
    score += wasserstein_1d(h.rows[l], ref.rows[l]);
  return score;
}

// Nearest-rank percentile: the k-th smallest benign score with
// k = ceil(percentile/100 * n).
inline double calibrate(std::vector<double> benign_scores, double percentile) {
  if (benign_scores.empty())
    throw std::invalid_argument("cannot calibrate on an empty score set");
  if (!(percentile > 0.0) || percentile > 100.0)
    throw std::invalid_argument("percentile must be in (0, 100]");
  std::sort(benign_scores.begin(), benign_scores.end());
  const auto n = static_cast<double>(benign_scores.size());
  auto k = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  if (k == 0) k = 1;
  return benign_scores[k - 1];
}

// Everything needed to classify new neighborhoods: the calibrated threshold,
// the binning layout, and the benign reference histogram. min_alerts guards
// against verdicts on alert sets too small for a stable histogram.
struct ShapeThreshold {
  double gamma = 0.0;
  double percentile = 99.0;
  std::size_t min_alerts = 100;
  HistogramConfig config;
  VectorHistogram reference;
};

struct NeighborhoodVerdict {
  double score = 0.0;
  Label label = Label::benign;
  std::size_t alert_count = 0;
  bool below_floor = false;
};

// Reference histogram from the false-positive alert FVs a local detector
// produced on malware-free traffic.
template <class Id>
VectorHistogram build_reference(const std::vector<BasicProjectedFV<Id>>& benign_alert_fvs,
                                const HistogramConfig& cfg) {
  if (benign_alert_fvs.empty())
    throw std::invalid_argument("cannot build a reference from zero alert FVs");
  return build_vector_histogram(benign_alert_fvs, cfg);
}

// Shared verdict logic for histogram-level callers (the simulator scores
// accumulated histograms without materializing FVs).
inline NeighborhoodVerdict classify_histogram(const VectorHistogram& h,
                                              const ShapeThreshold& thr) {
  NeighborhoodVerdict v;
  v.alert_count = h.sample_count;
  if (h.sample_count == 0) {
    v.below_floor = true;
    return v;
  }
  v.score = shape_score(h, thr.reference);
  if (h.sample_count < thr.min_alerts) {
    v.below_floor = true;
    return v;
  }
  v.label = v.score > thr.gamma ? Label::malicious : Label::benign;
  return v;
}

// Builds a complete threshold from one pool of benign (false-positive)
// alert FVs: edges and reference come from the whole pool, gamma from the
// configured percentile of scores of disjoint pseudo-neighborhoods of
// group_size alerts each.
template <class Id>
ShapeThreshold calibrate_threshold_from_alerts(
    const std::vector<BasicProjectedFV<Id>>& fp_alert_fvs, std::size_t bins,
    std::size_t group_size, double percentile, std::size_t min_alerts) {
  if (group_size == 0) throw std::invalid_argument("group_size must be positive");
  const std::size_t groups = fp_alert_fvs.size() / group_size;
  if (groups == 0)
    throw std::invalid_argument(
        "not enough alert FVs for a single calibration group");

  ShapeThreshold thr;
  thr.percentile = percentile;
  thr.min_alerts = min_alerts;
  thr.config = fit_edges(fp_alert_fvs, bins);
  thr.reference = build_reference(fp_alert_fvs, thr.config);

  std::vector<double> scores;
  scores.reserve(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    HistogramAccumulator acc(thr.config);
    for (std::size_t i = g * group_size; i < (g + 1) * group_size; ++i)
      acc.add(fp_alert_fvs[i].coords);
    scores.push_back(shape_score(acc.finalize(), thr.reference));
  }
  thr.gamma = calibrate(std::move(scores), percentile);
  return thr;
}

// Classifies one neighborhood's alert FVs. Alert sets below min_alerts (or
// empty) never produce a malicious verdict; they are flagged below_floor so
// the caller can treat them as "no verdict".
template <class Id>
NeighborhoodVerdict classify_neighborhood(
    const std::vector<BasicProjectedFV<Id>>& alert_fvs, const HistogramConfig& cfg,
    const ShapeThreshold& thr) {
  cfg.validate();
  if (thr.config.edges != cfg.edges)
    throw std::invalid_argument("histogram config does not match threshold config");
  if (thr.reference.rows.size() != cfg.dims())
    throw std::invalid_argument("reference histogram does not match config");
  if (alert_fvs.empty()) {
    NeighborhoodVerdict v;
    v.below_floor = true;
    return v;
  }
  return classify_histogram(build_vector_histogram(alert_fvs, cfg), thr);
}

}  // namespace shapegd
