#pragma once

// Baseline global detectors.
//
// count_gd flags a neighborhood when its alert count exceeds a rate
// threshold times the neighborhood's *estimated* size; the size_error knob
// models how miscounting members distorts the decision.
//
// cluster_fvs is a farthest-point k-means variant over alert FVs under L1
// distance: clusters are created around the FV farthest from its current
// centroid until no FV is farther than half the average inter-centroid
// distance. Earlier-created clusters are treated as more suspicious;
// clustering_roc sweeps that rank into an ROC curve.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shapegd/core.hpp"
#include "shapegd/rng.hpp"
#include "shapegd/shape.hpp"

namespace shapegd {

struct CountGdConfig {
  double alert_rate_threshold = 0.5;
  double size_error_pct = 0.0;  // estimated size = true size * (1 + pct/100)

  void validate() const {
    if (!(alert_rate_threshold >= 0.0))
      throw std::invalid_argument("alert_rate_threshold must be non-negative");
  }
};

inline Label count_gd(std::size_t alert_count, std::size_t true_size,
                      const CountGdConfig& cfg) {
  cfg.validate();
  if (true_size == 0) throw std::invalid_argument("neighborhood size must be positive");
  const double estimated =
      std::round(static_cast<double>(true_size) * (1.0 + cfg.size_error_pct / 100.0));
  if (estimated < 1.0)
    throw std::invalid_argument("size error drives estimated size below 1");
  return static_cast<double>(alert_count) > cfg.alert_rate_threshold * estimated
             ? Label::malicious
             : Label::benign;
}

struct Cluster {
  std::vector<double> centroid;
  std::vector<std::size_t> members;  // FV indexes
  std::size_t creation_rank = 0;
};

namespace detail {

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace detail

// Farthest-point clustering under L1 distance. The first centroid is a
// uniformly random FV; each round promotes the FV farthest from its
// assigned centroid (ties to the lowest FV index) to a new centroid and
// reassigns every FV to its nearest centroid (ties to the earliest
// centroid). Stops when no FV is farther from its centroid than half the
// average pairwise inter-centroid distance.
template <class Id>
std::vector<Cluster> cluster_fvs(const std::vector<BasicProjectedFV<Id>>& fvs,
                                 std::uint64_t seed) {
  if (fvs.empty()) throw std::invalid_argument("cannot cluster an empty FV set");
  const std::size_t n = fvs.size();
  const std::size_t dims = fvs.front().coords.size();
  for (const auto& fv : fvs)
    if (fv.coords.size() != dims)
      throw std::invalid_argument("inconsistent FV dimensions");

  rng::Xoshiro256pp gen(seed);
  std::vector<std::size_t> centroid_idx{static_cast<std::size_t>(gen.below(n))};
  std::vector<std::size_t> assignment(n, 0);
  std::vector<double> dist_to_centroid(n);

  auto reassign = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < centroid_idx.size(); ++c) {
        const double d =
            detail::l1_distance(fvs[i].coords, fvs[centroid_idx[c]].coords);
        if (d < best || (d == best && centroid_idx[c] < centroid_idx[best_c])) {
          best = d;
          best_c = c;
        }
      }
      assignment[i] = best_c;
      dist_to_centroid[i] = best;
    }
  };
  reassign();

  while (centroid_idx.size() < n) {
    std::size_t far_i = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (dist_to_centroid[i] > dist_to_centroid[far_i]) far_i = i;
    const double far_d = dist_to_centroid[far_i];
    if (far_d == 0.0) break;
    if (centroid_idx.size() > 1) {
      double sum = 0.0;
      std::size_t pairs = 0;
      for (std::size_t a = 0; a < centroid_idx.size(); ++a)
        for (std::size_t b = a + 1; b < centroid_idx.size(); ++b) {
          sum += detail::l1_distance(fvs[centroid_idx[a]].coords,
                                     fvs[centroid_idx[b]].coords);
          ++pairs;
        }
      if (far_d <= 0.5 * sum / static_cast<double>(pairs)) break;
    }
    centroid_idx.push_back(far_i);
    reassign();
  }

  std::vector<Cluster> clusters(centroid_idx.size());
  for (std::size_t c = 0; c < centroid_idx.size(); ++c) {
    clusters[c].centroid = fvs[centroid_idx[c]].coords;
    clusters[c].creation_rank = c;
  }
  for (std::size_t i = 0; i < n; ++i) clusters[assignment[i]].members.push_back(i);
  return clusters;
}

// Monte Carlo benchmark for count_gd's sensitivity to size estimation
// error. Neighborhood sizes are uniform in [size_lo, size_hi]; every member
// contributes one alert opportunity at the detector's operating point, and
// malicious neighborhoods have a fraction infected_fraction of members
// alerting at tp_rate instead. The alert-rate threshold is calibrated at
// zero size error to the given percentile of benign alert rates, then held
// fixed while the size error sweeps.
struct CountBenchmarkParams {
  std::size_t n_per_setting = 1000;
  std::size_t size_lo = 800;
  std::size_t size_hi = 1200;
  double benign_alert_rate = 0.06;
  double tp_rate = 0.924;
  double infected_fraction = 0.04;
  double calib_percentile = 99.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_per_setting == 0) throw std::invalid_argument("n_per_setting must be positive");
    if (size_lo == 0 || size_lo > size_hi)
      throw std::invalid_argument("size range is invalid");
    for (const double r : {benign_alert_rate, tp_rate, infected_fraction})
      if (r < 0.0 || r > 1.0) throw std::invalid_argument("rates must be in [0, 1]");
  }
};

struct CountBenchmarkRow {
  double size_error_pct = 0.0;
  double fp_rate = 0.0;
  double tp_rate = 0.0;
  double fp_stderr = 0.0;
  double tp_stderr = 0.0;
};

namespace detail {

inline std::size_t binomial_draw(std::size_t n, double p, rng::Xoshiro256pp& gen) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) k += gen.uniform01() < p ? 1u : 0u;
  return k;
}

}  // namespace detail

struct CountBenchmarkResult {
  double threshold = 0.0;  // calibrated alert-rate threshold at zero error
  std::vector<CountBenchmarkRow> rows;
};

inline CountBenchmarkResult count_fragility_benchmark(
    const CountBenchmarkParams& p, const std::vector<double>& size_errors_pct) {
  p.validate();
  if (size_errors_pct.empty())
    throw std::invalid_argument("benchmark needs at least one size error setting");
  rng::Xoshiro256pp gen(rng::mix(p.seed, 0xc0417));

  auto draw_size = [&] {
    return p.size_lo + static_cast<std::size_t>(gen.below(p.size_hi - p.size_lo + 1));
  };
  auto benign_alerts = [&](std::size_t n) {
    return detail::binomial_draw(n, p.benign_alert_rate, gen);
  };
  auto malicious_alerts = [&](std::size_t n) {
    const auto infected =
        static_cast<std::size_t>(std::round(p.infected_fraction * static_cast<double>(n)));
    return detail::binomial_draw(infected, p.tp_rate, gen) +
           detail::binomial_draw(n - infected, p.benign_alert_rate, gen);
  };

  std::vector<double> calib_rates;
  calib_rates.reserve(p.n_per_setting);
  for (std::size_t i = 0; i < p.n_per_setting; ++i) {
    const std::size_t n = draw_size();
    calib_rates.push_back(static_cast<double>(benign_alerts(n)) /
                          static_cast<double>(n));
  }
  CountBenchmarkResult result;
  result.threshold = calibrate(std::move(calib_rates), p.calib_percentile);

  for (const double err : size_errors_pct) {
    CountGdConfig cfg{result.threshold, err};
    std::size_t fp = 0, tp = 0;
    for (std::size_t i = 0; i < p.n_per_setting; ++i) {
      const std::size_t nb = draw_size();
      if (count_gd(benign_alerts(nb), nb, cfg) == Label::malicious) ++fp;
      const std::size_t nm = draw_size();
      if (count_gd(malicious_alerts(nm), nm, cfg) == Label::malicious) ++tp;
    }
    CountBenchmarkRow row;
    row.size_error_pct = err;
    const auto n = static_cast<double>(p.n_per_setting);
    row.fp_rate = static_cast<double>(fp) / n;
    row.tp_rate = static_cast<double>(tp) / n;
    row.fp_stderr = std::sqrt(std::max(row.fp_rate * (1.0 - row.fp_rate), 1.0 / n) / n);
    row.tp_stderr = std::sqrt(std::max(row.tp_rate * (1.0 - row.tp_rate), 1.0 / n) / n);
    result.rows.push_back(row);
  }
  return result;
}

// ROC over cluster creation rank: for cutoff k, every FV in a cluster with
// creation_rank < k is flagged. Returns the curve points (fp_rate, tp_rate)
// for k = 0..K and the trapezoid AUC.
struct ClusteringRoc {
  std::vector<std::pair<double, double>> points;
  double auc = 0.0;
};

inline ClusteringRoc clustering_roc(const std::vector<Cluster>& clusters,
                                    const std::vector<Label>& truth) {
  std::size_t pos = 0, neg = 0;
  for (const Label t : truth) (t == Label::malicious ? pos : neg) += 1;
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("clustering ROC needs both classes present");

  std::vector<const Cluster*> by_rank;
  by_rank.reserve(clusters.size());
  for (const auto& c : clusters) by_rank.push_back(&c);
  std::sort(by_rank.begin(), by_rank.end(), [](const Cluster* a, const Cluster* b) {
    return a->creation_rank < b->creation_rank;
  });

  ClusteringRoc roc;
  roc.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  for (const Cluster* c : by_rank) {
    for (const std::size_t i : c->members) {
      if (i >= truth.size()) throw std::invalid_argument("truth vector too short");
      (truth[i] == Label::malicious ? tp : fp) += 1;
    }
    roc.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos));
  }
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    const auto& [fp0, tp0] = roc.points[k - 1];
    const auto& [fp1, tp1] = roc.points[k];
    roc.auc += (fp1 - fp0) * (tp0 + tp1) / 2.0;
  }
  return roc;
}

}  // namespace shapegd
