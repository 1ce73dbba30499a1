#pragma once

// Feature-vector domain types and vector-histogram construction.
//
// A neighborhood's behavior is summarized as a "vector histogram": every
// projected feature vector is binned coordinate-wise, producing one
// normalized row per projected dimension. Rows are independent 1-D
// histograms; the matrix as a whole is the shape that downstream scoring
// compares against a reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapegd {

enum class Label : std::uint8_t { benign = 0, malicious = 1 };

// A raw feature vector as emitted by an instrumented entity.
struct RawFV {
  std::string entity_id;
  double timestamp = 0.0;
  std::vector<double> dims;
};

// Row-major L x D linear map from raw space onto L projected dimensions.
struct ProjectionBasis {
  std::size_t input_dims = 0;
  std::vector<std::vector<double>> rows;

  std::size_t output_dims() const { return rows.size(); }

  void validate() const {
    if (rows.empty()) throw std::invalid_argument("projection basis has no rows");
    if (rows.size() > input_dims)
      throw std::invalid_argument("projection basis has more rows than input dims");
    for (const auto& row : rows)
      if (row.size() != input_dims)
        throw std::invalid_argument("projection basis row width mismatch");
  }
};

// A projected feature vector. The entity id type is a template parameter so
// that file-facing code can use opaque string ids while simulation code uses
// dense integer indexes without translation in hot loops.
template <class Id>
struct BasicProjectedFV {
  std::vector<double> coords;
  Id entity_id{};
  double timestamp = 0.0;
  Label truth_label = Label::benign;
};

using ProjectedFV = BasicProjectedFV<std::string>;

inline ProjectedFV project(const RawFV& fv, const ProjectionBasis& basis) {
  basis.validate();
  if (fv.dims.size() != basis.input_dims)
    throw std::invalid_argument("feature vector dimension does not match basis");
  ProjectedFV out;
  out.entity_id = fv.entity_id;
  out.timestamp = fv.timestamp;
  out.coords.reserve(basis.rows.size());
  for (const auto& row : basis.rows) {
    double dot = 0.0;
    for (std::size_t d = 0; d < row.size(); ++d) dot += row[d] * fv.dims[d];
    out.coords.push_back(dot);
  }
  return out;
}

// Binning layout: per projected dimension, b bins delimited by b+1 strictly
// increasing edges.
struct HistogramConfig {
  std::vector<std::vector<double>> edges;

  std::size_t dims() const { return edges.size(); }
  std::size_t bins() const { return edges.empty() ? 0 : edges.front().size() - 1; }

  void validate() const {
    if (edges.empty()) throw std::invalid_argument("histogram config has no dimensions");
    const std::size_t b = bins();
    if (b < 2 || b > 1024)
      throw std::invalid_argument("histogram bin count must be in [2, 1024]");
    for (const auto& e : edges) {
      if (e.size() != b + 1)
        throw std::invalid_argument("histogram edge rows must have equal width");
      for (std::size_t i = 0; i + 1 < e.size(); ++i)
        if (!(e[i] < e[i + 1]))
          throw std::invalid_argument("histogram edges must be strictly increasing");
    }
  }
};

// Normalized per-dimension histogram rows. Rows may be ragged after
// concatenation of histograms with different bin counts.
struct VectorHistogram {
  std::vector<std::vector<double>> rows;
  std::size_t sample_count = 0;

  bool operator==(const VectorHistogram&) const = default;
};

// Bin lookup with clamping: values below the first edge land in bin 0,
// values at or above the last edge land in the last bin.
inline std::size_t bin_index(std::span<const double> edges, double value) {
  const std::size_t b = edges.size() - 1;
  if (value < edges.front()) return 0;
  if (value >= edges.back()) return b - 1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

// Equal-width edges spanning [min, max] of each coordinate of the input.
// A degenerate (constant) coordinate is widened by 0.5 on both sides.
template <class Id>
HistogramConfig fit_edges(const std::vector<BasicProjectedFV<Id>>& fvs, std::size_t bins) {
  if (fvs.empty()) throw std::invalid_argument("cannot fit edges on an empty corpus");
  if (bins < 2 || bins > 1024)
    throw std::invalid_argument("histogram bin count must be in [2, 1024]");
  const std::size_t dims = fvs.front().coords.size();
  if (dims == 0) throw std::invalid_argument("feature vectors have no coordinates");

  std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
  for (const auto& fv : fvs) {
    if (fv.coords.size() != dims)
      throw std::invalid_argument("inconsistent coordinate count in corpus");
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], fv.coords[d]);
      hi[d] = std::max(hi[d], fv.coords[d]);
    }
  }

  HistogramConfig cfg;
  cfg.edges.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    double a = lo[d], b = hi[d];
    if (!(a < b)) {
      a -= 0.5;
      b += 0.5;
    }
    auto& e = cfg.edges[d];
    e.resize(bins + 1);
    const double width = (b - a) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i)
      e[i] = a + width * static_cast<double>(i);
    e[bins] = b;
  }
  cfg.validate();
  return cfg;
}

// Incremental histogram builder sharing the exact binning and normalization
// used by build_vector_histogram; lets streaming callers avoid materializing
// feature vectors.
class HistogramAccumulator {
 public:
  explicit HistogramAccumulator(const HistogramConfig& cfg) : cfg_(&cfg) {
    cfg.validate();
    counts_.assign(cfg.dims(), std::vector<double>(cfg.bins(), 0.0));
  }

  void add(std::span<const double> coords) {
    if (coords.size() != counts_.size())
      throw std::invalid_argument("coordinate count does not match histogram config");
    for (std::size_t d = 0; d < coords.size(); ++d)
      counts_[d][bin_index(cfg_->edges[d], coords[d])] += 1.0;
    ++n_;
  }

  std::size_t sample_count() const { return n_; }

  void reset() {
    for (auto& row : counts_) std::fill(row.begin(), row.end(), 0.0);
    n_ = 0;
  }

  VectorHistogram finalize() const {
    VectorHistogram h;
    h.rows = counts_;
    h.sample_count = n_;
    if (n_ > 0) {
      const double inv = static_cast<double>(n_);
      for (auto& row : h.rows)
        for (double& v : row) v /= inv;
    }
    return h;
  }

 private:
  const HistogramConfig* cfg_;
  std::vector<std::vector<double>> counts_;
  std::size_t n_ = 0;
};

// Bins a set of projected FVs into a normalized vector histogram. An empty
// input produces an all-zero histogram with sample_count 0.
template <class Id>
VectorHistogram build_vector_histogram(const std::vector<BasicProjectedFV<Id>>& fvs,
                                       const HistogramConfig& cfg) {
  HistogramAccumulator acc(cfg);
  for (const auto& fv : fvs) acc.add(fv.coords);
  return acc.finalize();
}

// Stacks the rows of h2 under the rows of h1. Sample counts may differ when
// the histograms come from detectors observing different FV streams; the
// result keeps the larger one.
inline VectorHistogram concat_histograms(const VectorHistogram& h1,
                                         const VectorHistogram& h2) {
  VectorHistogram out;
  out.rows.reserve(h1.rows.size() + h2.rows.size());
  out.rows.insert(out.rows.end(), h1.rows.begin(), h1.rows.end());
  out.rows.insert(out.rows.end(), h2.rows.begin(), h2.rows.end());
  out.sample_count = std::max(h1.sample_count, h2.sample_count);
  return out;
}

// Principal-component basis fitted on raw FVs: rows are the top-L
// eigenvectors of the sample covariance (Jacobi rotation eigensolver).
// Projection through the basis is a plain dot product, i.e. uncentered.
inline ProjectionBasis fit_pca_basis(const std::vector<RawFV>& fvs, std::size_t out_dims) {
  if (fvs.empty()) throw std::invalid_argument("cannot fit a basis on an empty corpus");
  const std::size_t d = fvs.front().dims.size();
  if (out_dims == 0 || out_dims > d)
    throw std::invalid_argument("requested basis rank exceeds input dimension");

  std::vector<double> mean(d, 0.0);
  for (const auto& fv : fvs) {
    if (fv.dims.size() != d) throw std::invalid_argument("ragged raw corpus");
    for (std::size_t i = 0; i < d; ++i) mean[i] += fv.dims[i];
  }
  for (double& m : mean) m /= static_cast<double>(fvs.size());

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& fv : fvs)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j)
        cov[i][j] += (fv.dims[i] - mean[i]) * (fv.dims[j] - mean[j]);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i][j] /= static_cast<double>(fvs.size());
      cov[j][i] = cov[i][j];
    }

  // Cyclic Jacobi sweeps; vectors accumulates the rotations.
  std::vector<std::vector<double>> vec(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) vec[i][i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) off += cov[i][j] * cov[i][j];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::abs(cov[p][q]) < 1e-300) continue;
        const double theta = (cov[q][q] - cov[p][p]) / (2.0 * cov[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = cov[k][p], akq = cov[k][q];
          cov[k][p] = c * akp - s * akq;
          cov[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = cov[p][k], aqk = cov[q][k];
          cov[p][k] = c * apk - s * aqk;
          cov[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = vec[k][p], vkq = vec[k][q];
          vec[k][p] = c * vkp - s * vkq;
          vec[k][q] = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cov[a][a] > cov[b][b]; });

  ProjectionBasis basis;
  basis.input_dims = d;
  basis.rows.resize(out_dims);
  for (std::size_t r = 0; r < out_dims; ++r) {
    basis.rows[r].resize(d);
    for (std::size_t k = 0; k < d; ++k) basis.rows[r][k] = vec[k][order[r]];
  }
  basis.validate();
  return basis;
}

}  // namespace shapegd
