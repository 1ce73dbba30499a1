#pragma once

// Waterhole-attack simulation over a netflow-style trace.
//
// A population of clients issues requests against servers with Zipf
// popularity; one popular server is compromised at a random time inside a
// configured interval and infects visiting clients with a per-visit
// probability. Every client continuously emits feature vectors (drawn from
// a benign corpus until its infection time, from a malicious corpus after),
// a local detector screens them, and per-window neighborhoods built from
// the traffic are scored against the calibrated shape threshold.
//
// Everything is a pure function of (config, seed): request arrivals come
// from per-client Xoshiro streams, while infection rolls, FV content and
// detector noise are derived by hashing (seed, client, time). That makes
// window classification independent of evaluation order, so it can fan out
// to worker threads without changing any result.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shapegd/core.hpp"
#include "shapegd/detectors.hpp"
#include "shapegd/neighborhoods.hpp"
#include "shapegd/parallel.hpp"
#include "shapegd/rng.hpp"
#include "shapegd/shape.hpp"
#include "shapegd/text.hpp"

namespace shapegd {

template <class Id>
struct BasicNetflowRecord {
  double timestamp = 0.0;
  Id src{};
  Id dst{};
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t proto = 6;
  std::uint32_t packets = 0;
  std::uint64_t bytes = 0;
};

using NetflowRecord = BasicNetflowRecord<std::string>;

// Interns opaque string ids into dense indexes for the simulation engine.
class IdTable {
 public:
  std::uint32_t intern(const std::string& name) {
    const auto [it, fresh] = index_.try_emplace(name, names_.size());
    if (fresh) names_.push_back(name);
    return static_cast<std::uint32_t>(it->second);
  }

  const std::uint32_t* find(const std::string& name) const {
    const auto it = index_.find(name);
    return it == index_.end() ? nullptr : &it->second;
  }

  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(names_.size()); }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> names_;
};

struct TraceGenConfig {
  std::uint32_t n_clients = 1000;
  std::uint32_t n_servers = 50;
  double duration = 60.0;
  double req_rate_per_client = 0.1;  // Poisson arrival rate per client, req/s
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_clients == 0 || n_servers == 0)
      throw std::invalid_argument("trace needs clients and servers");
    if (duration < 0.0) throw std::invalid_argument("duration must be non-negative");
    if (!(req_rate_per_client > 0.0))
      throw std::invalid_argument("request rate must be positive");
    if (zipf_exponent < 0.0)
      throw std::invalid_argument("zipf exponent must be non-negative");
  }
};

// Fraction of requests hitting the most popular (rank 0) server.
inline double zipf_top_share(std::uint32_t n_servers, double exponent) {
  double sum = 0.0;
  for (std::uint32_t k = 1; k <= n_servers; ++k)
    sum += std::pow(static_cast<double>(k), -exponent);
  return 1.0 / sum;
}

// Per-client request rate that yields the target request rate at the most
// popular server.
inline double per_client_rate_for_hot(double hot_rps, std::uint32_t n_clients,
                                      std::uint32_t n_servers, double exponent) {
  const double share = zipf_top_share(n_servers, exponent);
  return hot_rps / share / static_cast<double>(n_clients);
}

// Synthetic netflow trace: per-client Poisson arrivals, Zipf-popular server
// choice, records sorted by (timestamp, src). Fully determined by cfg.seed.
inline std::vector<BasicNetflowRecord<std::uint32_t>> generate_trace(
    const TraceGenConfig& cfg) {
  cfg.validate();

  std::vector<double> cum(cfg.n_servers);
  double sum = 0.0;
  for (std::uint32_t s = 0; s < cfg.n_servers; ++s) {
    sum += std::pow(static_cast<double>(s + 1), -cfg.zipf_exponent);
    cum[s] = sum;
  }
  for (double& c : cum) c /= sum;

  std::vector<BasicNetflowRecord<std::uint32_t>> records;
  records.reserve(static_cast<std::size_t>(cfg.req_rate_per_client * cfg.duration *
                                           cfg.n_clients * 1.1) +
                  16);
  for (std::uint32_t c = 0; c < cfg.n_clients; ++c) {
    rng::Xoshiro256pp gen(rng::mix(cfg.seed, c));
    double t = gen.exponential(cfg.req_rate_per_client);
    while (t < cfg.duration) {
      BasicNetflowRecord<std::uint32_t> r;
      r.timestamp = t;
      r.src = c;
      const double u = gen.uniform01();
      r.dst = static_cast<std::uint32_t>(
          std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      if (r.dst >= cfg.n_servers) r.dst = cfg.n_servers - 1;
      r.src_port = static_cast<std::uint16_t>(49152 + (gen.next() & 0x3fff));
      r.dst_port = 443;
      r.proto = 6;
      r.packets = 1 + static_cast<std::uint32_t>(gen.next() % 30);
      r.bytes = static_cast<std::uint64_t>(r.packets) * (200 + gen.next() % 1200);
      records.push_back(r);
      t += gen.exponential(cfg.req_rate_per_client);
    }
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.src < b.src;
  });
  return records;
}

struct AttackConfig {
  std::uint32_t waterhole_server = 0;
  double compromise_t0 = 0.0;
  double compromise_t1 = 0.0;
  double infection_prob = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (compromise_t0 > compromise_t1)
      throw std::invalid_argument("compromise interval is inverted");
    if (infection_prob < 0.0 || infection_prob > 1.0)
      throw std::invalid_argument("infection probability must be in [0, 1]");
  }
};

constexpr double kNever = std::numeric_limits<double>::infinity();

struct InfectionTimeline {
  double compromise_time = kNever;
  std::vector<double> infection_time;  // per client; kNever if never infected

  std::size_t infected_by(double t) const {
    std::size_t n = 0;
    for (const double it : infection_time) n += it <= t ? 1u : 0u;
    return n;
  }
};

inline InfectionTimeline benign_timeline(std::uint32_t n_clients) {
  InfectionTimeline tl;
  tl.infection_time.assign(n_clients, kNever);
  return tl;
}

// Draws the compromise time uniformly in [t0, t1], then rolls an
// independent per-visit infection for every request hitting the waterhole
// server at or after that time. A client's infection time is its first
// successful roll.
inline InfectionTimeline simulate_infection(
    const std::vector<BasicNetflowRecord<std::uint32_t>>& records,
    std::uint32_t n_clients, const AttackConfig& attack) {
  attack.validate();
  InfectionTimeline tl = benign_timeline(n_clients);
  rng::Xoshiro256pp gen(rng::mix(attack.seed, 0x77a5e1));
  tl.compromise_time = attack.compromise_t0 +
                       (attack.compromise_t1 - attack.compromise_t0) * gen.uniform01();
  if (attack.infection_prob == 0.0) return tl;
  for (const auto& r : records) {
    if (r.dst != attack.waterhole_server || r.timestamp < tl.compromise_time) continue;
    if (r.src >= n_clients) throw std::invalid_argument("record client out of range");
    if (tl.infection_time[r.src] <= r.timestamp) continue;
    const double u = rng::to_unit(
        rng::mix(attack.seed, r.src, std::bit_cast<std::uint64_t>(r.timestamp)));
    if (u < attack.infection_prob) tl.infection_time[r.src] = r.timestamp;
  }
  return tl;
}

// Dense row-major FV corpus used for O(1) random row access in hot loops.
struct CorpusMatrix {
  std::size_t dims = 0;
  std::size_t rows = 0;
  std::vector<double> flat;

  std::span<const double> row(std::size_t i) const {
    return {flat.data() + i * dims, dims};
  }
};

template <class Id>
CorpusMatrix flatten_corpus(const std::vector<BasicProjectedFV<Id>>& fvs) {
  if (fvs.empty()) throw std::invalid_argument("corpus is empty");
  CorpusMatrix m;
  m.dims = fvs.front().coords.size();
  if (m.dims == 0) throw std::invalid_argument("corpus FVs have no coordinates");
  m.rows = fvs.size();
  m.flat.reserve(m.rows * m.dims);
  for (const auto& fv : fvs) {
    if (fv.coords.size() != m.dims)
      throw std::invalid_argument("ragged corpus dimensions");
    m.flat.insert(m.flat.end(), fv.coords.begin(), fv.coords.end());
  }
  return m;
}

// Deterministic model of every client's FV emissions. All clients emit on
// the shared tick grid t_k = k / fv_rate; content is a corpus row selected
// by hashing (seed, client, tick), benign before the client's infection
// time and malicious at or after it. The stream references the timeline,
// which must outlive it.
class FvStreamModel {
 public:
  FvStreamModel(const InfectionTimeline& timeline, CorpusMatrix benign,
                CorpusMatrix malicious, double fv_rate, std::uint64_t seed)
      : timeline_(&timeline),
        benign_(std::move(benign)),
        malicious_(std::move(malicious)),
        fv_rate_(fv_rate),
        seed_(seed) {
    if (!(fv_rate > 0.0)) throw std::invalid_argument("fv_rate must be positive");
    if (benign_.dims != malicious_.dims)
      throw std::invalid_argument("corpus dimensions differ");
  }

  std::size_t dims() const { return benign_.dims; }
  double fv_rate() const { return fv_rate_; }
  const InfectionTimeline& timeline() const { return *timeline_; }

  // Smallest tick index with tick time >= t.
  std::uint64_t first_tick(double t) const {
    if (t <= 0.0) return 0;
    auto k = static_cast<std::uint64_t>(std::ceil(t * fv_rate_));
    while (k > 0 && tick_time(k - 1) >= t) --k;
    while (tick_time(k) < t) ++k;
    return k;
  }

  double tick_time(std::uint64_t k) const {
    return static_cast<double>(k) / fv_rate_;
  }

  // Calls fn(timestamp, coords, truth) for one client's FVs on ticks
  // [k0, k1).
  template <class Fn>
  void emit(std::uint32_t client, std::uint64_t k0, std::uint64_t k1, Fn&& fn) const {
    const double infected_at = timeline_->infection_time[client];
    for (std::uint64_t k = k0; k < k1; ++k) {
      const double t = tick_time(k);
      const bool infected = t >= infected_at;
      const CorpusMatrix& corpus = infected ? malicious_ : benign_;
      const std::size_t row = rng::mix(seed_, client, k) % corpus.rows;
      fn(t, corpus.row(row), infected ? Label::malicious : Label::benign);
    }
  }

  // Materialized FVs for a set of clients over [t0, t1); reference path for
  // tests and offline recomputation.
  std::vector<BasicProjectedFV<std::uint32_t>> window_fvs(
      const std::vector<std::uint32_t>& clients, double t0, double t1) const {
    std::vector<BasicProjectedFV<std::uint32_t>> out;
    const std::uint64_t k0 = first_tick(t0);
    const std::uint64_t k1 = first_tick(t1);
    for (const std::uint32_t c : clients) {
      emit(c, k0, k1, [&](double t, std::span<const double> coords, Label truth) {
        BasicProjectedFV<std::uint32_t> fv;
        fv.coords.assign(coords.begin(), coords.end());
        fv.entity_id = c;
        fv.timestamp = t;
        fv.truth_label = truth;
        out.push_back(std::move(fv));
      });
    }
    return out;
  }

 private:
  const InfectionTimeline* timeline_;
  CorpusMatrix benign_;
  CorpusMatrix malicious_;
  double fv_rate_;
  std::uint64_t seed_;
};

inline FvStreamModel attach_fv_streams(const InfectionTimeline& timeline,
                                       CorpusMatrix benign, CorpusMatrix malicious,
                                       double fv_rate, std::uint64_t seed) {
  return FvStreamModel(timeline, std::move(benign), std::move(malicious), fv_rate,
                       seed);
}

struct EngineConfig {
  NtwConfig ntw;
  double start_time = 0.0;   // first window starts here
  double end_time = 0.0;     // windows must end at or before this
  std::size_t min_fvs = 15000;  // per-neighborhood FV floor for a verdict
  int threads = 1;

  void validate() const {
    ntw.validate();
    if (end_time < start_time + ntw.window_len)
      throw std::invalid_argument("engine horizon shorter than one window");
  }
};

struct DetectionOutcome {
  bool detected = false;
  double detection_time = kNever;
  std::size_t infected_at_detection = 0;
  std::size_t fp_windows = 0;
  std::size_t windows_total = 0;  // windows that produced at least one verdict
};

namespace detail {

struct WindowVerdict {
  bool eligible = false;  // cleared both size floors; a verdict was produced
  bool malicious = false;
  bool truth_malicious = false;  // window slice contained malicious-truth FVs
  double score = 0.0;
  std::size_t alert_count = 0;
  std::size_t fv_count = 0;
};

// Shared sliding-window engine. For every window it forms one neighborhood
// per partition group, classifies each against the threshold and hands the
// verdict row to the visitor; the visitor returns false to stop the clock.
template <class Visitor>
void scan_windows(const std::vector<BasicNetflowRecord<std::uint32_t>>& records,
                  std::uint32_t n_clients,
                  const StructuralPartition<std::uint32_t>& partition,
                  const FvStreamModel& stream, const DetectorSpec& detector,
                  const ShapeThreshold& thr, const EngineConfig& cfg,
                  Visitor&& visit) {
  cfg.validate();
  partition.validate();
  detector.validate();
  if (detector.kind == ScorerKind::external)
    throw std::invalid_argument("external detectors cannot drive the simulator");
  thr.config.validate();
  if (thr.config.dims() != stream.dims())
    throw std::invalid_argument("threshold config does not match stream dimensions");

  std::uint32_t max_server = 0;
  for (const auto& g : partition.groups)
    for (const std::uint32_t s : g) max_server = std::max(max_server, s);
  std::vector<std::uint32_t> group_of(static_cast<std::size_t>(max_server) + 1,
                                      std::numeric_limits<std::uint32_t>::max());
  for (std::size_t g = 0; g < partition.groups.size(); ++g)
    for (const std::uint32_t s : partition.groups[g])
      group_of[s] = static_cast<std::uint32_t>(g);

  const std::size_t n_groups = partition.groups.size();
  // Epoch stamps avoid clearing membership arrays between windows.
  std::vector<std::uint32_t> stamp(static_cast<std::size_t>(n_clients) * n_groups, 0);
  std::vector<std::vector<std::uint32_t>> members(n_groups);
  std::vector<WindowVerdict> verdicts(n_groups);

  const std::size_t dims = thr.config.dims();
  const std::size_t bins = thr.config.bins();
  std::vector<std::vector<double>> counts(n_groups,
                                          std::vector<double>(dims * bins, 0.0));
  std::vector<std::vector<double>> norm(n_groups, std::vector<double>(bins, 0.0));

  std::size_t lo = 0, hi = 0;
  for (std::uint32_t j = 0;; ++j) {
    const double ws = cfg.start_time + static_cast<double>(j) * cfg.ntw.stride;
    const double we = ws + cfg.ntw.window_len;
    if (we > cfg.end_time) break;
    const std::uint32_t epoch = j + 1;

    while (lo < records.size() && records[lo].timestamp < ws) ++lo;
    if (hi < lo) hi = lo;
    while (hi < records.size() && records[hi].timestamp < we) ++hi;

    for (auto& m : members) m.clear();
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& r = records[i];
      if (r.dst >= group_of.size()) continue;
      const std::uint32_t g = group_of[r.dst];
      if (g == std::numeric_limits<std::uint32_t>::max()) continue;
      auto& cell = stamp[static_cast<std::size_t>(g) * n_clients + r.src];
      if (cell != epoch) {
        cell = epoch;
        members[g].push_back(r.src);
      }
    }

    const std::uint64_t k0 = stream.first_tick(ws);
    const std::uint64_t k1 = stream.first_tick(we);
    const std::uint64_t ticks = k1 - k0;

    parallel_for(n_groups, cfg.threads, [&](std::size_t g) {
      WindowVerdict v;
      v.fv_count = members[g].size() * ticks;
      if (members[g].empty() || v.fv_count < cfg.min_fvs) {
        verdicts[g] = v;
        return;
      }
      auto& cnt = counts[g];
      std::fill(cnt.begin(), cnt.end(), 0.0);
      std::size_t alerts = 0;
      bool truth_mal = false;
      for (const std::uint32_t c : members[g]) {
        stream.emit(c, k0, k1,
                    [&](double t, std::span<const double> coords, Label truth) {
                      truth_mal |= truth == Label::malicious;
                      const std::uint64_t h =
                          fv_hash(detector.seed, entity_key(c), t);
                      if (!scorer_decide(detector, coords, truth, h)) return;
                      ++alerts;
                      for (std::size_t d = 0; d < dims; ++d)
                        cnt[d * bins + bin_index(thr.config.edges[d], coords[d])] +=
                            1.0;
                    });
      }
      v.alert_count = alerts;
      v.truth_malicious = truth_mal;
      if (alerts < thr.min_alerts) {
        verdicts[g] = v;
        return;
      }
      v.eligible = true;
      const double inv = static_cast<double>(alerts);
      double score = 0.0;
      auto& row = norm[g];
      for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t b = 0; b < bins; ++b) row[b] = cnt[d * bins + b] / inv;
        score += wasserstein_1d(row, thr.reference.rows[d]);
      }
      v.score = score;
      v.malicious = score > thr.gamma;
      verdicts[g] = v;
    });

    if (!visit(we, std::span<const WindowVerdict>(verdicts))) return;
  }
}

}  // namespace detail

// Benign-window shape scores for threshold calibration: every eligible
// (above both floors) neighborhood-window score, in deterministic order.
inline std::vector<double> collect_window_scores(
    const std::vector<BasicNetflowRecord<std::uint32_t>>& records,
    std::uint32_t n_clients, const StructuralPartition<std::uint32_t>& partition,
    const FvStreamModel& stream, const DetectorSpec& detector,
    const ShapeThreshold& thr, const EngineConfig& cfg) {
  std::vector<double> scores;
  detail::scan_windows(records, n_clients, partition, stream, detector, thr, cfg,
                       [&](double, std::span<const detail::WindowVerdict> vs) {
                         for (const auto& v : vs)
                           if (v.eligible) scores.push_back(v.score);
                         return true;
                       });
  return scores;
}

// Slides the window over the trace until the first malicious verdict on a
// window that truly contained malicious FVs. Malicious verdicts on windows
// with no malicious truth count as false-positive windows; windows where no
// neighborhood cleared the floors produce no verdict at all and are
// excluded from every tally.
inline DetectionOutcome run_detection(
    const std::vector<BasicNetflowRecord<std::uint32_t>>& records,
    std::uint32_t n_clients, const StructuralPartition<std::uint32_t>& partition,
    const FvStreamModel& stream, const DetectorSpec& detector,
    const ShapeThreshold& thr, const EngineConfig& cfg) {
  DetectionOutcome out;
  detail::scan_windows(
      records, n_clients, partition, stream, detector, thr, cfg,
      [&](double window_end, std::span<const detail::WindowVerdict> vs) {
        bool any_eligible = false, true_hit = false, false_hit = false;
        for (const auto& v : vs) {
          any_eligible |= v.eligible;
          if (v.eligible && v.malicious)
            (v.truth_malicious ? true_hit : false_hit) = true;
        }
        if (any_eligible) ++out.windows_total;
        if (true_hit) {
          out.detected = true;
          out.detection_time = window_end;
          out.infected_at_detection = stream.timeline().infected_by(window_end);
          return false;
        }
        if (false_hit) ++out.fp_windows;
        return true;
      });
  return out;
}

enum class PartitionMode { single, isolate_hot, per_server };

inline PartitionMode partition_mode_from_string(const std::string& s) {
  if (s == "single") return PartitionMode::single;
  if (s == "isolate_hot") return PartitionMode::isolate_hot;
  if (s == "per_server") return PartitionMode::per_server;
  throw std::invalid_argument("unknown partition mode: '" + s + "'");
}

inline StructuralPartition<std::uint32_t> make_partition(PartitionMode mode,
                                                         std::uint32_t n_servers,
                                                         std::uint32_t hot_server) {
  StructuralPartition<std::uint32_t> p;
  switch (mode) {
    case PartitionMode::single: {
      std::vector<std::uint32_t> all(n_servers);
      std::iota(all.begin(), all.end(), 0u);
      p.groups.push_back(std::move(all));
      break;
    }
    case PartitionMode::isolate_hot: {
      p.groups.push_back({hot_server});
      std::vector<std::uint32_t> rest;
      for (std::uint32_t s = 0; s < n_servers; ++s)
        if (s != hot_server) rest.push_back(s);
      if (!rest.empty()) p.groups.push_back(std::move(rest));
      break;
    }
    case PartitionMode::per_server: {
      for (std::uint32_t s = 0; s < n_servers; ++s) p.groups.push_back({s});
      break;
    }
  }
  p.validate();
  return p;
}

// A pre-recorded trace, replayed identically for every repetition (only the
// attack and FV-stream seeds vary). Records must be sorted by timestamp and
// ids must be dense indexes (the CLI interns names before building one).
struct FixedTrace {
  std::vector<BasicNetflowRecord<std::uint32_t>> records;
  std::uint32_t n_clients = 0;
  std::uint32_t n_servers = 0;
  double duration = 0.0;
};

// Full experiment description for the waterhole scenario. The corpora are
// synthetic Gaussian draws; the trace seed, attack seed and stream seed for
// every repetition are all derived from `seed`. When fixed_trace is set it
// replaces trace generation (and must outlive the sweep).
struct WaterholeParams {
  TraceGenConfig trace;
  AttackConfig attack;
  GaussianLdConfig corpus_model;
  std::size_t corpus_size = 100000;
  double fv_rate = 1.0;
  DetectorSpec detector;
  std::size_t bins = 50;
  double percentile = 99.0;
  std::size_t min_alerts = 100;
  std::size_t min_fvs = 15000;
  std::uint32_t calib_windows = 120;
  std::uint64_t seed = 1;
  int threads = 1;
  const FixedTrace* fixed_trace = nullptr;
};

// Reference model shared by every run: the binning layout and benign
// reference histogram, built from the detector's false-positive alert FVs
// on the benign corpus. gamma is calibrated per setting.
struct WaterholeModel {
  CorpusMatrix benign;
  CorpusMatrix malicious;
  ShapeThreshold base_thr;
};

inline WaterholeModel build_waterhole_model_from(
    const WaterholeParams& p, const std::vector<ProjectedFV>& benign_fvs,
    const std::vector<ProjectedFV>& malicious_fvs) {
  WaterholeModel m;
  m.base_thr.percentile = p.percentile;
  m.base_thr.min_alerts = p.min_alerts;
  const auto fp_alerts = collect_alert_fvs(benign_fvs, p.detector);
  if (fp_alerts.empty())
    throw std::runtime_error("detector produced no benign alerts to build a reference");
  m.base_thr.config = fit_edges(fp_alerts, p.bins);
  m.base_thr.reference = build_reference(fp_alerts, m.base_thr.config);
  m.benign = flatten_corpus(benign_fvs);
  m.malicious = flatten_corpus(malicious_fvs);
  return m;
}

inline WaterholeModel build_waterhole_model(const WaterholeParams& p) {
  const auto benign_fvs = generate_gaussian_corpus(
      p.corpus_size, Label::benign, p.corpus_model, rng::mix(p.seed, 0xbe1));
  const auto malicious_fvs = generate_gaussian_corpus(
      p.corpus_size, Label::malicious, p.corpus_model, rng::mix(p.seed, 0x3a1));
  return build_waterhole_model_from(p, benign_fvs, malicious_fvs);
}

// One sweep setting: a window length, partition granularity and infection
// probability evaluated together.
struct SweepSetting {
  std::string name;
  NtwConfig ntw;
  PartitionMode partition = PartitionMode::single;
  double infection_prob = 1.0;
};

struct SweepRow {
  std::string setting;
  std::uint32_t rep = 0;
  std::uint64_t seed = 0;
  double compromise_time = 0.0;
  bool detected = false;
  double detection_time = 0.0;
  std::size_t infected_at_detection = 0;
  std::size_t fp_windows = 0;
  std::size_t windows_total = 0;
};

struct SweepSummaryRow {
  std::string setting;
  std::uint32_t reps = 0;
  std::uint32_t detected_runs = 0;
  double mean_infected = 0.0;
  double median_infected = 0.0;
  double p1_infected = 0.0;
  double p99_infected = 0.0;
  double mean_fp_window_rate = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummaryRow> summary;
  std::vector<std::pair<std::string, double>> gammas;  // per setting
};

namespace detail {

inline double nearest_rank(std::vector<double> v, double pct) {
  return calibrate(std::move(v), pct);
}

}  // namespace detail

// Calibrates gamma for one setting from a benign replay: a fresh trace and
// stream with infections disabled, scored window by window; gamma is the
// configured percentile of the eligible window scores. A fixed trace is
// replayed as-is (only the stream draws differ from the attack runs).
inline double calibrate_gamma(const WaterholeParams& p, const WaterholeModel& model,
                              const SweepSetting& setting) {
  TraceGenConfig tcfg = p.trace;
  std::vector<BasicNetflowRecord<std::uint32_t>> generated;
  std::uint32_t n_clients = 0, n_servers = 0;
  double duration = 0.0;
  if (p.fixed_trace) {
    n_clients = p.fixed_trace->n_clients;
    n_servers = p.fixed_trace->n_servers;
    duration = p.fixed_trace->duration;
  } else {
    tcfg.duration = setting.ntw.window_len +
                    static_cast<double>(p.calib_windows) * setting.ntw.stride;
    tcfg.seed = rng::mix(p.seed, 0xca11b);
    generated = generate_trace(tcfg);
    n_clients = tcfg.n_clients;
    n_servers = tcfg.n_servers;
    duration = tcfg.duration;
  }
  const auto& records = p.fixed_trace ? p.fixed_trace->records : generated;
  const auto timeline = benign_timeline(n_clients);
  const FvStreamModel stream(timeline, model.benign, model.malicious, p.fv_rate,
                             rng::mix(p.seed, 0xca11b, 2));
  const auto partition =
      make_partition(setting.partition, n_servers, p.attack.waterhole_server);

  EngineConfig ecfg;
  ecfg.ntw = setting.ntw;
  ecfg.start_time = 0.0;
  ecfg.end_time = duration;
  ecfg.min_fvs = p.min_fvs;
  ecfg.threads = p.threads;

  const auto scores = collect_window_scores(records, n_clients, partition, stream,
                                            p.detector, model.base_thr, ecfg);
  if (scores.empty())
    throw std::runtime_error(
        "calibration produced no eligible windows; floors are too high for this "
        "configuration");
  return calibrate(scores, p.percentile);
}

// One full attack run for a setting at a given repetition seed.
inline SweepRow run_waterhole_once(const WaterholeParams& p, const WaterholeModel& model,
                                   const SweepSetting& setting, double gamma,
                                   std::uint32_t rep, std::uint64_t rep_seed) {
  TraceGenConfig tcfg = p.trace;
  std::vector<BasicNetflowRecord<std::uint32_t>> generated;
  std::uint32_t n_clients = 0, n_servers = 0;
  double duration = 0.0;
  if (p.fixed_trace) {
    n_clients = p.fixed_trace->n_clients;
    n_servers = p.fixed_trace->n_servers;
    duration = p.fixed_trace->duration;
  } else {
    tcfg.seed = rng::mix(rep_seed, 1);
    generated = generate_trace(tcfg);
    n_clients = tcfg.n_clients;
    n_servers = tcfg.n_servers;
    duration = tcfg.duration;
  }
  const auto& records = p.fixed_trace ? p.fixed_trace->records : generated;

  AttackConfig attack = p.attack;
  attack.infection_prob = setting.infection_prob;
  attack.seed = rng::mix(rep_seed, 2);
  const auto timeline = simulate_infection(records, n_clients, attack);

  const FvStreamModel stream(timeline, model.benign, model.malicious, p.fv_rate,
                             rng::mix(rep_seed, 3));
  const auto partition =
      make_partition(setting.partition, n_servers, attack.waterhole_server);

  ShapeThreshold thr = model.base_thr;
  thr.gamma = gamma;

  EngineConfig ecfg;
  ecfg.ntw = setting.ntw;
  ecfg.start_time = 0.0;
  ecfg.end_time = duration;
  ecfg.min_fvs = p.min_fvs;
  ecfg.threads = p.threads;

  const auto outcome = run_detection(records, n_clients, partition, stream,
                                     p.detector, thr, ecfg);
  SweepRow row;
  row.setting = setting.name;
  row.rep = rep;
  row.seed = rep_seed;
  row.compromise_time = timeline.compromise_time;
  row.detected = outcome.detected;
  row.detection_time = outcome.detection_time;
  row.infected_at_detection = outcome.infected_at_detection;
  row.fp_windows = outcome.fp_windows;
  row.windows_total = outcome.windows_total;
  return row;
}

// Repeats every setting `reps` times with fresh derived seeds. Repetition
// seeds depend only on the repetition index, so settings are compared on
// identical traces and attack draws.
inline SweepResult sweep_waterhole(const WaterholeParams& p,
                                   const std::vector<SweepSetting>& settings,
                                   std::uint32_t reps, const WaterholeModel& model) {
  if (settings.empty()) throw std::invalid_argument("sweep needs at least one setting");
  if (reps == 0) throw std::invalid_argument("sweep needs at least one repetition");

  SweepResult result;
  result.gammas.resize(settings.size());
  parallel_for(settings.size(), p.threads, [&](std::size_t i) {
    WaterholeParams local = p;
    local.threads = 1;  // calibrations are already parallel across settings
    result.gammas[i] = {settings[i].name, calibrate_gamma(local, model, settings[i])};
  });

  result.rows.resize(settings.size() * reps);
  parallel_for(result.rows.size(), p.threads, [&](std::size_t i) {
    const std::size_t si = i / reps;
    const auto rep = static_cast<std::uint32_t>(i % reps);
    WaterholeParams local = p;
    local.threads = 1;  // runs are already parallel across repetitions
    result.rows[i] = run_waterhole_once(local, model, settings[si],
                                        result.gammas[si].second, rep,
                                        rng::mix(p.seed, 0x5eed, rep));
  });

  for (std::size_t si = 0; si < settings.size(); ++si) {
    SweepSummaryRow sm;
    sm.setting = settings[si].name;
    sm.reps = reps;
    std::vector<double> infected;
    double fp_rate_sum = 0.0;
    std::size_t fp_rate_n = 0;
    for (std::uint32_t r = 0; r < reps; ++r) {
      const SweepRow& row = result.rows[si * reps + r];
      if (row.detected) {
        ++sm.detected_runs;
        infected.push_back(static_cast<double>(row.infected_at_detection));
      }
      if (row.windows_total > 0) {
        fp_rate_sum += static_cast<double>(row.fp_windows) /
                       static_cast<double>(row.windows_total);
        ++fp_rate_n;
      }
    }
    if (!infected.empty()) {
      sm.mean_infected = std::accumulate(infected.begin(), infected.end(), 0.0) /
                         static_cast<double>(infected.size());
      sm.median_infected = detail::nearest_rank(infected, 50.0);
      sm.p1_infected = detail::nearest_rank(infected, 1.0);
      sm.p99_infected = detail::nearest_rank(infected, 99.0);
    }
    if (fp_rate_n > 0) sm.mean_fp_window_rate = fp_rate_sum / static_cast<double>(fp_rate_n);
    result.summary.push_back(std::move(sm));
  }
  return result;
}

inline SweepResult sweep_waterhole(const WaterholeParams& p,
                                   const std::vector<SweepSetting>& settings,
                                   std::uint32_t reps) {
  return sweep_waterhole(p, settings, reps, build_waterhole_model(p));
}

inline std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "setting,rep,seed,compromise_time,detection_time,infected_at_detection,"
      "fp_windows,windows_total\n";
  for (const auto& r : rows) {
    out += r.setting;
    out += ',';
    out += fmt_u64(r.rep);
    out += ',';
    out += fmt_u64(r.seed);
    out += ',';
    out += fmt_double(r.compromise_time);
    out += ',';
    if (r.detected) out += fmt_double(r.detection_time);
    out += ',';
    out += fmt_u64(r.infected_at_detection);
    out += ',';
    out += fmt_u64(r.fp_windows);
    out += ',';
    out += fmt_u64(r.windows_total);
    out += '\n';
  }
  return out;
}

inline std::string render_sweep_summary_csv(const std::vector<SweepSummaryRow>& rows) {
  std::string out =
      "setting,reps,detected_runs,mean_infected,median_infected,p1_infected,"
      "p99_infected,mean_fp_window_rate\n";
  for (const auto& r : rows) {
    out += r.setting;
    out += ',';
    out += fmt_u64(r.reps);
    out += ',';
    out += fmt_u64(r.detected_runs);
    out += ',';
    out += fmt_double(r.mean_infected);
    out += ',';
    out += fmt_double(r.median_infected);
    out += ',';
    out += fmt_double(r.p1_infected);
    out += ',';
    out += fmt_double(r.p99_infected);
    out += ',';
    out += fmt_double(r.mean_fp_window_rate);
    out += '\n';
  }
  return out;
}

}  // namespace shapegd
