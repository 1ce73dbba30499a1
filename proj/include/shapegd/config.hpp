#pragma once

// Experiment configuration: one JSON file with a fixed key schema. Unknown
// keys are rejected, all values are validated up front, and the canonical
// re-serialization of the parsed config is hashed into every output file so
// results can be traced back to the exact configuration that produced them.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapegd/detectors.hpp"
#include "shapegd/errors.hpp"
#include "shapegd/neighborhoods.hpp"
#include "shapegd/rng.hpp"
#include "shapegd/simulator.hpp"
#include "shapegd/text.hpp"

namespace shapegd {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int threads = 1;

  // detector
  std::string detector_kind = "gaussian";
  GaussianLdConfig gaussian;
  double fp_rate = 0.06;
  double fn_rate = 0.076;
  std::string detector_command;

  // histogram + threshold
  std::size_t bins = 50;
  double percentile = 99.0;
  std::size_t min_alerts = 100;
  std::size_t calib_group_size = 900;

  // windows + floors
  NtwConfig ntw{30.0, 1.0};
  std::size_t min_fvs = 15000;
  std::size_t min_neighborhood_size = 1000;

  // trace
  TraceGenConfig trace;
  double target_hot_rps = 0.0;  // 0 = use trace.req_rate_per_client as given
  std::string netflow_path;

  // attack
  std::string waterhole_server = "s0";
  double compromise_t0 = 0.0;
  double compromise_t1 = 0.0;
  double infection_prob = 1.0;

  // FV stream
  double fv_rate = 1.0;
  std::size_t corpus_size = 100000;
  std::string benign_corpus_path;
  std::string malicious_corpus_path;

  // sweep
  std::vector<double> sweep_ntws;
  std::vector<double> sweep_probs;
  std::vector<std::string> sweep_partitions;
  std::uint32_t reps = 1;
  std::uint32_t calib_windows = 120;

  std::string canonical;  // canonical serialized form (for hashing)

  std::string config_hash() const {
    return fmt_hash(rng::fnv1a64(canonical));
  }

  static std::string fmt_hash(std::uint64_t h) {
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = hex[h & 0xf];
      h >>= 4;
    }
    return s;
  }

  DetectorSpec detector_spec() const {
    DetectorSpec d;
    d.kind = scorer_kind_from_string(detector_kind);
    d.gaussian = gaussian;
    d.fp_rate = fp_rate;
    d.fn_rate = fn_rate;
    d.seed = rng::mix(seed, 0xde7ec7);
    d.command = detector_command;
    return d;
  }
};

namespace cfgdetail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& scope,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("unknown config key '" + scope + key + "'");
  }
}

template <class T>
void get_if(const json& obj, const std::string& scope, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError("bad value for config key '" + scope + key + "'");
  }
}

}  // namespace cfgdetail

// Parses and fully validates an experiment config. Throws ConfigError on
// unknown keys, type mismatches, or semantically invalid values; no
// computation happens before validation passes.
inline ExperimentConfig parse_experiment_config(const std::string& text,
                                                const std::string& origin) {
  using cfgdetail::check_keys;
  using cfgdetail::get_if;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(origin + ": invalid JSON: " + ex.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": config must be a JSON object");

  check_keys(j, "", {"seed", "threads", "detector", "histogram", "threshold", "ntw",
                     "floors", "trace", "attack", "stream", "sweep"});

  ExperimentConfig c;
  get_if(j, "", "seed", c.seed);
  get_if(j, "", "threads", c.threads);
  if (c.threads < 1) throw ConfigError("threads must be >= 1");

  if (j.contains("detector")) {
    const auto& d = j["detector"];
    check_keys(d, "detector.",
               {"kind", "fp_rate", "fn_rate", "benign_mean", "malicious_mean", "sigma",
                "alert_threshold", "command"});
    get_if(d, "detector.", "kind", c.detector_kind);
    get_if(d, "detector.", "fp_rate", c.fp_rate);
    get_if(d, "detector.", "fn_rate", c.fn_rate);
    get_if(d, "detector.", "benign_mean", c.gaussian.benign_mean);
    get_if(d, "detector.", "malicious_mean", c.gaussian.malicious_mean);
    get_if(d, "detector.", "sigma", c.gaussian.sigma);
    get_if(d, "detector.", "alert_threshold", c.gaussian.alert_threshold);
    get_if(d, "detector.", "command", c.detector_command);
  }

  if (j.contains("histogram")) {
    check_keys(j["histogram"], "histogram.", {"bins"});
    get_if(j["histogram"], "histogram.", "bins", c.bins);
    if (c.bins < 2 || c.bins > 1024)
      throw ConfigError("histogram.bins must be in [2, 1024]");
  }

  if (j.contains("threshold")) {
    const auto& t = j["threshold"];
    check_keys(t, "threshold.", {"percentile", "min_alerts", "calib_group_size"});
    get_if(t, "threshold.", "percentile", c.percentile);
    get_if(t, "threshold.", "min_alerts", c.min_alerts);
    get_if(t, "threshold.", "calib_group_size", c.calib_group_size);
    if (!(c.percentile > 0.0) || c.percentile > 100.0)
      throw ConfigError("threshold.percentile must be in (0, 100]");
    if (c.calib_group_size == 0)
      throw ConfigError("threshold.calib_group_size must be positive");
  }

  if (j.contains("ntw")) {
    check_keys(j["ntw"], "ntw.", {"window_len", "stride"});
    get_if(j["ntw"], "ntw.", "window_len", c.ntw.window_len);
    get_if(j["ntw"], "ntw.", "stride", c.ntw.stride);
  }

  if (j.contains("floors")) {
    const auto& f = j["floors"];
    check_keys(f, "floors.", {"min_fvs", "min_neighborhood_size"});
    get_if(f, "floors.", "min_fvs", c.min_fvs);
    get_if(f, "floors.", "min_neighborhood_size", c.min_neighborhood_size);
    if (c.min_neighborhood_size == 0)
      throw ConfigError("floors.min_neighborhood_size must be positive");
  }

  if (j.contains("trace")) {
    const auto& t = j["trace"];
    check_keys(t, "trace.",
               {"n_clients", "n_servers", "duration", "req_rate_per_client",
                "target_hot_rps", "zipf_exponent", "netflow_path"});
    get_if(t, "trace.", "n_clients", c.trace.n_clients);
    get_if(t, "trace.", "n_servers", c.trace.n_servers);
    get_if(t, "trace.", "duration", c.trace.duration);
    get_if(t, "trace.", "req_rate_per_client", c.trace.req_rate_per_client);
    get_if(t, "trace.", "target_hot_rps", c.target_hot_rps);
    get_if(t, "trace.", "zipf_exponent", c.trace.zipf_exponent);
    get_if(t, "trace.", "netflow_path", c.netflow_path);
    if (t.contains("req_rate_per_client") && t.contains("target_hot_rps"))
      throw ConfigError(
          "trace.req_rate_per_client and trace.target_hot_rps are exclusive");
  }

  if (j.contains("attack")) {
    const auto& a = j["attack"];
    check_keys(a, "attack.",
               {"waterhole_server", "compromise_t0", "compromise_t1", "infection_prob"});
    get_if(a, "attack.", "waterhole_server", c.waterhole_server);
    get_if(a, "attack.", "compromise_t0", c.compromise_t0);
    get_if(a, "attack.", "compromise_t1", c.compromise_t1);
    get_if(a, "attack.", "infection_prob", c.infection_prob);
  }

  if (j.contains("stream")) {
    const auto& s = j["stream"];
    check_keys(s, "stream.",
               {"fv_rate", "corpus_size", "benign_corpus", "malicious_corpus"});
    get_if(s, "stream.", "fv_rate", c.fv_rate);
    get_if(s, "stream.", "corpus_size", c.corpus_size);
    get_if(s, "stream.", "benign_corpus", c.benign_corpus_path);
    get_if(s, "stream.", "malicious_corpus", c.malicious_corpus_path);
    if (!(c.fv_rate > 0.0)) throw ConfigError("stream.fv_rate must be positive");
    if (c.corpus_size == 0) throw ConfigError("stream.corpus_size must be positive");
    if (c.benign_corpus_path.empty() != c.malicious_corpus_path.empty())
      throw ConfigError("stream corpora must be given together or not at all");
  }

  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    check_keys(s, "sweep.",
               {"ntw_values", "infection_probs", "partition_modes", "reps",
                "calib_windows"});
    get_if(s, "sweep.", "ntw_values", c.sweep_ntws);
    get_if(s, "sweep.", "infection_probs", c.sweep_probs);
    get_if(s, "sweep.", "partition_modes", c.sweep_partitions);
    get_if(s, "sweep.", "reps", c.reps);
    get_if(s, "sweep.", "calib_windows", c.calib_windows);
    if (c.reps == 0) throw ConfigError("sweep.reps must be positive");
    if (c.calib_windows == 0) throw ConfigError("sweep.calib_windows must be positive");
  }

  // Semantic validation of composed values.
  try {
    c.ntw.validate();
    c.trace.validate();
    c.gaussian.validate();
    c.detector_spec().validate();
    for (const double w : c.sweep_ntws)
      NtwConfig{w, c.ntw.stride}.validate();
    for (const double p : c.sweep_probs)
      if (p < 0.0 || p > 1.0) throw ConfigError("sweep.infection_probs out of [0, 1]");
    for (const auto& m : c.sweep_partitions) partition_mode_from_string(m);
    AttackConfig probe;
    probe.compromise_t0 = c.compromise_t0;
    probe.compromise_t1 = c.compromise_t1;
    probe.infection_prob = c.infection_prob;
    probe.validate();
    if (c.target_hot_rps < 0.0) throw ConfigError("trace.target_hot_rps must be >= 0");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(origin + ": " + ex.what());
  }

  // The worker count never changes results, so it stays out of the
  // canonical form (and out of the config hash stamped on outputs).
  j.erase("threads");
  c.canonical = j.dump();
  return c;
}

// Resolves the per-client request rate, honoring target_hot_rps when set.
inline TraceGenConfig resolved_trace_config(const ExperimentConfig& c) {
  TraceGenConfig t = c.trace;
  if (c.target_hot_rps > 0.0)
    t.req_rate_per_client = per_client_rate_for_hot(
        c.target_hot_rps, t.n_clients, t.n_servers, t.zipf_exponent);
  t.seed = rng::mix(c.seed, 0x7ace);
  return t;
}

// Waterhole server name -> server index for synthetic traces ("s12" or "12").
inline std::uint32_t resolve_server_index(const std::string& name,
                                          std::uint32_t n_servers) {
  std::string digits = name;
  if (!digits.empty() && (digits[0] == 's' || digits[0] == 'S'))
    digits.erase(digits.begin());
  long long idx = -1;
  try {
    idx = parse_int(digits);
  } catch (const std::exception&) {
    throw ConfigError("attack.waterhole_server '" + name +
                      "' is not a server index for a synthetic trace");
  }
  if (idx < 0 || static_cast<std::uint64_t>(idx) >= n_servers)
    throw ConfigError("attack.waterhole_server out of range");
  return static_cast<std::uint32_t>(idx);
}

inline WaterholeParams to_waterhole_params(const ExperimentConfig& c) {
  WaterholeParams p;
  p.trace = resolved_trace_config(c);
  // File-backed traces carry their own server names; the caller resolves the
  // waterhole server against the interned table instead.
  if (c.netflow_path.empty())
    p.attack.waterhole_server = resolve_server_index(c.waterhole_server, p.trace.n_servers);
  p.attack.compromise_t0 = c.compromise_t0;
  p.attack.compromise_t1 = c.compromise_t1;
  p.attack.infection_prob = c.infection_prob;
  p.corpus_model = c.gaussian;
  p.corpus_size = c.corpus_size;
  p.fv_rate = c.fv_rate;
  p.detector = c.detector_spec();
  p.bins = c.bins;
  p.percentile = c.percentile;
  p.min_alerts = c.min_alerts;
  p.min_fvs = c.min_fvs;
  p.calib_windows = c.calib_windows;
  p.seed = c.seed;
  p.threads = c.threads;
  return p;
}

}  // namespace shapegd
