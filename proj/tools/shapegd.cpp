// shapegd: calibrate a shape threshold, run waterhole sweeps, form
// downloader neighborhoods, score neighborhoods, run baselines and evaluate
// verdict files. One JSON config drives everything; any key is overridable
// with --set dotted.key=value. Exit codes: 0 ok, 2 config error, 3 data
// error, 1 anything else.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shapegd/shapegd.hpp"

namespace {

using namespace shapegd;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

CommonOpts& add_common(CLI::App& sub, std::list<CommonOpts>& store) {
  CommonOpts& o = store.emplace_back();
  sub.add_option("--config", o.config_path, "experiment config (JSON)")
      ->check(CLI::ExistingFile);
  sub.add_option("--set", o.sets,
                 "override one config key, dotted.path=value (repeatable; value "
                 "parsed as JSON, else taken as a string)");
  o.seed_opt = sub.add_option("--seed", o.seed, "override the master seed");
  o.threads_opt = sub.add_option("--threads", o.threads, "override the worker count");
  return o;
}

void apply_set(nlohmann::json& j, const std::string& kv) {
  const std::size_t eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects dotted.key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  nlohmann::json val;
  try {
    val = nlohmann::json::parse(raw);
  } catch (const std::exception&) {
    val = raw;  // bare words are strings
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part =
        key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty())
      throw ConfigError("--set key has an empty path segment: '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(val);
      return;
    }
    node = &(*node)[part];
    if (!node->is_object()) *node = nlohmann::json::object();
    start = dot + 1;
  }
}

ExperimentConfig make_config(const CommonOpts& o) {
  nlohmann::json j = nlohmann::json::object();
  std::string origin = "<defaults>";
  if (!o.config_path.empty()) {
    origin = o.config_path;
    try {
      j = nlohmann::json::parse(read_file(o.config_path));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(origin + ": invalid JSON: " + ex.what());
    }
    if (!j.is_object()) throw ConfigError(origin + ": config must be a JSON object");
  }
  for (const auto& kv : o.sets) apply_set(j, kv);
  if (o.seed_opt->count() > 0) j["seed"] = o.seed;
  if (o.threads_opt->count() > 0) j["threads"] = o.threads;
  return parse_experiment_config(j.dump(), origin);
}

std::string provenance_line(const ExperimentConfig& cfg) {
  return "# config_hash=" + cfg.config_hash() + " seed=" + fmt_u64(cfg.seed) + "\n";
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

// ---- calibrate ----

void cmd_calibrate(const ExperimentConfig& cfg, const std::string& out_path) {
  std::vector<ProjectedFV> corpus;
  if (!cfg.benign_corpus_path.empty()) {
    corpus = load_fv_corpus(cfg.benign_corpus_path);
    std::erase_if(corpus,
                  [](const ProjectedFV& fv) { return fv.truth_label != Label::benign; });
    if (corpus.empty())
      throw DataError(cfg.benign_corpus_path + ": no benign-labeled FVs to calibrate on");
  } else {
    corpus = generate_gaussian_corpus(cfg.corpus_size, Label::benign, cfg.gaussian,
                                      rng::mix(cfg.seed, 0xbe1));
  }

  const auto fp_alerts = collect_alert_fvs(corpus, cfg.detector_spec());
  if (fp_alerts.empty())
    throw DataError("detector raised no alerts on the benign corpus; nothing to calibrate");

  ShapeThreshold thr;
  try {
    thr = calibrate_threshold_from_alerts(fp_alerts, cfg.bins, cfg.calib_group_size,
                                          cfg.percentile, cfg.min_alerts);
  } catch (const std::invalid_argument& ex) {
    throw DataError(ex.what());
  }

  nlohmann::json j = nlohmann::json::parse(render_threshold(thr));
  j["provenance"] = {{"config_hash", cfg.config_hash()}, {"seed", cfg.seed}};
  ensure_parent_dir(out_path);
  write_file(out_path, j.dump(2) + "\n");

  std::cout << "gamma=" << fmt_double(thr.gamma) << " (p" << fmt_double(cfg.percentile)
            << " of " << fp_alerts.size() / cfg.calib_group_size << " groups of "
            << cfg.calib_group_size << ", " << fp_alerts.size() << " alert FVs) -> "
            << out_path << "\n";
}

// ---- simulate ----

std::vector<SweepSetting> build_settings(const ExperimentConfig& cfg) {
  const std::vector<double> ntws =
      cfg.sweep_ntws.empty() ? std::vector<double>{cfg.ntw.window_len} : cfg.sweep_ntws;
  const std::vector<double> probs =
      cfg.sweep_probs.empty() ? std::vector<double>{cfg.infection_prob} : cfg.sweep_probs;
  const std::vector<std::string> parts = cfg.sweep_partitions.empty()
                                             ? std::vector<std::string>{"single"}
                                             : cfg.sweep_partitions;
  std::vector<SweepSetting> settings;
  for (const double w : ntws)
    for (const auto& mode : parts)
      for (const double prob : probs) {
        SweepSetting s;
        s.ntw = NtwConfig{w, cfg.ntw.stride};
        s.partition = partition_mode_from_string(mode);
        s.infection_prob = prob;
        s.name = "ntw" + fmt_double(w) + "-" + mode + "-p" + fmt_double(prob);
        settings.push_back(std::move(s));
      }
  return settings;
}

FixedTrace intern_trace(const std::string& path, const std::string& waterhole,
                        std::uint32_t& hot_out) {
  const auto raw = load_netflow(path);
  if (raw.empty()) throw DataError(path + ": trace has no records");
  IdTable clients, servers;
  FixedTrace fixed;
  fixed.records.reserve(raw.size());
  for (const auto& r : raw) {
    BasicNetflowRecord<std::uint32_t> rec;
    rec.timestamp = r.timestamp;
    rec.src = clients.intern(r.src);
    rec.dst = servers.intern(r.dst);
    rec.src_port = r.src_port;
    rec.dst_port = r.dst_port;
    rec.proto = r.proto;
    rec.packets = r.packets;
    rec.bytes = r.bytes;
    fixed.records.push_back(rec);
  }
  std::sort(fixed.records.begin(), fixed.records.end(),
            [](const auto& a, const auto& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.src < b.src;
            });
  fixed.n_clients = clients.size();
  fixed.n_servers = servers.size();
  fixed.duration = fixed.records.back().timestamp;
  const std::uint32_t* hot = servers.find(waterhole);
  if (!hot)
    throw ConfigError("attack.waterhole_server '" + waterhole +
                      "' does not appear in the trace");
  hot_out = *hot;
  return fixed;
}

void cmd_simulate(const ExperimentConfig& cfg, const std::string& threshold_path,
                  const std::string& out_dir) {
  if (cfg.detector_kind == "external")
    throw ConfigError("the simulator cannot drive an external detector");

  WaterholeParams p = to_waterhole_params(cfg);

  FixedTrace fixed;
  if (!cfg.netflow_path.empty()) {
    std::uint32_t hot = 0;
    fixed = intern_trace(cfg.netflow_path, cfg.waterhole_server, hot);
    p.attack.waterhole_server = hot;
    p.fixed_trace = &fixed;
  }

  const auto settings = build_settings(cfg);
  const double horizon = p.fixed_trace ? fixed.duration : p.trace.duration;
  for (const auto& s : settings)
    if (s.ntw.window_len > horizon)
      throw ConfigError("window of " + fmt_double(s.ntw.window_len) +
                        "s does not fit the " + fmt_double(horizon) + "s trace");

  WaterholeModel model;
  if (!cfg.benign_corpus_path.empty()) {
    const auto benign = load_fv_corpus(cfg.benign_corpus_path);
    const auto malicious = load_fv_corpus(cfg.malicious_corpus_path);
    if (benign.empty() || malicious.empty())
      throw DataError("stream corpora must be non-empty");
    if (benign.front().coords.size() != malicious.front().coords.size())
      throw DataError("benign and malicious corpora disagree on FV dimensionality");
    model = build_waterhole_model_from(p, benign, malicious);
  } else {
    model = build_waterhole_model(p);
  }

  if (!threshold_path.empty()) {
    ShapeThreshold loaded = load_threshold(threshold_path);
    if (loaded.config.dims() != model.base_thr.config.dims())
      throw DataError(threshold_path +
                      ": threshold dimensionality does not match the FV corpus");
    // The file supplies binning, reference and the alert floor; gamma is
    // still recalibrated per setting because the benign score scale depends
    // on the window length.
    model.base_thr = std::move(loaded);
  }

  const SweepResult result = sweep_waterhole(p, settings, cfg.reps, model);

  std::filesystem::create_directories(out_dir);
  const std::string prov = provenance_line(cfg);
  write_file(out_dir + "/runs.csv", prov + render_sweep_csv(result.rows));
  write_file(out_dir + "/summary.csv", prov + render_sweep_summary_csv(result.summary));

  nlohmann::json meta;
  meta["command"] = "simulate";
  meta["config_hash"] = cfg.config_hash();
  meta["seed"] = cfg.seed;
  meta["reps"] = cfg.reps;
  nlohmann::json gammas = nlohmann::json::object();
  for (const auto& [name, gamma] : result.gammas) gammas[name] = gamma;
  meta["gamma"] = std::move(gammas);
  write_file(out_dir + "/meta.json", meta.dump(2) + "\n");

  for (const auto& s : result.summary)
    std::cout << s.setting << ": detected " << s.detected_runs << "/" << s.reps
              << ", mean infected at detection " << fmt_double(s.mean_infected)
              << ", fp window rate " << fmt_double(s.mean_fp_window_rate) << "\n";
  std::cout << "wrote " << out_dir << "/runs.csv, summary.csv, meta.json\n";
}

// ---- neighborhoods ----

void cmd_neighborhoods(const ExperimentConfig& cfg, const std::string& edges_path,
                       const std::string& domains_path, const std::string& alerts_path,
                       double window_start, const std::string& out_path) {
  const auto edges = load_download_edges(edges_path);
  const auto suspicious = load_domain_labels(domains_path);
  std::unordered_set<std::string> alerted;
  if (!alerts_path.empty()) alerted = load_id_list(alerts_path);

  auto nbds = form_downloader_neighborhoods(
      edges, [&](const std::string& d) { return suspicious.count(d) > 0; }, cfg.ntw,
      window_start);
  const auto merged =
      merge_neighborhoods(std::move(nbds), alerted, cfg.min_neighborhood_size);

  std::string out = provenance_line(cfg);
  for (const auto& n : merged) {
    nlohmann::json j;
    j["id"] = n.id;
    j["seed"] = n.seed;
    j["window_start"] = n.window_start;
    j["window_end"] = n.window_end;
    j["size"] = n.members.size();
    j["score"] = malicious_score(n, alerted);
    j["members"] = n.members;
    out += j.dump();
    out += '\n';
  }
  ensure_parent_dir(out_path);
  write_file(out_path, out);
  std::cout << merged.size() << " merged neighborhood(s) -> " << out_path << "\n";
}

// ---- score ----

struct ScoreUnit {
  std::string id;
  std::vector<ProjectedFV> alerts;
  bool truth_malicious = false;
};

std::vector<ScoreUnit> units_from_jsonl(const std::string& path,
                                        const std::vector<ProjectedFV>& fvs,
                                        const std::vector<LdDecision>& decisions) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_entity;
  for (std::size_t i = 0; i < fvs.size(); ++i)
    by_entity[fvs[i].entity_id].push_back(i);

  std::vector<ScoreUnit> units;
  const std::string text = read_file(path);
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      ScoreUnit u;
      u.id = j.at("id").get<std::string>();
      for (const auto& m : j.at("members")) {
        const auto it = by_entity.find(m.get<std::string>());
        if (it == by_entity.end()) continue;
        for (const std::size_t i : it->second) {
          u.truth_malicious |= fvs[i].truth_label == Label::malicious;
          if (decisions[i].alert) u.alerts.push_back(fvs[i]);
        }
      }
      units.push_back(std::move(u));
    } catch (const std::exception& ex) {
      throw DataError(path + ":" + fmt_u64(line_no) + ": bad neighborhood record: " +
                      ex.what());
    }
  });
  if (units.empty()) throw DataError(path + ": no neighborhood records");
  return units;
}

void cmd_score(const ExperimentConfig& cfg, const std::string& threshold_path,
               const std::string& fvs_path, const std::string& nbd_path,
               const std::string& out_path) {
  const ShapeThreshold thr = load_threshold(threshold_path);
  const auto fvs = load_fv_corpus(fvs_path);
  if (fvs.empty()) throw DataError(fvs_path + ": no FVs to score");
  if (fvs.front().coords.size() != thr.config.dims())
    throw DataError(fvs_path + ": FV dimensionality does not match the threshold file");

  const auto decisions = replay_ld(fvs, cfg.detector_spec());

  std::vector<ScoreUnit> units;
  if (nbd_path.empty()) {
    ScoreUnit u;
    u.id = "all";
    for (std::size_t i = 0; i < fvs.size(); ++i) {
      u.truth_malicious |= fvs[i].truth_label == Label::malicious;
      if (decisions[i].alert) u.alerts.push_back(fvs[i]);
    }
    units.push_back(std::move(u));
  } else {
    units = units_from_jsonl(nbd_path, fvs, decisions);
  }

  std::vector<VerdictRow> rows;
  std::size_t flagged = 0, floored = 0;
  for (const auto& u : units) {
    const NeighborhoodVerdict v = classify_neighborhood(u.alerts, thr.config, thr);
    VerdictRow r;
    r.source = "shape";
    r.unit = u.id;
    r.score = v.score;
    r.verdict = v.label == Label::malicious ? 1 : 0;
    r.truth = u.truth_malicious ? 1 : 0;
    rows.push_back(std::move(r));
    flagged += v.label == Label::malicious ? 1u : 0u;
    floored += v.below_floor ? 1u : 0u;
  }

  ensure_parent_dir(out_path);
  write_file(out_path, provenance_line(cfg) + render_verdict_csv(rows));
  std::cout << rows.size() << " unit(s): " << flagged << " flagged malicious, " << floored
            << " below the alert floor -> " << out_path << "\n";
}

// ---- baseline ----

void cmd_baseline_count(const ExperimentConfig& cfg, const std::vector<double>& errors,
                        const std::string& out_path) {
  CountBenchmarkParams bp;
  bp.benign_alert_rate = cfg.fp_rate;
  bp.tp_rate = 1.0 - cfg.fn_rate;
  bp.calib_percentile = cfg.percentile;
  bp.seed = cfg.seed;
  const CountBenchmarkResult result = count_fragility_benchmark(bp, errors);

  std::string out = provenance_line(cfg);
  out += "# alert_rate_threshold=" + fmt_double(result.threshold) + "\n";
  out += "size_error_pct,fp_rate,tp_rate,fp_stderr,tp_stderr\n";
  for (const auto& r : result.rows) {
    out += fmt_double(r.size_error_pct);
    out += ',';
    out += fmt_double(r.fp_rate);
    out += ',';
    out += fmt_double(r.tp_rate);
    out += ',';
    out += fmt_double(r.fp_stderr);
    out += ',';
    out += fmt_double(r.tp_stderr);
    out += '\n';
  }
  ensure_parent_dir(out_path);
  write_file(out_path, out);
  std::cout << "count-baseline sweep over " << result.rows.size() << " size-error settings "
            << "(threshold " << fmt_double(result.threshold) << ") -> " << out_path
            << "\n";
}

void cmd_baseline_cluster(const ExperimentConfig& cfg, const std::string& fvs_path,
                          const std::string& out_path) {
  if (fvs_path.empty()) throw ConfigError("baseline cluster needs --fvs");
  const auto fvs = load_fv_corpus(fvs_path);
  const auto alerts = collect_alert_fvs(fvs, cfg.detector_spec());
  if (alerts.empty()) throw DataError("detector raised no alerts; nothing to cluster");

  const auto clusters = cluster_fvs(alerts, rng::mix(cfg.seed, 0xc1));
  std::vector<Label> truth;
  truth.reserve(alerts.size());
  for (const auto& fv : alerts) truth.push_back(fv.truth_label);

  std::vector<VerdictRow> rows;
  for (const auto& c : clusters) {
    // Earlier-created clusters are more suspicious: score K - rank, flag
    // only the first cluster's members.
    const double score = static_cast<double>(clusters.size() - c.creation_rank);
    for (const std::size_t i : c.members) {
      VerdictRow r;
      r.source = "cluster";
      r.unit = alerts[i].entity_id + "@" + fmt_double(alerts[i].timestamp);
      r.score = score;
      r.verdict = c.creation_rank == 0 ? 1 : 0;
      r.truth = alerts[i].truth_label == Label::malicious ? 1 : 0;
      rows.push_back(std::move(r));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const VerdictRow& a, const VerdictRow& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.unit < b.unit;
  });

  ensure_parent_dir(out_path);
  write_file(out_path, provenance_line(cfg) + render_verdict_csv(rows));

  std::cout << clusters.size() << " cluster(s) over " << alerts.size() << " alert FVs";
  bool both = false;
  {
    std::size_t pos = 0;
    for (const Label t : truth) pos += t == Label::malicious ? 1u : 0u;
    both = pos > 0 && pos < truth.size();
  }
  if (both) {
    const auto roc = clustering_roc(clusters, truth);
    std::cout << ", rank AUC " << fmt_double(roc.auc);
  }
  std::cout << " -> " << out_path << "\n";
}

// ---- eval ----

void cmd_eval(const ExperimentConfig& cfg, const std::vector<std::string>& verdict_paths,
              const std::string& out_path) {
  std::vector<VerdictRow> rows;
  for (const auto& path : verdict_paths) {
    auto part = load_verdict_csv(path);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  if (rows.empty()) throw DataError("no verdict rows to evaluate");

  std::map<std::string, std::vector<const VerdictRow*>> by_source;
  for (const auto& r : rows) by_source[r.source].push_back(&r);

  std::string out = provenance_line(cfg);
  out += "source,units,auc,precision,recall,f1,overlap\n";
  for (const auto& [source, group] : by_source) {
    std::size_t tp = 0, fp = 0, fn = 0;
    std::vector<ScoredUnit> scored;
    std::vector<double> benign_scores, malicious_scores;
    for (const VerdictRow* r : group) {
      if (r->verdict == 1 && r->truth == 1) ++tp;
      if (r->verdict == 1 && r->truth == 0) ++fp;
      if (r->verdict == 0 && r->truth == 1) ++fn;
      scored.push_back({r->score, r->truth == 1 ? Label::malicious : Label::benign});
      (r->truth == 1 ? malicious_scores : benign_scores).push_back(r->score);
    }
    const bool both = !benign_scores.empty() && !malicious_scores.empty();
    const Prf1 pr = prf1(tp, fp, fn);

    std::string auc_s, overlap_s;
    if (both) {
      auc_s = fmt_double(roc_auc(std::move(scored)).auc);
      overlap_s =
          fmt_double(score_histogram(benign_scores, malicious_scores, cfg.bins).overlap);
    }
    out += source;
    out += ',';
    out += fmt_u64(group.size());
    out += ',';
    out += auc_s;
    out += ',';
    out += fmt_double(pr.precision);
    out += ',';
    out += fmt_double(pr.recall);
    out += ',';
    out += fmt_double(pr.f1);
    out += ',';
    out += overlap_s;
    out += '\n';
    std::cout << source << ": units=" << group.size()
              << (both ? " auc=" + auc_s : std::string())
              << " precision=" << fmt_double(pr.precision)
              << " recall=" << fmt_double(pr.recall) << " f1=" << fmt_double(pr.f1)
              << (both ? " overlap=" + overlap_s : std::string()) << "\n";
  }
  ensure_parent_dir(out_path);
  write_file(out_path, out);
  std::cout << "wrote " << out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shape-based global detector over weak local-detector alerts"};
  app.require_subcommand(1);
  std::list<CommonOpts> store;

  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "build a shape threshold from a benign corpus");
  auto& calibrate_opts = add_common(*calibrate_cmd, store);
  std::string calibrate_out = "threshold.json";
  calibrate_cmd->add_option("--out", calibrate_out, "threshold file to write");

  auto* simulate_cmd =
      app.add_subcommand("simulate", "run the waterhole attack sweep");
  auto& simulate_opts = add_common(*simulate_cmd, store);
  std::string simulate_threshold, simulate_out = "sim_out";
  simulate_cmd->add_option("--threshold", simulate_threshold,
                           "threshold file supplying binning and reference "
                           "(gamma is recalibrated per setting)")
      ->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out-dir", simulate_out, "output directory");

  auto* nbd_cmd = app.add_subcommand(
      "neighborhoods", "form and merge downloader-graph neighborhoods");
  auto& nbd_opts = add_common(*nbd_cmd, store);
  std::string nbd_edges, nbd_domains, nbd_alerts, nbd_out = "neighborhoods.jsonl";
  double nbd_window_start = 0.0;
  nbd_cmd->add_option("--edges", nbd_edges, "download edge CSV")
      ->required()
      ->check(CLI::ExistingFile);
  nbd_cmd->add_option("--domains", nbd_domains, "domain label CSV")
      ->required()
      ->check(CLI::ExistingFile);
  nbd_cmd->add_option("--alerts", nbd_alerts,
                      "file ids with LD alerts, one per line (for merge ordering)")
      ->check(CLI::ExistingFile);
  nbd_cmd->add_option("--window-start", nbd_window_start, "window start time");
  nbd_cmd->add_option("--out", nbd_out, "neighborhood JSONL to write");

  auto* score_cmd =
      app.add_subcommand("score", "score FV groups against a calibrated threshold");
  auto& score_opts = add_common(*score_cmd, store);
  std::string score_threshold, score_fvs, score_nbds, score_out = "verdicts.csv";
  score_cmd->add_option("--threshold", score_threshold, "threshold file")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--fvs", score_fvs, "FV corpus CSV")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--neighborhoods", score_nbds,
                        "neighborhood JSONL; omitted = score the whole corpus as one unit")
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--out", score_out, "verdict CSV to write");

  auto* baseline_cmd = app.add_subcommand("baseline", "run a baseline detector");
  auto& baseline_opts = add_common(*baseline_cmd, store);
  std::string baseline_kind, baseline_fvs, baseline_out = "baseline.csv";
  std::vector<double> baseline_errors{-50, -40, -30, -20, -10, -5, 0,
                                      5,   10,  20,  30,  40,  50};
  baseline_cmd->add_option("--kind", baseline_kind, "count | cluster")
      ->required()
      ->check(CLI::IsMember({"count", "cluster"}));
  baseline_cmd->add_option("--fvs", baseline_fvs, "FV corpus CSV (cluster)")
      ->check(CLI::ExistingFile);
  baseline_cmd->add_option("--errors", baseline_errors,
                           "size error percentages to sweep (count)");
  baseline_cmd->add_option("--out", baseline_out, "output CSV");

  auto* eval_cmd = app.add_subcommand("eval", "compute metrics over verdict files");
  auto& eval_opts = add_common(*eval_cmd, store);
  std::vector<std::string> eval_verdicts;
  std::string eval_out = "metrics.csv";
  eval_cmd->add_option("--verdicts", eval_verdicts, "verdict CSV files")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "metrics CSV to write");

  calibrate_cmd->callback(
      [&] { cmd_calibrate(make_config(calibrate_opts), calibrate_out); });
  simulate_cmd->callback([&] {
    cmd_simulate(make_config(simulate_opts), simulate_threshold, simulate_out);
  });
  nbd_cmd->callback([&] {
    cmd_neighborhoods(make_config(nbd_opts), nbd_edges, nbd_domains, nbd_alerts,
                      nbd_window_start, nbd_out);
  });
  score_cmd->callback([&] {
    cmd_score(make_config(score_opts), score_threshold, score_fvs, score_nbds, score_out);
  });
  baseline_cmd->callback([&] {
    const ExperimentConfig cfg = make_config(baseline_opts);
    if (baseline_kind == "count")
      cmd_baseline_count(cfg, baseline_errors, baseline_out);
    else
      cmd_baseline_cluster(cfg, baseline_fvs, baseline_out);
  });
  eval_cmd->callback(
      [&] { cmd_eval(make_config(eval_opts), eval_verdicts, eval_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const shapegd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const shapegd::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
