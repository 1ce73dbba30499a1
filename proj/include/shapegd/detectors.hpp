#pragma once

// Local detectors (LDs): weak per-entity alert sources.
//
// Three scorer kinds are built in:
//  - gaussian: the stylized detector. Benign samples are N(benign_mean,
//    sigma), malicious samples N(malicious_mean, sigma); an FV alerts when
//    its single coordinate exceeds alert_threshold.
//  - oracle_flip: replays ground truth through a noisy channel, alerting on
//    benign FVs with probability fp_rate and staying silent on malicious
//    ones with probability fn_rate. Used to model an LD at a fixed
//    operating point.
//  - external: a subprocess that reads FV lines on stdin and writes one
//    0/1 per line.
// Scorers are pure functions of (FV, seed): randomness is derived by
// hashing the FV's entity id and timestamp, so replay order and sharding
// across threads cannot change decisions.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <thread>

#include "shapegd/core.hpp"
#include "shapegd/rng.hpp"
#include "shapegd/text.hpp"

namespace shapegd {

struct GaussianLdConfig {
  double benign_mean = -1.0;
  double malicious_mean = 1.0;
  double sigma = 1.0;
  double alert_threshold = 0.0;

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  }
};

struct LdDecision {
  bool alert = false;
};

enum class ScorerKind { gaussian, oracle_flip, external, always, never };

inline ScorerKind scorer_kind_from_string(const std::string& s) {
  if (s == "gaussian") return ScorerKind::gaussian;
  if (s == "oracle_flip") return ScorerKind::oracle_flip;
  if (s == "external") return ScorerKind::external;
  if (s == "always") return ScorerKind::always;
  if (s == "never") return ScorerKind::never;
  throw std::invalid_argument("unknown detector kind: '" + s + "'");
}

struct DetectorSpec {
  ScorerKind kind = ScorerKind::gaussian;
  GaussianLdConfig gaussian;
  double fp_rate = 0.06;
  double fn_rate = 0.076;
  std::uint64_t seed = 0;
  std::string command;  // external only

  void validate() const {
    gaussian.validate();
    if (fp_rate < 0.0 || fp_rate > 1.0 || fn_rate < 0.0 || fn_rate > 1.0)
      throw std::invalid_argument("flip rates must be in [0, 1]");
    if (kind == ScorerKind::external && command.empty())
      throw std::invalid_argument("external detector requires a command");
  }
};

// One Gaussian draw for the given ground-truth label.
inline double gaussian_draw(Label label, const GaussianLdConfig& cfg,
                            rng::Xoshiro256pp& gen) {
  const double mean =
      label == Label::malicious ? cfg.malicious_mean : cfg.benign_mean;
  return gen.normal(mean, cfg.sigma);
}

inline ProjectedFV gaussian_sample(Label label, const GaussianLdConfig& cfg,
                                   rng::Xoshiro256pp& gen) {
  cfg.validate();
  ProjectedFV fv;
  fv.truth_label = label;
  fv.coords.push_back(gaussian_draw(label, cfg, gen));
  return fv;
}

// Synthetic single-label corpus; entity ids are dense index strings and
// timestamps the sample index, so every FV hashes distinctly.
inline std::vector<ProjectedFV> generate_gaussian_corpus(std::size_t n, Label label,
                                                         const GaussianLdConfig& cfg,
                                                         std::uint64_t seed) {
  cfg.validate();
  rng::Xoshiro256pp gen(seed);
  std::vector<ProjectedFV> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ProjectedFV fv = gaussian_sample(label, cfg, gen);
    fv.entity_id = "g" + fmt_u64(i);
    fv.timestamp = static_cast<double>(i);
    out.push_back(std::move(fv));
  }
  return out;
}

template <class Id>
LdDecision gaussian_ld(const BasicProjectedFV<Id>& fv, const GaussianLdConfig& cfg) {
  cfg.validate();
  if (fv.coords.size() != 1)
    throw std::invalid_argument("gaussian detector expects 1-dimensional FVs");
  return {fv.coords[0] > cfg.alert_threshold};
}

// Per-FV hash: the sole randomness source for stochastic scorers.
inline std::uint64_t fv_hash(std::uint64_t seed, std::uint64_t entity_key,
                             double timestamp) {
  return rng::mix(seed, entity_key, std::bit_cast<std::uint64_t>(timestamp));
}

inline std::uint64_t entity_key(const std::string& id) { return rng::fnv1a64(id); }
inline std::uint64_t entity_key(std::uint32_t id) { return id; }
inline std::uint64_t entity_key(std::uint64_t id) { return id; }

// Decision for the built-in scorer kinds. `hash` must come from fv_hash on
// the FV's identity; external scorers are handled by replay_ld.
inline bool scorer_decide(const DetectorSpec& d, std::span<const double> coords,
                          Label truth, std::uint64_t hash) {
  switch (d.kind) {
    case ScorerKind::gaussian:
      if (coords.size() != 1)
        throw std::invalid_argument("gaussian detector expects 1-dimensional FVs");
      return coords[0] > d.gaussian.alert_threshold;
    case ScorerKind::oracle_flip: {
      const double u = rng::to_unit(rng::mix64(hash ^ 0xa1b2c3d4e5f60718ULL));
      return truth == Label::malicious ? u >= d.fn_rate : u < d.fp_rate;
    }
    case ScorerKind::always:
      return true;
    case ScorerKind::never:
      return false;
    case ScorerKind::external:
      throw std::invalid_argument("external scorers only run through replay_ld");
  }
  throw std::logic_error("unreachable detector kind");
}

namespace detail {

// Runs `command` with the given stdin content and returns its stdout.
// Writing happens on a helper thread so large payloads cannot deadlock
// against a child that interleaves reading and writing.
inline std::string run_filter(const std::string& command, const std::string& input) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw std::runtime_error("pipe() failed for external detector");
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork() failed for external detector");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);

  std::thread writer([fd = in_pipe[1], &input] {
    // A child that stops reading early must not kill the process: block
    // SIGPIPE on this thread so write() fails with EPIPE instead. The
    // pending signal is discarded when the thread exits.
    sigset_t block;
    sigemptyset(&block);
    sigaddset(&block, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &block, nullptr);
    std::size_t off = 0;
    while (off < input.size()) {
      const ssize_t n = write(fd, input.data() + off, input.size() - off);
      if (n <= 0) break;
      off += static_cast<std::size_t>(n);
    }
    close(fd);
  });

  std::string output;
  char buf[1 << 16];
  ssize_t n;
  while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0)
    output.append(buf, static_cast<std::size_t>(n));
  close(out_pipe[0]);
  writer.join();

  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw std::runtime_error("external detector exited with failure");
  return output;
}

}  // namespace detail

// Replays a corpus through a scorer, one decision per FV in input order.
template <class Id>
std::vector<LdDecision> replay_ld(const std::vector<BasicProjectedFV<Id>>& corpus,
                                  const DetectorSpec& detector) {
  detector.validate();
  std::vector<LdDecision> out;
  out.reserve(corpus.size());

  if (detector.kind == ScorerKind::external) {
    std::string input;
    for (const auto& fv : corpus) {
      input += id_str(fv.entity_id);
      input += ',';
      input += fmt_double(fv.timestamp);
      input += ',';
      input += fv.truth_label == Label::malicious ? '1' : '0';
      for (const double c : fv.coords) {
        input += ',';
        input += fmt_double(c);
      }
      input += '\n';
    }
    const std::string output = detail::run_filter(detector.command, input);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const std::size_t eol = output.find('\n', pos);
      const std::string line =
          output.substr(pos, eol == std::string::npos ? eol : eol - pos);
      if (line != "0" && line != "1")
        throw std::runtime_error("external detector wrote '" + line +
                                 "'; expected 0 or 1 per line");
      out.push_back({line == "1"});
      if (eol == std::string::npos && i + 1 < corpus.size())
        throw std::runtime_error("external detector wrote too few lines");
      pos = eol + 1;
    }
    return out;
  }

  for (const auto& fv : corpus) {
    const std::uint64_t h =
        fv_hash(detector.seed, entity_key(fv.entity_id), fv.timestamp);
    out.push_back({scorer_decide(detector, fv.coords, fv.truth_label, h)});
  }
  return out;
}

// Alert FVs selected by a scorer, in input order.
template <class Id>
std::vector<BasicProjectedFV<Id>> collect_alert_fvs(
    const std::vector<BasicProjectedFV<Id>>& corpus, const DetectorSpec& detector) {
  const auto decisions = replay_ld(corpus, detector);
  std::vector<BasicProjectedFV<Id>> alerts;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (decisions[i].alert) alerts.push_back(corpus[i]);
  return alerts;
}

}  // namespace shapegd
