#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "shapegd/config.hpp"
#include "shapegd/io.hpp"

using namespace shapegd;
using Catch::Matchers::ContainsSubstring;

namespace {

// Scratch directory removed on destruction; operator() builds file paths.
struct TempDir {
  std::filesystem::path root;

  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "shapegd_io_XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    root = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(root, ec);
  }
  std::string operator()(const std::string& name) const { return (root / name).string(); }
};

std::vector<NetflowRecord> sample_flows() {
  std::vector<NetflowRecord> recs;
  NetflowRecord r;
  r.timestamp = 0.5;
  r.src = "c12";
  r.dst = "s3";
  r.src_port = 49152;
  r.dst_port = 443;
  r.proto = 6;
  r.packets = 10;
  r.bytes = 14600;
  recs.push_back(r);
  r.timestamp = 1.25;
  r.src = "c7";
  r.dst = "s0";
  r.src_port = 51001;
  r.dst_port = 80;
  r.proto = 17;
  r.packets = 2;
  r.bytes = 300;
  recs.push_back(r);
  return recs;
}

bool same_flow(const NetflowRecord& a, const NetflowRecord& b) {
  return a.timestamp == b.timestamp && a.src == b.src && a.dst == b.dst &&
         a.src_port == b.src_port && a.dst_port == b.dst_port && a.proto == b.proto &&
         a.packets == b.packets && a.bytes == b.bytes;
}

ShapeThreshold sample_threshold() {
  std::vector<ProjectedFV> fvs;
  rng::Xoshiro256pp g(77);
  for (int i = 0; i < 60; ++i) {
    ProjectedFV fv;
    fv.entity_id = "e";
    fv.coords = {g.uniform(0.0, 4.0), g.normal(1.0, 0.5)};
    fvs.push_back(std::move(fv));
  }
  ShapeThreshold thr;
  thr.gamma = 1.3125;
  thr.percentile = 97.5;
  thr.min_alerts = 42;
  thr.config = fit_edges(fvs, 4);
  thr.reference = build_vector_histogram(fvs, thr.config);
  return thr;
}

}  // namespace

// ---- raw file helpers ----

TEST_CASE("file helpers report unopenable paths and round-trip gzip") {
  TempDir tmp;
  REQUIRE_THROWS_WITH(read_file(tmp("nope")), ContainsSubstring("cannot open file"));
  REQUIRE_THROWS_AS(read_file(tmp("nope")), DataError);
  REQUIRE_THROWS_AS(read_file_maybe_gz(tmp("nope")), DataError);
  REQUIRE_THROWS_AS(write_file(tmp("no/such/dir/x"), "hi"), DataError);

  write_file(tmp("plain.txt"), "hello\n");
  CHECK(read_file(tmp("plain.txt")) == "hello\n");
  // the gzip reader accepts uncompressed input transparently
  CHECK(read_file_maybe_gz(tmp("plain.txt")) == "hello\n");

  const std::string payload = "line1\nline2\n";
  write_file_gz(tmp("z.gz"), payload);
  CHECK(read_file_maybe_gz(tmp("z.gz")) == payload);
  // the compressed bytes are not the payload itself
  CHECK(read_file(tmp("z.gz")) != payload);

  write_file_gz(tmp("empty.gz"), "");
  CHECK(read_file_maybe_gz(tmp("empty.gz")).empty());
}

// ---- FV corpus ----

TEST_CASE("fv corpus render and load round-trips every field exactly") {
  TempDir tmp;
  std::vector<ProjectedFV> fvs;
  rng::Xoshiro256pp g(404);
  for (int i = 0; i < 25; ++i) {
    ProjectedFV fv;
    fv.entity_id = "host" + std::to_string(i);
    fv.timestamp = g.uniform(-10.0, 10.0);
    fv.truth_label = i % 3 == 0 ? Label::malicious : Label::benign;
    fv.coords = {g.normal(0.0, 3.0), g.uniform01(), -0.0625 * i};
    fvs.push_back(std::move(fv));
  }
  const std::string path = tmp("corpus.csv");
  write_file(path, render_fv_corpus(fvs));
  const auto back = load_fv_corpus(path);
  REQUIRE(back.size() == fvs.size());
  for (std::size_t i = 0; i < fvs.size(); ++i) {
    CHECK(back[i].entity_id == fvs[i].entity_id);
    CHECK(back[i].timestamp == fvs[i].timestamp);
    CHECK(back[i].truth_label == fvs[i].truth_label);
    CHECK(back[i].coords == fvs[i].coords);
  }
  // shortest round-trip number rendering makes the second render byte-identical
  CHECK(render_fv_corpus(back) == render_fv_corpus(fvs));
}

TEST_CASE("fv corpus loader skips comments and blank lines") {
  TempDir tmp;
  const std::string path = tmp("c.csv");
  write_file(path,
             "# config_hash=deadbeef seed=1\n"
             "entity_id,timestamp,label,v1,v2\n"
             "\n"
             "a,1.5,0,0.25,2\n"
             "# trailing note\n"
             "b,2,1,-1,0.5\n");
  const auto fvs = load_fv_corpus(path);
  REQUIRE(fvs.size() == 2);
  CHECK(fvs[0].entity_id == "a");
  CHECK(fvs[0].timestamp == 1.5);
  CHECK(fvs[0].truth_label == Label::benign);
  CHECK(fvs[0].coords == std::vector<double>{0.25, 2.0});
  CHECK(fvs[1].truth_label == Label::malicious);
  CHECK(fvs[1].coords == std::vector<double>{-1.0, 0.5});
}

TEST_CASE("fv corpus loader strips carriage returns") {
  TempDir tmp;
  write_file(tmp("crlf.csv"), "entity_id,timestamp,label,v1\r\na,1,0,2\r\n");
  const auto fvs = load_fv_corpus(tmp("crlf.csv"));
  REQUIRE(fvs.size() == 1);
  CHECK(fvs[0].coords == std::vector<double>{2.0});
}

TEST_CASE("empty corpus render still carries a header") {
  CHECK(render_fv_corpus({}) == "entity_id,timestamp,label,v1\n");
}

TEST_CASE("fv corpus loader names the offending line") {
  TempDir tmp;
  const std::string path = tmp("bad.csv");

  // line numbers count physical lines, comments included
  write_file(path, "entity_id,timestamp,label,v1\n# note\na,1,0,2,9\n");
  REQUIRE_THROWS_WITH(load_fv_corpus(path),
                      ContainsSubstring(path + ":3: expected 4 fields, got 5"));

  write_file(path, "entity_id,timestamp,label,v1\na,xyz,0,2\n");
  REQUIRE_THROWS_WITH(load_fv_corpus(path), ContainsSubstring("bad timestamp value 'xyz'"));

  write_file(path, "entity_id,timestamp,label,v1\na,1,7,2\n");
  REQUIRE_THROWS_WITH(load_fv_corpus(path), ContainsSubstring("label must be 0 or 1"));

  write_file(path, "entity_id,timestamp,label,v1\na,1,0,what\n");
  REQUIRE_THROWS_WITH(load_fv_corpus(path), ContainsSubstring("bad coordinate value 'what'"));

  write_file(path, "wrong,header,here,now\n");
  REQUIRE_THROWS_WITH(load_fv_corpus(path),
                      ContainsSubstring(":1: expected header entity_id,timestamp,label"));

  write_file(path, "# only a comment\n");
  REQUIRE_THROWS_WITH(load_fv_corpus(path), ContainsSubstring("empty corpus file"));
}

// ---- projection basis ----

TEST_CASE("projection basis render and load round-trips") {
  TempDir tmp;
  ProjectionBasis b;
  b.input_dims = 3;
  b.rows = {{1.0, 0.5, -0.25}, {0.0, 2.0, 0.125}};
  CHECK(render_basis(b) == "2 3\n1 0.5 -0.25\n0 2 0.125\n");

  const std::string path = tmp("basis.txt");
  write_file(path, render_basis(b));
  const auto back = load_basis(path);
  CHECK(back.input_dims == 3);
  CHECK(back.rows == b.rows);
  CHECK(render_basis(back) == render_basis(b));
}

TEST_CASE("projection basis loader rejects malformed files") {
  TempDir tmp;
  const std::string path = tmp("b.txt");

  write_file(path, "2 3\n1 0 0\n");
  REQUIRE_THROWS_WITH(load_basis(path),
                      ContainsSubstring("header promised 2 rows, file has 1"));

  write_file(path, "x y\n");
  REQUIRE_THROWS_WITH(load_basis(path), ContainsSubstring("expected header 'L D'"));

  write_file(path, "2 3 4\n");
  REQUIRE_THROWS_WITH(load_basis(path), ContainsSubstring("expected header 'L D'"));

  write_file(path, "0 3\n");
  REQUIRE_THROWS_WITH(load_basis(path), ContainsSubstring("expected header 'L D'"));

  write_file(path, "1 3\n1 0\n");
  REQUIRE_THROWS_WITH(load_basis(path), ContainsSubstring("expected 3 values, got 2"));

  write_file(path, "1 3\n1 0 zz\n");
  REQUIRE_THROWS_WITH(load_basis(path), ContainsSubstring("bad basis value"));

  write_file(path, "# comment\n");
  REQUIRE_THROWS_WITH(load_basis(path), ContainsSubstring("empty basis file"));
}

// ---- netflow ----

TEST_CASE("netflow round-trips through plain and gzip files") {
  TempDir tmp;
  const auto recs = sample_flows();
  const std::string text = render_netflow(recs);
  CHECK(text == std::string(kNetflowHeader) +
                    "\n0.5,c12,s3,49152,443,6,10,14600\n1.25,c7,s0,51001,80,17,2,300\n");

  write_file(tmp("t.csv"), text);
  write_file_gz(tmp("t.csv.gz"), text);
  const auto plain = load_netflow(tmp("t.csv"));
  const auto zipped = load_netflow(tmp("t.csv.gz"));
  REQUIRE(plain.size() == recs.size());
  REQUIRE(zipped.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(same_flow(plain[i], recs[i]));
    CHECK(same_flow(zipped[i], recs[i]));
  }
}

TEST_CASE("netflow loader reports bad headers and fields") {
  TempDir tmp;
  const std::string path = tmp("t.csv");

  write_file(path, "time,src\n");
  REQUIRE_THROWS_WITH(load_netflow(path),
                      ContainsSubstring("expected header timestamp,src,dst"));

  write_file(path, std::string(kNetflowHeader) + "\n1,c0,s0,1,2,6,3\n");
  REQUIRE_THROWS_WITH(load_netflow(path), ContainsSubstring("expected 8 fields, got 7"));

  write_file(path, std::string(kNetflowHeader) + "\n1,c0,s0,1,2,6,three,9\n");
  REQUIRE_THROWS_WITH(load_netflow(path), ContainsSubstring("bad packets value 'three'"));

  write_file(path, "");
  REQUIRE_THROWS_WITH(load_netflow(path), ContainsSubstring("empty netflow file"));
}

// ---- download edges and domain labels ----

TEST_CASE("download edge loader accepts an optional header") {
  TempDir tmp;
  const std::string body = "m1,-,h1,good.example,1.5\nm1,h1,h2,bad.example,2\n";
  write_file(tmp("with.csv"), std::string(kEdgeHeader) + "\n" + body);
  write_file(tmp("without.csv"), body);
  const auto a = load_download_edges(tmp("with.csv"));
  const auto b = load_download_edges(tmp("without.csv"));
  REQUIRE(a.size() == 2);
  REQUIRE(b.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].machine_id == b[i].machine_id);
    CHECK(a[i].parent == b[i].parent);
    CHECK(a[i].child == b[i].child);
    CHECK(a[i].domain == b[i].domain);
    CHECK(a[i].timestamp == b[i].timestamp);
  }
  CHECK(a[0].parent == "-");
  CHECK(a[1].child == "h2");
  CHECK(a[1].timestamp == 2.0);

  // edge lists have no header requirement, so an empty file is an empty list
  write_file(tmp("empty.csv"), "");
  CHECK(load_download_edges(tmp("empty.csv")).empty());
}

TEST_CASE("download edge loader rejects malformed lines") {
  TempDir tmp;
  const std::string path = tmp("e.csv");

  write_file(path, "m1,-,h1,d\n");
  REQUIRE_THROWS_WITH(load_download_edges(path),
                      ContainsSubstring("expected 5 fields, got 4"));

  write_file(path, "m1,,h1,d,1\n");
  REQUIRE_THROWS_WITH(load_download_edges(path), ContainsSubstring("empty field"));

  write_file(path, "m1,h1,h1,d,1\n");
  REQUIRE_THROWS_WITH(load_download_edges(path), ContainsSubstring("parent == child"));

  write_file(path, std::string(kEdgeHeader) + "\nm1,-,h1,d,sometime\n");
  REQUIRE_THROWS_WITH(load_download_edges(path),
                      ContainsSubstring(path + ":2: bad timestamp value 'sometime'"));
}

TEST_CASE("domain label loader keeps only the suspicious set") {
  TempDir tmp;
  write_file(tmp("d.csv"),
             "domain,suspicious_flag\n"
             "good.example,0\n"
             "# provenance\n"
             "bad.example,1\n"
             "worse.example,1\n");
  CHECK(load_domain_labels(tmp("d.csv")) ==
        std::unordered_set<std::string>{"bad.example", "worse.example"});

  write_file(tmp("d2.csv"), "bad.example,1\ngood.example,0\n");
  CHECK(load_domain_labels(tmp("d2.csv")) == std::unordered_set<std::string>{"bad.example"});

  write_file(tmp("d3.csv"), "x.example,2\n");
  REQUIRE_THROWS_WITH(load_domain_labels(tmp("d3.csv")),
                      ContainsSubstring("suspicious_flag must be 0 or 1"));

  write_file(tmp("d4.csv"), "x.example\n");
  REQUIRE_THROWS_WITH(load_domain_labels(tmp("d4.csv")),
                      ContainsSubstring("expected 2 fields, got 1"));
}

TEST_CASE("id list loader ignores comments, blanks, and duplicates") {
  TempDir tmp;
  write_file(tmp("ids.txt"), "# alerted entities\nh1\n\nh2\nh1\n");
  CHECK(load_id_list(tmp("ids.txt")) == std::unordered_set<std::string>{"h1", "h2"});
}

// ---- threshold file ----

TEST_CASE("threshold files round-trip byte-identically") {
  TempDir tmp;
  const ShapeThreshold thr = sample_threshold();
  const std::string text = render_threshold(thr);
  const ShapeThreshold back = parse_threshold(text, "mem");
  CHECK(back.gamma == thr.gamma);
  CHECK(back.percentile == thr.percentile);
  CHECK(back.min_alerts == thr.min_alerts);
  CHECK(back.config.edges == thr.config.edges);
  CHECK(back.reference == thr.reference);
  CHECK(render_threshold(back) == text);

  save_threshold(tmp("thr.json"), thr);
  const ShapeThreshold loaded = load_threshold(tmp("thr.json"));
  CHECK(loaded.reference == thr.reference);
  CHECK(render_threshold(loaded) == text);
}

TEST_CASE("threshold parser tolerates extra keys but rejects inconsistency") {
  const ShapeThreshold thr = sample_threshold();
  nlohmann::json j = nlohmann::json::parse(render_threshold(thr));

  SECTION("unknown top-level keys are ignored") {
    j["provenance"] = {{"config_hash", "deadbeef"}, {"seed", 1}};
    const ShapeThreshold back = parse_threshold(j.dump(), "mem");
    CHECK(back.gamma == thr.gamma);
    CHECK(back.reference == thr.reference);
  }
  SECTION("missing required keys") {
    j.erase("gamma");
    REQUIRE_THROWS_WITH(parse_threshold(j.dump(), "mem"),
                        ContainsSubstring("mem: bad threshold file:"));
  }
  SECTION("reference row count must match the edge dims") {
    j["reference"]["rows"] = std::vector<std::vector<double>>{{0.25, 0.25, 0.25, 0.25}};
    REQUIRE_THROWS_WITH(parse_threshold(j.dump(), "mem"),
                        ContainsSubstring("reference row count does not match edges"));
  }
  SECTION("reference row width must match the bin count") {
    j["reference"]["rows"] = std::vector<std::vector<double>>{{0.5, 0.5}, {0.5, 0.5}};
    REQUIRE_THROWS_WITH(parse_threshold(j.dump(), "mem"),
                        ContainsSubstring("reference row width does not match bin count"));
  }
  SECTION("degenerate edges fail histogram validation") {
    j["edges"] = std::vector<std::vector<double>>{{0.0, 1.0}};
    REQUIRE_THROWS_WITH(parse_threshold(j.dump(), "mem"),
                        ContainsSubstring("bad threshold file:"));
  }
  SECTION("invalid JSON names the origin") {
    REQUIRE_THROWS_WITH(parse_threshold("{oops", "thr.json"),
                        ContainsSubstring("thr.json: invalid JSON:"));
  }
}

// ---- verdict CSV ----

TEST_CASE("verdict csv round-trips and validates flags") {
  TempDir tmp;
  const std::vector<VerdictRow> rows = {
      {"shape", "p0@110", 3.25, 1, 1},
      {"count", "p1@110", 0.5, 0, 0},
      {"cluster", "k2", 7.0, 1, 0},
  };
  const std::string text = render_verdict_csv(rows);
  CHECK(text == std::string(kVerdictHeader) +
                    "\nshape,p0@110,3.25,1,1\ncount,p1@110,0.5,0,0\ncluster,k2,7,1,0\n");

  const std::string path = tmp("v.csv");
  write_file(path, text);
  const auto back = load_verdict_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].source == rows[i].source);
    CHECK(back[i].unit == rows[i].unit);
    CHECK(back[i].score == rows[i].score);
    CHECK(back[i].verdict == rows[i].verdict);
    CHECK(back[i].truth == rows[i].truth);
  }

  write_file(path, std::string(kVerdictHeader) + "\nshape,u,1.5,2,0\n");
  REQUIRE_THROWS_WITH(load_verdict_csv(path),
                      ContainsSubstring("verdict and truth must be 0 or 1"));

  write_file(path, std::string(kVerdictHeader) + "\nshape,u,high,1,0\n");
  REQUIRE_THROWS_WITH(load_verdict_csv(path), ContainsSubstring("bad score value 'high'"));

  write_file(path, "source,unit\n");
  REQUIRE_THROWS_WITH(load_verdict_csv(path),
                      ContainsSubstring("expected header source,unit,score,verdict,truth"));

  write_file(path, "# nothing\n");
  REQUIRE_THROWS_WITH(load_verdict_csv(path), ContainsSubstring("empty verdict file"));
}

// ---- experiment config ----

TEST_CASE("experiment config defaults survive an empty object") {
  const auto c = parse_experiment_config("{}", "cfg");
  CHECK(c.seed == 1);
  CHECK(c.threads == 1);
  CHECK(c.detector_kind == "gaussian");
  CHECK(c.fp_rate == 0.06);
  CHECK(c.fn_rate == 0.076);
  CHECK(c.bins == 50);
  CHECK(c.percentile == 99.0);
  CHECK(c.min_alerts == 100);
  CHECK(c.calib_group_size == 900);
  CHECK(c.ntw.window_len == 30.0);
  CHECK(c.ntw.stride == 1.0);
  CHECK(c.min_fvs == 15000);
  CHECK(c.min_neighborhood_size == 1000);
  CHECK(c.target_hot_rps == 0.0);
  CHECK(c.netflow_path.empty());
  CHECK(c.waterhole_server == "s0");
  CHECK(c.compromise_t0 == 0.0);
  CHECK(c.compromise_t1 == 0.0);
  CHECK(c.infection_prob == 1.0);
  CHECK(c.fv_rate == 1.0);
  CHECK(c.corpus_size == 100000);
  CHECK(c.benign_corpus_path.empty());
  CHECK(c.malicious_corpus_path.empty());
  CHECK(c.sweep_ntws.empty());
  CHECK(c.sweep_probs.empty());
  CHECK(c.sweep_partitions.empty());
  CHECK(c.reps == 1);
  CHECK(c.calib_windows == 120);
  CHECK(c.canonical == "{}");
}

TEST_CASE("experiment config parses every section") {
  const std::string text = R"({
    "seed": 7,
    "threads": 3,
    "detector": {"kind": "oracle_flip", "fp_rate": 0.1, "fn_rate": 0.2,
                 "benign_mean": -2.0, "malicious_mean": 2.5, "sigma": 0.5,
                 "alert_threshold": 0.25},
    "histogram": {"bins": 16},
    "threshold": {"percentile": 95.0, "min_alerts": 20, "calib_group_size": 50},
    "ntw": {"window_len": 10.0, "stride": 2.0},
    "floors": {"min_fvs": 100, "min_neighborhood_size": 5},
    "trace": {"n_clients": 200, "n_servers": 10, "duration": 30.0,
              "zipf_exponent": 0.7, "target_hot_rps": 40.0,
              "netflow_path": "trace.csv.gz"},
    "attack": {"waterhole_server": "s3", "compromise_t0": 5.0,
               "compromise_t1": 8.0, "infection_prob": 0.5},
    "stream": {"fv_rate": 2.0, "corpus_size": 5000,
               "benign_corpus": "b.csv", "malicious_corpus": "m.csv"},
    "sweep": {"ntw_values": [6.0, 10.0], "infection_probs": [0.5, 1.0],
              "partition_modes": ["single", "isolate_hot"], "reps": 3,
              "calib_windows": 40}
  })";
  const auto c = parse_experiment_config(text, "cfg");
  CHECK(c.seed == 7);
  CHECK(c.threads == 3);
  CHECK(c.detector_kind == "oracle_flip");
  CHECK(c.fp_rate == 0.1);
  CHECK(c.fn_rate == 0.2);
  CHECK(c.gaussian.benign_mean == -2.0);
  CHECK(c.gaussian.malicious_mean == 2.5);
  CHECK(c.gaussian.sigma == 0.5);
  CHECK(c.gaussian.alert_threshold == 0.25);
  CHECK(c.bins == 16);
  CHECK(c.percentile == 95.0);
  CHECK(c.min_alerts == 20);
  CHECK(c.calib_group_size == 50);
  CHECK(c.ntw.window_len == 10.0);
  CHECK(c.ntw.stride == 2.0);
  CHECK(c.min_fvs == 100);
  CHECK(c.min_neighborhood_size == 5);
  CHECK(c.trace.n_clients == 200);
  CHECK(c.trace.n_servers == 10);
  CHECK(c.trace.duration == 30.0);
  CHECK(c.trace.zipf_exponent == 0.7);
  CHECK(c.trace.req_rate_per_client == 0.1);  // untouched default
  CHECK(c.target_hot_rps == 40.0);
  CHECK(c.netflow_path == "trace.csv.gz");
  CHECK(c.waterhole_server == "s3");
  CHECK(c.compromise_t0 == 5.0);
  CHECK(c.compromise_t1 == 8.0);
  CHECK(c.infection_prob == 0.5);
  CHECK(c.fv_rate == 2.0);
  CHECK(c.corpus_size == 5000);
  CHECK(c.benign_corpus_path == "b.csv");
  CHECK(c.malicious_corpus_path == "m.csv");
  CHECK(c.sweep_ntws == std::vector<double>{6.0, 10.0});
  CHECK(c.sweep_probs == std::vector<double>{0.5, 1.0});
  CHECK(c.sweep_partitions == std::vector<std::string>{"single", "isolate_hot"});
  CHECK(c.reps == 3);
  CHECK(c.calib_windows == 40);
}

TEST_CASE("config hash ignores key order and thread count") {
  const auto a =
      parse_experiment_config(R"({"seed": 9, "histogram": {"bins": 8}, "threads": 1})", "a");
  const auto b =
      parse_experiment_config(R"({"threads": 16, "histogram": {"bins": 8}, "seed": 9})", "b");
  CHECK(a.threads == 1);
  CHECK(b.threads == 16);
  CHECK(a.canonical == b.canonical);
  CHECK(a.config_hash() == b.config_hash());
  // the canonical form is the sorted-key dump with the worker count removed
  CHECK(a.canonical == R"({"histogram":{"bins":8},"seed":9})");
  CHECK(a.config_hash() == ExperimentConfig::fmt_hash(rng::fnv1a64(a.canonical)));

  const auto c = parse_experiment_config(R"({"seed": 10, "histogram": {"bins": 8}})", "c");
  CHECK(c.config_hash() != a.config_hash());
}

TEST_CASE("hash formatting is fixed-width lowercase hex") {
  CHECK(ExperimentConfig::fmt_hash(0) == "0000000000000000");
  CHECK(ExperimentConfig::fmt_hash(0x123456789abcdef0ULL) == "123456789abcdef0");
  CHECK(ExperimentConfig::fmt_hash(0xffffffffffffffffULL) == "ffffffffffffffff");
}

TEST_CASE("config rejection covers unknown keys, bad values, and bad ranges") {
  auto reject = [](const std::string& text, const std::string& needle) {
    REQUIRE_THROWS_AS(parse_experiment_config(text, "cfg"), ConfigError);
    REQUIRE_THROWS_WITH(parse_experiment_config(text, "cfg"), ContainsSubstring(needle));
  };
  reject(R"({"bogus": 1})", "unknown config key 'bogus'");
  reject(R"({"trace": {"bogus": 1}})", "unknown config key 'trace.bogus'");
  reject(R"({"seed": "x"})", "bad value for config key 'seed'");
  reject(R"({"sweep": {"ntw_values": "x"}})", "bad value for config key 'sweep.ntw_values'");
  reject(R"({"threads": 0})", "threads must be >= 1");
  reject(R"({"histogram": {"bins": 1}})", "histogram.bins must be in [2, 1024]");
  reject(R"({"histogram": {"bins": 1025}})", "histogram.bins");
  reject(R"({"threshold": {"percentile": 0}})", "threshold.percentile");
  reject(R"({"threshold": {"percentile": 100.5}})", "threshold.percentile");
  reject(R"({"threshold": {"calib_group_size": 0}})", "calib_group_size must be positive");
  reject(R"({"floors": {"min_neighborhood_size": 0}})",
         "min_neighborhood_size must be positive");
  reject(R"({"trace": {"req_rate_per_client": 1.0, "target_hot_rps": 5.0}})", "exclusive");
  reject(R"({"trace": {"n_clients": 0}})", "trace needs clients and servers");
  reject(R"({"trace": {"zipf_exponent": -0.5}})", "zipf");
  reject(R"({"trace": {"target_hot_rps": -1.0}})", "target_hot_rps must be >= 0");
  reject(R"({"stream": {"benign_corpus": "b.csv"}})", "together or not at all");
  reject(R"({"stream": {"fv_rate": 0}})", "stream.fv_rate must be positive");
  reject(R"({"stream": {"corpus_size": 0}})", "stream.corpus_size must be positive");
  reject(R"({"sweep": {"reps": 0}})", "sweep.reps must be positive");
  reject(R"({"sweep": {"calib_windows": 0}})", "sweep.calib_windows must be positive");
  reject(R"({"sweep": {"infection_probs": [1.5]}})", "out of [0, 1]");
  reject(R"({"sweep": {"partition_modes": ["bogus"]}})", "unknown partition mode");
  reject(R"({"ntw": {"window_len": 1.0, "stride": 2.0}})",
         "stride must be in (0, window_len]");
  reject(R"({"ntw": {"window_len": 10.0, "stride": 5.0}, "sweep": {"ntw_values": [2.0]}})",
         "stride must be in (0, window_len]");
  reject(R"({"attack": {"compromise_t0": 5.0, "compromise_t1": 1.0}})",
         "compromise interval is inverted");
  reject(R"({"attack": {"infection_prob": 1.5}})", "infection probability");
  reject(R"({"detector": {"kind": "bogus"}})", "unknown detector kind");
  reject(R"({"detector": {"kind": "external"}})", "external detector requires a command");
  reject(R"({"detector": {"sigma": 0}})", "sigma must be positive");
  reject(R"({"detector": {"fp_rate": 1.5}})", "flip rates");
  reject("[1, 2]", "config must be a JSON object");
  reject("{", "invalid JSON:");
}

TEST_CASE("detector spec derives from the config with a salted seed") {
  const auto c = parse_experiment_config(
      R"({"seed": 11, "detector": {"kind": "oracle_flip", "fp_rate": 0.03,
          "fn_rate": 0.04, "sigma": 2.0}})",
      "cfg");
  const DetectorSpec d = c.detector_spec();
  CHECK(d.kind == ScorerKind::oracle_flip);
  CHECK(d.fp_rate == 0.03);
  CHECK(d.fn_rate == 0.04);
  CHECK(d.gaussian.sigma == 2.0);
  CHECK(d.seed == rng::mix(11, 0xde7ec7));
  CHECK(d.command.empty());

  const auto ext = parse_experiment_config(
      R"({"detector": {"kind": "external", "command": "cut -d, -f3"}})", "cfg");
  CHECK(ext.detector_spec().kind == ScorerKind::external);
  CHECK(ext.detector_spec().command == "cut -d, -f3");
}

TEST_CASE("resolved trace config honors the hot-server rate target") {
  const auto c = parse_experiment_config(
      R"({"seed": 5, "trace": {"n_clients": 100, "n_servers": 4,
          "zipf_exponent": 0.8, "target_hot_rps": 12.0}})",
      "cfg");
  const TraceGenConfig t = resolved_trace_config(c);
  CHECK(t.req_rate_per_client == per_client_rate_for_hot(12.0, 100, 4, 0.8));
  CHECK(t.seed == rng::mix(5, 0x7ace));
  CHECK(t.n_clients == 100);

  const auto c2 =
      parse_experiment_config(R"({"trace": {"req_rate_per_client": 0.25}})", "cfg");
  CHECK(resolved_trace_config(c2).req_rate_per_client == 0.25);
}

TEST_CASE("waterhole server names resolve to synthetic indexes") {
  CHECK(resolve_server_index("s12", 50) == 12);
  CHECK(resolve_server_index("S3", 50) == 3);
  CHECK(resolve_server_index("7", 50) == 7);
  CHECK(resolve_server_index("0", 1) == 0);
  REQUIRE_THROWS_WITH(resolve_server_index("s50", 50), ContainsSubstring("out of range"));
  REQUIRE_THROWS_WITH(resolve_server_index("s-1", 50), ContainsSubstring("out of range"));
  REQUIRE_THROWS_WITH(resolve_server_index("junk", 50),
                      ContainsSubstring("not a server index"));
  REQUIRE_THROWS_WITH(resolve_server_index("s", 50),
                      ContainsSubstring("not a server index"));
  REQUIRE_THROWS_AS(resolve_server_index("junk", 50), ConfigError);
}

TEST_CASE("waterhole parameter mapping carries every knob across") {
  const auto c = parse_experiment_config(R"({
    "seed": 21, "threads": 2,
    "detector": {"kind": "gaussian", "sigma": 1.5},
    "histogram": {"bins": 12},
    "threshold": {"percentile": 95.0, "min_alerts": 9},
    "ntw": {"window_len": 6.0, "stride": 2.0},
    "floors": {"min_fvs": 17},
    "trace": {"n_clients": 40, "n_servers": 5, "duration": 50.0,
              "req_rate_per_client": 0.5, "zipf_exponent": 0.9},
    "attack": {"waterhole_server": "s2", "compromise_t0": 10.0,
               "compromise_t1": 12.0, "infection_prob": 0.75},
    "stream": {"fv_rate": 2.0, "corpus_size": 777},
    "sweep": {"calib_windows": 33}
  })",
                                         "cfg");
  const WaterholeParams p = to_waterhole_params(c);
  CHECK(p.trace.n_clients == 40);
  CHECK(p.trace.n_servers == 5);
  CHECK(p.trace.duration == 50.0);
  CHECK(p.trace.req_rate_per_client == 0.5);
  CHECK(p.trace.zipf_exponent == 0.9);
  CHECK(p.trace.seed == rng::mix(21, 0x7ace));
  CHECK(p.attack.waterhole_server == 2);
  CHECK(p.attack.compromise_t0 == 10.0);
  CHECK(p.attack.compromise_t1 == 12.0);
  CHECK(p.attack.infection_prob == 0.75);
  CHECK(p.corpus_model.sigma == 1.5);
  CHECK(p.corpus_size == 777);
  CHECK(p.fv_rate == 2.0);
  CHECK(p.detector.kind == ScorerKind::gaussian);
  CHECK(p.detector.seed == rng::mix(21, 0xde7ec7));
  CHECK(p.bins == 12);
  CHECK(p.percentile == 95.0);
  CHECK(p.min_alerts == 9);
  CHECK(p.min_fvs == 17);
  CHECK(p.calib_windows == 33);
  CHECK(p.seed == 21);
  CHECK(p.threads == 2);
  CHECK(p.fixed_trace == nullptr);
}

TEST_CASE("file-backed traces defer waterhole server resolution") {
  const auto c = parse_experiment_config(
      R"({"trace": {"netflow_path": "t.csv"}, "attack": {"waterhole_server": "edge-7"}})",
      "cfg");
  // the name is matched against the trace's own ids later, not parsed here
  CHECK(to_waterhole_params(c).attack.waterhole_server == 0);

  const auto c2 =
      parse_experiment_config(R"({"attack": {"waterhole_server": "edge-7"}})", "cfg");
  REQUIRE_THROWS_AS(to_waterhole_params(c2), ConfigError);
}
