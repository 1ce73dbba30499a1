#pragma once

// File formats.
//
//  - FV corpus: CSV `entity_id,timestamp,label,v1,...,vD`, header required,
//    label is 0 (benign) or 1 (malicious).
//  - Projection basis: text, first line `L D`, then L lines of D values.
//  - Netflow trace: CSV `timestamp,src,dst,src_port,dst_port,proto,packets,
//    bytes`, header required; plain or gzip-compressed.
//  - Download edges: CSV `machine_id,parent_hash,child_hash,domain,
//    timestamp`; a parent of `-` marks a root download. Header optional.
//  - Domain labels: CSV `domain,suspicious_flag`. Header optional.
//  - Threshold file: JSON holding gamma, percentile, alert floor, histogram
//    edges and the reference histogram. Serialization is canonical (sorted
//    keys, shortest round-trip numbers), so load/save round-trips are
//    byte-identical.
//  - Verdict CSV: `source,unit,score,verdict,truth`, the shared result
//    schema for shape verdicts and baselines.
//
// Parse errors carry the offending line number and throw DataError.

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "shapegd/core.hpp"
#include "shapegd/errors.hpp"
#include "shapegd/neighborhoods.hpp"
#include "shapegd/shape.hpp"
#include "shapegd/simulator.hpp"
#include "shapegd/text.hpp"

namespace shapegd {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reads a file that may or may not be gzip-compressed.
inline std::string read_file_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw DataError("cannot open file: " + path);
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool bad = n < 0;
  gzclose(f);
  if (bad) throw DataError("gzip read error in file: " + path);
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

inline void write_file_gz(const std::string& path, const std::string& content) {
  gzFile f = gzopen(path.c_str(), "wb");
  if (f == nullptr) throw DataError("cannot write file: " + path);
  const int n = gzwrite(f, content.data(), static_cast<unsigned>(content.size()));
  gzclose(f);
  if (n <= 0 && !content.empty()) throw DataError("gzip write error in file: " + path);
}

namespace detail {

inline std::vector<std::string_view> split_line(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Iterates non-empty lines, stripping a trailing '\r'; fn(line, line_no).
// Lines starting with '#' are comments (tool outputs embed provenance there).
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t eol = text.find('\n', start);
    std::string_view line = eol == std::string_view::npos
                                ? text.substr(start)
                                : text.substr(start, eol - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') fn(line, line_no);
    if (eol == std::string_view::npos) break;
    start = eol + 1;
  }
}

[[noreturn]] inline void line_error(const std::string& path, std::size_t line_no,
                                    const std::string& what) {
  throw DataError(path + ":" + fmt_u64(line_no) + ": " + what);
}

inline double field_double(std::string_view s, const std::string& path,
                           std::size_t line_no, const char* name) {
  try {
    return parse_double(s);
  } catch (const std::exception&) {
    line_error(path, line_no, std::string("bad ") + name + " value '" + std::string(s) + "'");
  }
}

inline long long field_int(std::string_view s, const std::string& path,
                           std::size_t line_no, const char* name) {
  try {
    return parse_int(s);
  } catch (const std::exception&) {
    line_error(path, line_no, std::string("bad ") + name + " value '" + std::string(s) + "'");
  }
}

}  // namespace detail

// ---- FV corpus ----

inline std::vector<ProjectedFV> load_fv_corpus(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<ProjectedFV> out;
  std::size_t dims = 0;
  bool have_header = false;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = detail::split_line(line, ',');
    if (!have_header) {
      if (fields.size() < 4 || fields[0] != "entity_id" || fields[1] != "timestamp" ||
          fields[2] != "label")
        detail::line_error(path, line_no,
                           "expected header entity_id,timestamp,label,v1,...");
      dims = fields.size() - 3;
      have_header = true;
      return;
    }
    if (fields.size() != dims + 3)
      detail::line_error(path, line_no, "expected " + fmt_u64(dims + 3) + " fields, got " +
                                            fmt_u64(fields.size()));
    ProjectedFV fv;
    fv.entity_id = std::string(fields[0]);
    fv.timestamp = detail::field_double(fields[1], path, line_no, "timestamp");
    const long long label = detail::field_int(fields[2], path, line_no, "label");
    if (label != 0 && label != 1)
      detail::line_error(path, line_no, "label must be 0 or 1");
    fv.truth_label = label == 1 ? Label::malicious : Label::benign;
    fv.coords.reserve(dims);
    for (std::size_t d = 0; d < dims; ++d)
      fv.coords.push_back(detail::field_double(fields[3 + d], path, line_no, "coordinate"));
    out.push_back(std::move(fv));
  });
  if (!have_header) throw DataError(path + ": empty corpus file");
  return out;
}

inline std::string render_fv_corpus(const std::vector<ProjectedFV>& fvs) {
  std::size_t dims = fvs.empty() ? 1 : fvs.front().coords.size();
  std::string out = "entity_id,timestamp,label";
  for (std::size_t d = 1; d <= dims; ++d) out += ",v" + fmt_u64(d);
  out += '\n';
  for (const auto& fv : fvs) {
    out += fv.entity_id;
    out += ',';
    out += fmt_double(fv.timestamp);
    out += ',';
    out += fv.truth_label == Label::malicious ? '1' : '0';
    for (const double c : fv.coords) {
      out += ',';
      out += fmt_double(c);
    }
    out += '\n';
  }
  return out;
}

// ---- Projection basis ----

inline ProjectionBasis load_basis(const std::string& path) {
  const std::string text = read_file(path);
  ProjectionBasis basis;
  std::size_t expected_rows = 0;
  bool have_header = false;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    std::istringstream ss{std::string(line)};
    if (!have_header) {
      long long l = 0, d = 0;
      if (!(ss >> l >> d) || l <= 0 || d <= 0)
        detail::line_error(path, line_no, "expected header 'L D'");
      std::string tail;
      if (ss >> tail) detail::line_error(path, line_no, "expected header 'L D'");
      expected_rows = static_cast<std::size_t>(l);
      basis.input_dims = static_cast<std::size_t>(d);
      have_header = true;
      return;
    }
    std::vector<double> row;
    double v = 0.0;
    while (ss >> v) row.push_back(v);
    if (!ss.eof()) detail::line_error(path, line_no, "bad basis value");
    if (row.size() != basis.input_dims)
      detail::line_error(path, line_no, "expected " + fmt_u64(basis.input_dims) +
                                            " values, got " + fmt_u64(row.size()));
    basis.rows.push_back(std::move(row));
  });
  if (!have_header) throw DataError(path + ": empty basis file");
  if (basis.rows.size() != expected_rows)
    throw DataError(path + ": header promised " + fmt_u64(expected_rows) +
                    " rows, file has " + fmt_u64(basis.rows.size()));
  basis.validate();
  return basis;
}

inline std::string render_basis(const ProjectionBasis& basis) {
  basis.validate();
  std::string out = fmt_u64(basis.rows.size()) + " " + fmt_u64(basis.input_dims) + "\n";
  for (const auto& row : basis.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ' ';
      out += fmt_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

// ---- Netflow trace ----

inline constexpr std::string_view kNetflowHeader =
    "timestamp,src,dst,src_port,dst_port,proto,packets,bytes";

inline std::vector<NetflowRecord> load_netflow(const std::string& path) {
  const std::string text = read_file_maybe_gz(path);
  std::vector<NetflowRecord> out;
  bool have_header = false;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!have_header) {
      if (line != kNetflowHeader)
        detail::line_error(path, line_no,
                           "expected header " + std::string(kNetflowHeader));
      have_header = true;
      return;
    }
    const auto f = detail::split_line(line, ',');
    if (f.size() != 8)
      detail::line_error(path, line_no, "expected 8 fields, got " + fmt_u64(f.size()));
    NetflowRecord r;
    r.timestamp = detail::field_double(f[0], path, line_no, "timestamp");
    r.src = std::string(f[1]);
    r.dst = std::string(f[2]);
    r.src_port = static_cast<std::uint16_t>(detail::field_int(f[3], path, line_no, "src_port"));
    r.dst_port = static_cast<std::uint16_t>(detail::field_int(f[4], path, line_no, "dst_port"));
    r.proto = static_cast<std::uint8_t>(detail::field_int(f[5], path, line_no, "proto"));
    r.packets = static_cast<std::uint32_t>(detail::field_int(f[6], path, line_no, "packets"));
    r.bytes = static_cast<std::uint64_t>(detail::field_int(f[7], path, line_no, "bytes"));
    out.push_back(std::move(r));
  });
  if (!have_header) throw DataError(path + ": empty netflow file");
  return out;
}

inline std::string render_netflow(const std::vector<NetflowRecord>& records) {
  std::string out{kNetflowHeader};
  out += '\n';
  for (const auto& r : records) {
    out += fmt_double(r.timestamp);
    out += ',';
    out += r.src;
    out += ',';
    out += r.dst;
    out += ',';
    out += fmt_u64(r.src_port);
    out += ',';
    out += fmt_u64(r.dst_port);
    out += ',';
    out += fmt_u64(r.proto);
    out += ',';
    out += fmt_u64(r.packets);
    out += ',';
    out += fmt_u64(r.bytes);
    out += '\n';
  }
  return out;
}

// ---- Download edges and domain labels ----

inline constexpr std::string_view kEdgeHeader =
    "machine_id,parent_hash,child_hash,domain,timestamp";

inline std::vector<DownloadEdge> load_download_edges(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<DownloadEdge> out;
  bool first = true;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (first) {
      first = false;
      if (line == kEdgeHeader) return;
    }
    const auto f = detail::split_line(line, ',');
    if (f.size() != 5)
      detail::line_error(path, line_no, "expected 5 fields, got " + fmt_u64(f.size()));
    DownloadEdge e;
    e.machine_id = std::string(f[0]);
    e.parent = std::string(f[1]);
    e.child = std::string(f[2]);
    e.domain = std::string(f[3]);
    e.timestamp = detail::field_double(f[4], path, line_no, "timestamp");
    if (e.parent.empty() || e.child.empty() || e.domain.empty())
      detail::line_error(path, line_no, "empty field");
    try {
      e.validate();
    } catch (const std::exception& ex) {
      detail::line_error(path, line_no, ex.what());
    }
    out.push_back(std::move(e));
  });
  return out;
}

inline std::unordered_set<std::string> load_domain_labels(const std::string& path) {
  const std::string text = read_file(path);
  std::unordered_set<std::string> suspicious;
  bool first = true;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (first) {
      first = false;
      if (line == "domain,suspicious_flag") return;
    }
    const auto f = detail::split_line(line, ',');
    if (f.size() != 2)
      detail::line_error(path, line_no, "expected 2 fields, got " + fmt_u64(f.size()));
    const long long flag = detail::field_int(f[1], path, line_no, "suspicious_flag");
    if (flag != 0 && flag != 1)
      detail::line_error(path, line_no, "suspicious_flag must be 0 or 1");
    if (flag == 1) suspicious.insert(std::string(f[0]));
  });
  return suspicious;
}

// One opaque entity id per line; blank lines and '#' comments are skipped.
inline std::unordered_set<std::string> load_id_list(const std::string& path) {
  const std::string text = read_file(path);
  std::unordered_set<std::string> out;
  detail::for_each_line(
      text, [&](std::string_view line, std::size_t) { out.insert(std::string(line)); });
  return out;
}

// ---- Threshold file ----

inline std::string render_threshold(const ShapeThreshold& thr) {
  nlohmann::json j;
  j["gamma"] = thr.gamma;
  j["percentile"] = thr.percentile;
  j["min_alerts"] = thr.min_alerts;
  j["edges"] = thr.config.edges;
  j["reference"] = {{"rows", thr.reference.rows},
                    {"sample_count", thr.reference.sample_count}};
  return j.dump(2) + "\n";
}

inline ShapeThreshold parse_threshold(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw DataError(origin + ": invalid JSON: " + ex.what());
  }
  try {
    ShapeThreshold thr;
    thr.gamma = j.at("gamma").get<double>();
    thr.percentile = j.at("percentile").get<double>();
    thr.min_alerts = j.at("min_alerts").get<std::size_t>();
    thr.config.edges = j.at("edges").get<std::vector<std::vector<double>>>();
    thr.reference.rows =
        j.at("reference").at("rows").get<std::vector<std::vector<double>>>();
    thr.reference.sample_count = j.at("reference").at("sample_count").get<std::size_t>();
    thr.config.validate();
    if (thr.reference.rows.size() != thr.config.dims())
      throw DataError(origin + ": reference row count does not match edges");
    for (const auto& row : thr.reference.rows)
      if (row.size() != thr.config.bins())
        throw DataError(origin + ": reference row width does not match bin count");
    return thr;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& ex) {
    throw DataError(origin + ": bad threshold file: " + ex.what());
  }
}

inline void save_threshold(const std::string& path, const ShapeThreshold& thr) {
  write_file(path, render_threshold(thr));
}

inline ShapeThreshold load_threshold(const std::string& path) {
  return parse_threshold(read_file(path), path);
}

// ---- Verdict CSV (shared result schema) ----

struct VerdictRow {
  std::string source;  // shape | count | cluster
  std::string unit;
  double score = 0.0;
  int verdict = 0;
  int truth = 0;
};

inline constexpr std::string_view kVerdictHeader = "source,unit,score,verdict,truth";

inline std::string render_verdict_csv(const std::vector<VerdictRow>& rows) {
  std::string out{kVerdictHeader};
  out += '\n';
  for (const auto& r : rows) {
    out += r.source;
    out += ',';
    out += r.unit;
    out += ',';
    out += fmt_double(r.score);
    out += ',';
    out += fmt_u64(static_cast<unsigned long long>(r.verdict));
    out += ',';
    out += fmt_u64(static_cast<unsigned long long>(r.truth));
    out += '\n';
  }
  return out;
}

inline std::vector<VerdictRow> load_verdict_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<VerdictRow> out;
  bool have_header = false;
  detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!have_header) {
      if (line != kVerdictHeader)
        detail::line_error(path, line_no,
                           "expected header " + std::string(kVerdictHeader));
      have_header = true;
      return;
    }
    const auto f = detail::split_line(line, ',');
    if (f.size() != 5)
      detail::line_error(path, line_no, "expected 5 fields, got " + fmt_u64(f.size()));
    VerdictRow r;
    r.source = std::string(f[0]);
    r.unit = std::string(f[1]);
    r.score = detail::field_double(f[2], path, line_no, "score");
    const long long verdict = detail::field_int(f[3], path, line_no, "verdict");
    const long long truth = detail::field_int(f[4], path, line_no, "truth");
    if ((verdict != 0 && verdict != 1) || (truth != 0 && truth != 1))
      detail::line_error(path, line_no, "verdict and truth must be 0 or 1");
    r.verdict = static_cast<int>(verdict);
    r.truth = static_cast<int>(truth);
    out.push_back(std::move(r));
  });
  if (!have_header) throw DataError(path + ": empty verdict file");
  return out;
}

}  // namespace shapegd
