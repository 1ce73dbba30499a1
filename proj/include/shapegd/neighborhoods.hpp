#pragma once

// Neighborhood formation: grouping entities whose feature vectors will be
// aggregated into one vector histogram.
//
// Two formation strategies are provided. Traffic-based formation groups
// clients that contacted servers of one structural partition inside a
// neighborhood time window. Download-graph formation seeds a neighborhood
// with the files touching a suspicious domain and expands it through
// transitive downloads. A greedy merge pass then enforces a minimum
// neighborhood size so histograms are statistically meaningful.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "shapegd/core.hpp"
#include "shapegd/text.hpp"

namespace shapegd {

// Sliding neighborhood time window. Windows are half-open:
// [start, start + window_len).
struct NtwConfig {
  double window_len = 30.0;
  double stride = 1.0;

  void validate() const {
    if (!(window_len > 0.0)) throw std::invalid_argument("window_len must be positive");
    if (!(stride > 0.0) || stride > window_len)
      throw std::invalid_argument("stride must be in (0, window_len]");
  }
};

template <class Id>
struct BasicNeighborhood {
  std::string id;
  std::vector<Id> members;  // sorted, unique
  double window_start = 0.0;
  double window_end = 0.0;
  std::string seed;  // formation seed (partition tag or suspicious domain)
  std::vector<BasicProjectedFV<Id>> alert_fvs;

  std::size_t size() const { return members.size(); }
};

using Neighborhood = BasicNeighborhood<std::string>;

// Disjoint groups of servers; traffic-based formation creates one
// neighborhood per group and window.
template <class Id>
struct StructuralPartition {
  std::vector<std::vector<Id>> groups;

  void validate() const {
    if (groups.empty()) throw std::invalid_argument("partition has no groups");
    std::unordered_set<Id> seen;
    for (const auto& g : groups) {
      if (g.empty()) throw std::invalid_argument("partition group is empty");
      for (const auto& s : g)
        if (!seen.insert(s).second)
          throw std::invalid_argument("partition groups are not disjoint");
    }
  }
};

// One download event: on machine_id, file parent fetched file child from
// domain. A parent of "-" marks a root download (no parent file).
inline constexpr std::string_view kRootParent = "-";

struct DownloadEdge {
  std::string machine_id;
  std::string parent;
  std::string child;
  std::string domain;
  double timestamp = 0.0;

  void validate() const {
    if (parent == child && parent != kRootParent)
      throw std::invalid_argument("download edge with parent == child");
  }
};

namespace detail {

template <class Id>
std::vector<Id> sorted_unique(std::vector<Id> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace detail

// One neighborhood per partition group: the clients that contacted any
// server of that group within [window_start, window_start + window_len).
// Groups nobody contacted are dropped. Record is any struct with
// .timestamp, .src (client) and .dst (server) fields.
template <class Id, class Record>
std::vector<BasicNeighborhood<Id>> form_waterhole_neighborhoods(
    const std::vector<Record>& records, const NtwConfig& ntw,
    const StructuralPartition<Id>& partition, double window_start) {
  ntw.validate();
  partition.validate();

  std::unordered_map<Id, std::size_t> group_of;
  for (std::size_t g = 0; g < partition.groups.size(); ++g)
    for (const auto& s : partition.groups[g]) group_of.emplace(s, g);

  const double window_end = window_start + ntw.window_len;
  std::vector<std::vector<Id>> members(partition.groups.size());
  for (const auto& r : records) {
    if (r.timestamp < window_start || r.timestamp >= window_end) continue;
    const auto it = group_of.find(r.dst);
    if (it == group_of.end()) continue;
    members[it->second].push_back(r.src);
  }

  std::vector<BasicNeighborhood<Id>> out;
  for (std::size_t g = 0; g < members.size(); ++g) {
    if (members[g].empty()) continue;
    BasicNeighborhood<Id> nbd;
    nbd.members = detail::sorted_unique(std::move(members[g]));
    nbd.window_start = window_start;
    nbd.window_end = window_end;
    nbd.seed = "p" + fmt_u64(g);
    nbd.id = nbd.seed + "@" + fmt_double(window_start);
    out.push_back(std::move(nbd));
  }
  return out;
}

// One neighborhood per suspicious domain seen in the window: seed files are
// those that touched the domain (as downloader or downloadee); the download
// graph is then followed from every seed file, and expanded files are kept
// only if they touched at least one suspicious domain themselves. Members
// are the retained files plus the seed files. SuspiciousFn is a predicate
// over domain names.
template <class SuspiciousFn>
std::vector<Neighborhood> form_downloader_neighborhoods(
    const std::vector<DownloadEdge>& edges, SuspiciousFn&& is_suspicious,
    const NtwConfig& ntw, double window_start) {
  ntw.validate();
  const double window_end = window_start + ntw.window_len;

  std::vector<const DownloadEdge*> in_window;
  for (const auto& e : edges) {
    e.validate();
    if (e.timestamp >= window_start && e.timestamp < window_end)
      in_window.push_back(&e);
  }

  std::unordered_map<std::string, std::vector<std::string>> files_of_domain;
  std::unordered_map<std::string, std::vector<std::string>> children_of;
  std::unordered_set<std::string> touches_suspicious;
  std::vector<std::string> domains;
  for (const auto* e : in_window) {
    auto [it, fresh] = files_of_domain.try_emplace(e->domain);
    if (fresh) domains.push_back(e->domain);
    it->second.push_back(e->child);
    if (e->parent != kRootParent) {
      it->second.push_back(e->parent);
      children_of[e->parent].push_back(e->child);
    }
    if (is_suspicious(e->domain)) {
      touches_suspicious.insert(e->child);
      if (e->parent != kRootParent) touches_suspicious.insert(e->parent);
    }
  }
  std::sort(domains.begin(), domains.end());

  std::vector<Neighborhood> out;
  for (const auto& domain : domains) {
    if (!is_suspicious(domain)) continue;
    const auto seeds = detail::sorted_unique(files_of_domain[domain]);
    if (seeds.empty()) continue;

    std::unordered_set<std::string> member_set(seeds.begin(), seeds.end());
    std::vector<std::string> frontier(seeds.begin(), seeds.end());
    std::unordered_set<std::string> visited(seeds.begin(), seeds.end());
    while (!frontier.empty()) {
      const std::string file = std::move(frontier.back());
      frontier.pop_back();
      const auto it = children_of.find(file);
      if (it == children_of.end()) continue;
      for (const auto& child : it->second) {
        if (!visited.insert(child).second) continue;
        frontier.push_back(child);
        if (touches_suspicious.count(child)) member_set.insert(child);
      }
    }

    Neighborhood nbd;
    nbd.members.assign(member_set.begin(), member_set.end());
    std::sort(nbd.members.begin(), nbd.members.end());
    nbd.window_start = window_start;
    nbd.window_end = window_end;
    nbd.seed = domain;
    nbd.id = "d:" + domain + "@" + fmt_double(window_start);
    out.push_back(std::move(nbd));
  }
  return out;
}

// Fraction of members whose local detector raised at least one alert.
template <class Id>
double malicious_score(const BasicNeighborhood<Id>& nbd,
                       const std::unordered_set<Id>& alerted) {
  if (nbd.members.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& m : nbd.members) hits += alerted.count(m) ? 1u : 0u;
  return static_cast<double>(hits) / static_cast<double>(nbd.members.size());
}

// Greedy merge to a minimum size: neighborhoods are ordered by score
// (descending, ties by id) and accumulated into groups until the group's
// member union reaches min_size. A trailing group below the floor is folded
// into the previously emitted group; a single undersized group is emitted
// as-is. Members are unioned, alert FVs concatenated in group order.
template <class Id>
std::vector<BasicNeighborhood<Id>> merge_neighborhoods(
    std::vector<BasicNeighborhood<Id>> nbds, const std::vector<double>& scores,
    std::size_t min_size) {
  if (scores.size() != nbds.size())
    throw std::invalid_argument("one score per neighborhood required");
  if (min_size == 0) throw std::invalid_argument("min_size must be positive");
  if (nbds.empty()) return {};

  std::vector<std::size_t> order(nbds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return nbds[a].id < nbds[b].id;
  });

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> current;
  std::unordered_set<Id> current_union;
  for (const std::size_t idx : order) {
    current.push_back(idx);
    for (const auto& m : nbds[idx].members) current_union.insert(m);
    if (current_union.size() >= min_size) {
      groups.push_back(std::move(current));
      current.clear();
      current_union.clear();
    }
  }
  if (!current.empty()) {
    if (groups.empty())
      groups.push_back(std::move(current));
    else
      groups.back().insert(groups.back().end(), current.begin(), current.end());
  }

  std::vector<BasicNeighborhood<Id>> out;
  out.reserve(groups.size());
  for (const auto& group : groups) {
    BasicNeighborhood<Id> merged;
    std::vector<Id> members;
    for (std::size_t k = 0; k < group.size(); ++k) {
      auto& src = nbds[group[k]];
      if (k == 0) {
        merged.id = src.id;
        merged.seed = src.seed;
        merged.window_start = src.window_start;
        merged.window_end = src.window_end;
      } else {
        merged.id += "+" + src.id;
      }
      members.insert(members.end(), src.members.begin(), src.members.end());
      merged.alert_fvs.insert(merged.alert_fvs.end(),
                              std::make_move_iterator(src.alert_fvs.begin()),
                              std::make_move_iterator(src.alert_fvs.end()));
    }
    merged.members = detail::sorted_unique(std::move(members));
    out.push_back(std::move(merged));
  }
  return out;
}

// Convenience overload: scores computed from an alert set.
template <class Id>
std::vector<BasicNeighborhood<Id>> merge_neighborhoods(
    std::vector<BasicNeighborhood<Id>> nbds, const std::unordered_set<Id>& alerted,
    std::size_t min_size) {
  std::vector<double> scores;
  scores.reserve(nbds.size());
  for (const auto& n : nbds) scores.push_back(malicious_score(n, alerted));
  return merge_neighborhoods(std::move(nbds), scores, min_size);
}

}  // namespace shapegd
