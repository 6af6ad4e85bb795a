#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fusegraph/error.hpp"

namespace fusegraph {

enum class NodeKind : std::uint8_t { paper, section, knowledge_unit };
enum class RelationType : std::uint8_t { citation, inclusion, association };

inline constexpr std::array<NodeKind, 3> kAllNodeKinds{NodeKind::paper, NodeKind::section,
                                                      NodeKind::knowledge_unit};
inline constexpr std::array<RelationType, 3> kAllRelations{
    RelationType::citation, RelationType::inclusion, RelationType::association};

constexpr std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::paper: return "paper";
    case NodeKind::section: return "section";
    case NodeKind::knowledge_unit: return "knowledge_unit";
  }
  return "";
}

constexpr std::string_view to_string(RelationType rel) {
  switch (rel) {
    case RelationType::citation: return "citation";
    case RelationType::inclusion: return "inclusion";
    case RelationType::association: return "association";
  }
  return "";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (auto k : kAllNodeKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::optional<RelationType> parse_relation(std::string_view s) {
  for (auto r : kAllRelations)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

using Timestamp = std::int64_t;
using NodeIndex = std::uint32_t;

struct Node {
  std::string id;
  NodeKind kind = NodeKind::paper;
  std::string content;
  Timestamp timestamp = 0;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::string src;
  std::string dst;
  RelationType relation = RelationType::citation;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct TimeExtent {
  Timestamp min = 0;
  Timestamp max = 0;

  friend bool operator==(const TimeExtent&, const TimeExtent&) = default;
};

/// One entry of an adjacency list: the node on the other end and the edge type.
struct Incidence {
  NodeIndex other;
  RelationType relation;
};

struct Neighbor {
  std::string id;
  int hops;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Hierarchical literature graph. Nodes are addressed by string id externally
/// and by a dense insertion-ordered NodeIndex internally; indices are stable
/// for the life of the graph because nodes are never deleted.
///
/// Not internally synchronized: callers serialize writers and may share a
/// const reference between any number of readers.
class LiteratureGraph {
 public:
  LiteratureGraph() = default;

  void add_node(Node node) {
    validate(node);
    if (ids_.contains(node.id)) throw Error(ErrorCode::DuplicateId, node.id);
    auto idx = static_cast<NodeIndex>(nodes_.size());
    ids_.emplace(node.id, idx);
    timestamps_[node.timestamp]++;
    nodes_.push_back(std::move(node));
    out_.emplace_back();
    in_.emplace_back();
    ++update_counter_;
  }

  /// Content re-ingestion: the node keeps its index and edges; kind, content
  /// and timestamp are replaced.
  void replace_node(Node node) {
    validate(node);
    auto it = ids_.find(node.id);
    if (it == ids_.end()) throw Error(ErrorCode::UnknownNode, node.id);
    auto& slot = nodes_[it->second];
    erase_timestamp(slot.timestamp);
    timestamps_[node.timestamp]++;
    slot = std::move(node);
    ++update_counter_;
  }

  void add_edge(const Edge& edge) {
    auto src = index_of(edge.src);
    auto dst = index_of(edge.dst);
    if (!src) throw Error(ErrorCode::UnknownEndpoint, edge.src);
    if (!dst) throw Error(ErrorCode::UnknownEndpoint, edge.dst);
    if (*src == *dst) throw Error(ErrorCode::SelfLoop, edge.src);
    auto key = pair_key(*src, *dst);
    auto& keys = edge_keys_[static_cast<std::size_t>(edge.relation)];
    if (!keys.insert(key).second)
      throw Error(ErrorCode::DuplicateEdge, edge.src + "->" + edge.dst + " (" +
                                                std::string(to_string(edge.relation)) + ")");
    out_[*src].push_back({*dst, edge.relation});
    in_[*dst].push_back({*src, edge.relation});
    edges_.push_back({*src, *dst, edge.relation});
    ++update_counter_;
  }

  bool contains(std::string_view id) const { return ids_.contains(std::string(id)); }

  std::optional<NodeIndex> index_of(std::string_view id) const {
    auto it = ids_.find(std::string(id));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  NodeIndex require(std::string_view id) const {
    auto idx = index_of(id);
    if (!idx) throw Error(ErrorCode::UnknownNode, std::string(id));
    return *idx;
  }

  const Node& node(std::string_view id) const { return nodes_[require(id)]; }
  const Node& node_at(NodeIndex idx) const { return nodes_[idx]; }
  std::span<const Node> nodes() const { return nodes_; }

  std::span<const Incidence> out_edges(NodeIndex idx) const { return out_[idx]; }
  std::span<const Incidence> in_edges(NodeIndex idx) const { return in_[idx]; }

  bool has_edge(std::string_view src, std::string_view dst, RelationType rel) const {
    auto s = index_of(src);
    auto d = index_of(dst);
    if (!s || !d) return false;
    return edge_keys_[static_cast<std::size_t>(rel)].contains(pair_key(*s, *d));
  }

  /// All edges in insertion order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_)
      out.push_back({nodes_[e.src].id, nodes_[e.dst].id, e.relation});
    return out;
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  TimeExtent time_extent() const {
    if (timestamps_.empty()) return {};
    return {timestamps_.begin()->first, timestamps_.rbegin()->first};
  }

  double graph_density() const {
    if (nodes_.size() < 2) throw Error(ErrorCode::TooFewNodes, "density needs at least 2 nodes");
    const double n = static_cast<double>(nodes_.size());
    return static_cast<double>(edges_.size()) / (n * (n - 1.0));
  }

  std::uint64_t update_count() const { return update_counter_; }
  void reset_update_count() { update_counter_ = 0; }
  /// Snapshot restore only.
  void restore_update_count(std::uint64_t n) { update_counter_ = n; }

  /// Distinct neighbors of idx ignoring direction, ascending by index.
  std::vector<NodeIndex> undirected_neighbors(NodeIndex idx) const {
    std::vector<NodeIndex> out;
    out.reserve(out_[idx].size() + in_[idx].size());
    for (const auto& inc : out_[idx]) out.push_back(inc.other);
    for (const auto& inc : in_[idx]) out.push_back(inc.other);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Hop distances of every node within max_hops of any seed (seeds at 0).
  /// Edges are traversed in both directions. Memory is proportional to the
  /// size of the ball, not the graph.
  std::unordered_map<NodeIndex, int> ball(std::span<const NodeIndex> seeds, int max_hops) const {
    std::unordered_map<NodeIndex, int> dist;
    std::vector<NodeIndex> frontier;
    for (auto s : seeds)
      if (dist.emplace(s, 0).second) frontier.push_back(s);
    std::vector<NodeIndex> next;
    for (int hop = 1; hop <= max_hops && !frontier.empty(); ++hop) {
      next.clear();
      for (auto v : frontier) {
        auto visit = [&](const Incidence& inc) {
          if (dist.emplace(inc.other, hop).second) next.push_back(inc.other);
        };
        for (const auto& inc : out_[v]) visit(inc);
        for (const auto& inc : in_[v]) visit(inc);
      }
      frontier.swap(next);
    }
    return dist;
  }

  /// Nodes within k hops of v (v excluded), ordered by hop then id.
  std::vector<Neighbor> k_order_neighbors(std::string_view v, int k) const {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
    NodeIndex start = require(v);
    auto dist = ball(std::span<const NodeIndex>(&start, 1), k);
    std::vector<Neighbor> out;
    out.reserve(dist.size());
    for (const auto& [idx, hops] : dist)
      if (idx != start) out.push_back({nodes_[idx].id, hops});
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.hops != b.hops ? a.hops < b.hops : a.id < b.id;
    });
    return out;
  }

  /// Relation type of every edge incident to idx, both directions.
  std::array<std::size_t, 3> incident_relation_counts(NodeIndex idx) const {
    std::array<std::size_t, 3> counts{};
    for (const auto& inc : out_[idx]) counts[static_cast<std::size_t>(inc.relation)]++;
    for (const auto& inc : in_[idx]) counts[static_cast<std::size_t>(inc.relation)]++;
    return counts;
  }

 private:
  struct StoredEdge {
    NodeIndex src;
    NodeIndex dst;
    RelationType relation;
  };

  static std::uint64_t pair_key(NodeIndex s, NodeIndex d) {
    return (static_cast<std::uint64_t>(s) << 32) | d;
  }

  static void validate(const Node& node) {
    if (node.id.empty()) throw Error(ErrorCode::InvalidArgument, "node id is empty");
    if (node.content.empty()) throw Error(ErrorCode::EmptyContent, node.id);
    if (node.timestamp < 0)
      throw Error(ErrorCode::InvalidTimestamp, node.id + ": " + std::to_string(node.timestamp));
  }

  void erase_timestamp(Timestamp t) {
    auto it = timestamps_.find(t);
    if (--it->second == 0) timestamps_.erase(it);
  }

  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeIndex> ids_;
  std::vector<std::vector<Incidence>> out_;
  std::vector<std::vector<Incidence>> in_;
  std::vector<StoredEdge> edges_;
  std::array<std::unordered_set<std::uint64_t>, 3> edge_keys_;
  std::map<Timestamp, std::size_t> timestamps_;
  std::uint64_t update_counter_ = 0;
};

}  // namespace fusegraph
