#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fusegraph/embedder.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph.hpp"

namespace fusegraph {

struct SignatureParams {
  int K = 2;
  double lambda_edge = 0.5;
  double nu_edge = 0.5;
  double lambda_topo = 0.4;
  double mu_sem = 0.4;
  double nu_time = 0.2;
  double beta_hodge = 0.1;
  double time_unit_seconds = 86400.0;

  void validate() const {
    if (K < 1) throw Error(ErrorCode::ConfigError, "signature K must be >= 1");
    if (lambda_topo < 0 || mu_sem < 0 || nu_time < 0)
      throw Error(ErrorCode::ConfigError, "feature weights must be nonnegative");
    if (lambda_topo + mu_sem + nu_time <= 0)
      throw Error(ErrorCode::ConfigError, "feature weights must not all be zero");
    if (lambda_edge < 0 || nu_edge < 0)
      throw Error(ErrorCode::ConfigError, "edge weights must be nonnegative");
    if (beta_hodge < 0 || beta_hodge > 1)
      throw Error(ErrorCode::ConfigError, "beta_hodge must lie in [0,1]");
    if (!(time_unit_seconds > 0)) throw Error(ErrorCode::ConfigError, "time unit must be positive");
  }
};

struct HybridSignature {
  std::vector<double> values;
  std::uint64_t version = 0;

  friend bool operator==(const HybridSignature&, const HybridSignature&) = default;
};

/// 1 / (1 + |t_v - t_u| / unit), in (0, 1].
inline double temporal_relevance(Timestamp t_v, Timestamp t_u, double time_unit_seconds = 86400.0) {
  const double gap = std::abs(static_cast<double>(t_v) - static_cast<double>(t_u));
  return 1.0 / (1.0 + gap / time_unit_seconds);
}

/// Position of t inside the extent, 0 for a degenerate extent.
inline double normalized_time(Timestamp t, TimeExtent extent) {
  if (extent.max <= extent.min) return 0.0;
  return (static_cast<double>(t) - static_cast<double>(extent.min)) /
         (static_cast<double>(extent.max) - static_cast<double>(extent.min));
}

/// Sinusoidal encoding of the normalized time, L2-normalized.
inline void time_feature_into(double tau, std::span<double> out) {
  const std::size_t m = out.size();
  for (std::size_t i = 0; 2 * i < m; ++i) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(m));
    out[2 * i] = std::sin(tau / freq);
    if (2 * i + 1 < m) out[2 * i + 1] = std::cos(tau / freq);
  }
  double norm = 0.0;
  for (double x : out) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : out) x /= norm;
}

inline std::vector<double> time_feature(Timestamp t, TimeExtent extent, std::size_t m) {
  std::vector<double> out(m);
  time_feature_into(normalized_time(t, extent), out);
  return out;
}

/// Evaluates the per-node diffusion signature against a graph and its
/// semantic-vector table (indexed by NodeIndex; an empty vector means the
/// node has not been embedded yet). Holds references only.
class SignatureComputer {
 public:
  SignatureComputer(const LiteratureGraph& graph, std::span<const SemanticVector> embeddings,
                    SignatureParams params, std::size_t dim)
      : graph_(graph), embeddings_(embeddings), params_(params), dim_(dim) {
    params_.validate();
  }

  const SignatureParams& params() const { return params_; }
  std::size_t dim() const { return dim_; }

  double edge_weight(NodeIndex v, NodeIndex u) const {
    const auto& a = embedding(v);
    const auto& b = embedding(u);
    const double sem = std::max(0.0, cosine_similarity(a, b));
    const auto& nv = graph_.node_at(v);
    const auto& nu = graph_.node_at(u);
    return params_.lambda_edge * sem +
           params_.nu_edge * temporal_relevance(nv.timestamp, nu.timestamp, params_.time_unit_seconds);
  }

  double edge_weight(std::string_view v, std::string_view u) const {
    return edge_weight(graph_.require(v), graph_.require(u));
  }

  /// Weighted mean of (V_sem[u] - V_sem[v]) over the 1-hop neighborhood.
  std::vector<double> topological_feature(NodeIndex v) const {
    const auto nbrs = graph_.undirected_neighbors(v);
    std::vector<double> out(dim_, 0.0);
    const auto& self = embedding(v).values;
    double total = 0.0;
    for (auto u : nbrs) {
      const double w = edge_weight(v, u);
      const auto& other = embedding(u).values;
      for (std::size_t i = 0; i < dim_; ++i) out[i] += w * (other[i] - self[i]);
      total += w;
    }
    if (total > 0.0)
      for (double& x : out) x /= total;
    else
      std::fill(out.begin(), out.end(), 0.0);
    return out;
  }

  std::vector<double> topological_feature(std::string_view v) const {
    return topological_feature(graph_.require(v));
  }

  std::vector<double> time_feature_of(NodeIndex v) const {
    return time_feature(graph_.node_at(v).timestamp, graph_.time_extent(), dim_);
  }

  /// Damped residual of S_raw against the edge-weighted mean of the
  /// neighbors' walk-free proxies mu*V_sem[u] + nu*time(u).
  std::vector<double> hodge_compensation(std::span<const double> s_raw, NodeIndex v) const {
    if (s_raw.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "raw signature");
    std::vector<double> error(dim_, 0.0);
    if (params_.beta_hodge == 0.0) return error;
    const auto nbrs = graph_.undirected_neighbors(v);
    const auto extent = graph_.time_extent();
    std::vector<double> proxy_mean(dim_, 0.0);
    std::vector<double> tf(dim_);
    double total = 0.0;
    for (auto u : nbrs) {
      const double w = edge_weight(v, u);
      const auto& sem = embedding(u).values;
      time_feature_into(normalized_time(graph_.node_at(u).timestamp, extent), tf);
      for (std::size_t i = 0; i < dim_; ++i)
        proxy_mean[i] += w * (params_.mu_sem * sem[i] + params_.nu_time * tf[i]);
      total += w;
    }
    if (total <= 0.0) return error;
    for (std::size_t i = 0; i < dim_; ++i)
      error[i] = params_.beta_hodge * (s_raw[i] - proxy_mean[i] / total);
    return error;
  }

  std::vector<double> hodge_compensation(std::span<const double> s_raw, std::string_view v) const {
    return hodge_compensation(s_raw, graph_.require(v));
  }

  std::vector<double> raw_signature(NodeIndex v) const {
    const auto topo = topological_feature(v);
    const auto tf = time_feature_of(v);
    const auto& sem = embedding(v).values;
    std::vector<double> raw(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      raw[i] = params_.lambda_topo * topo[i] + params_.mu_sem * sem[i] + params_.nu_time * tf[i];
    return raw;
  }

  HybridSignature compute(NodeIndex v) const {
    HybridSignature s;
    s.values = raw_signature(v);
    const auto error = hodge_compensation(s.values, v);
    for (std::size_t i = 0; i < dim_; ++i) s.values[i] -= error[i];
    s.version = graph_.update_count();
    return s;
  }

  HybridSignature compute(std::string_view v) const { return compute(graph_.require(v)); }

  const LiteratureGraph& graph() const { return graph_; }

 private:
  const SemanticVector& embedding(NodeIndex v) const {
    if (v >= embeddings_.size() || embeddings_[v].values.empty())
      throw Error(ErrorCode::MissingEmbedding, graph_.node_at(v).id);
    if (embeddings_[v].dim() != dim_)
      throw Error(ErrorCode::DimensionMismatch, graph_.node_at(v).id);
    return embeddings_[v];
  }

  const LiteratureGraph& graph_;
  std::span<const SemanticVector> embeddings_;
  SignatureParams params_;
  std::size_t dim_;
};

/// Signature per NodeIndex.
class SignatureTable {
 public:
  std::size_t size() const { return rows_.size(); }
  const HybridSignature& at(NodeIndex v) const { return rows_.at(v); }
  bool has(NodeIndex v) const { return v < rows_.size() && !rows_[v].values.empty(); }
  std::span<const HybridSignature> rows() const { return rows_; }

  void resize(std::size_t n) { rows_.resize(n); }
  void set(NodeIndex v, HybridSignature s) {
    if (v >= rows_.size()) rows_.resize(v + 1);
    rows_[v] = std::move(s);
  }

  void compute_all(const SignatureComputer& computer) {
    const auto n = computer.graph().node_count();
    rows_.resize(n);
    for (NodeIndex v = 0; v < n; ++v) rows_[v] = computer.compute(v);
  }

  /// Recomputes the changed nodes and everything within K hops of them.
  /// Returns the recomputed indices in ascending order; no other row is
  /// touched.
  std::vector<NodeIndex> incremental_update(const SignatureComputer& computer,
                                            std::span<const NodeIndex> changed) {
    const auto& graph = computer.graph();
    for (auto c : changed)
      if (c >= graph.node_count()) throw Error(ErrorCode::UnknownNode, std::to_string(c));
    const auto ball = graph.ball(changed, computer.params().K);
    std::vector<NodeIndex> touched;
    touched.reserve(ball.size());
    for (const auto& entry : ball) touched.push_back(entry.first);
    std::sort(touched.begin(), touched.end());
    if (rows_.size() < graph.node_count()) rows_.resize(graph.node_count());
    for (auto v : touched) rows_[v] = computer.compute(v);
    return touched;
  }

  std::vector<std::string> incremental_update(const SignatureComputer& computer,
                                              std::span<const std::string> changed) {
    std::vector<NodeIndex> idx;
    idx.reserve(changed.size());
    for (const auto& id : changed) idx.push_back(computer.graph().require(id));
    auto touched = incremental_update(computer, std::span<const NodeIndex>(idx));
    std::vector<std::string> ids;
    ids.reserve(touched.size());
    for (auto v : touched) ids.push_back(computer.graph().node_at(v).id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

 private:
  std::vector<HybridSignature> rows_;
};

}  // namespace fusegraph
