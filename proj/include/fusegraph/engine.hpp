#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "fusegraph/binary_io.hpp"
#include "fusegraph/config.hpp"
#include "fusegraph/embedder.hpp"
#include "fusegraph/encoding.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph.hpp"
#include "fusegraph/graph_io.hpp"
#include "fusegraph/index.hpp"
#include "fusegraph/retrieval.hpp"
#include "fusegraph/signature.hpp"

namespace fusegraph {

struct IngestSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t indexed = 0;

  nlohmann::ordered_json to_json() const {
    return {{"nodes", nodes}, {"edges", edges}, {"indexed", indexed}};
  }
};

struct UpdateSummary {
  std::size_t nodes_added = 0;
  std::size_t nodes_replaced = 0;
  std::size_t edges_added = 0;
  std::size_t recomputed = 0;
  std::size_t reencoded = 0;
  bool reduction = false;

  nlohmann::ordered_json to_json() const {
    return {{"nodes_added", nodes_added}, {"nodes_replaced", nodes_replaced}, {"edges_added", edges_added},
            {"recomputed", recomputed},   {"reencoded", reencoded},           {"reduction", reduction}};
  }
};

inline constexpr std::string_view kSnapshotMagic = "FGSNAPSH";
inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Graph, semantic vectors, signatures, encodings and index for one corpus.
/// Methods are not synchronized; the service layer provides the
/// single-writer/multi-reader discipline.
class Engine {
 public:
  explicit Engine(EngineConfig config = {}, std::shared_ptr<const EmbeddingProvider> provider = nullptr)
      : config_(std::move(config)) {
    config_.validate();
    provider_ = provider ? std::move(provider) : make_provider(config_.embedder);
    if (provider_->dim() != config_.embedder.dim)
      throw Error(ErrorCode::DimensionMismatch, "provider dim differs from embedding_dim");
    projection_ = ProjectionModel::initialize(config_.seed, config_.projection_dim, config_.embedder.dim,
                                              config_.sigma_gate);
    if (config_.parser == ParserKind::remote)
      parser_ = std::make_shared<RemoteIntentParser>(config_.remote_parser_endpoint);
    else
      parser_ = std::make_shared<RuleBasedParser>();
  }

  const EngineConfig& config() const { return config_; }
  const LiteratureGraph& graph() const { return graph_; }
  const EmbeddingProvider& embedder() const { return *provider_; }
  std::span<const SemanticVector> embeddings() const { return embeddings_; }
  const SignatureTable& signatures() const { return signatures_; }
  std::span<const ManifoldEmbedding> encodings() const { return encodings_; }
  const ProjectionModel& projection() const { return projection_; }
  const ManifoldIndex& index() const { return index_; }
  ManifoldIndex& mutable_index() { return index_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  SignatureComputer signature_computer() const {
    return SignatureComputer(graph_, embeddings_, config_.signature, config_.embedder.dim);
  }

  /// Replaces all state with the given corpus and builds every layer.
  IngestSummary ingest(std::span<const Node> nodes, std::span<const Edge> edges) {
    LiteratureGraph graph = build_graph(nodes, edges);
    graph_ = std::move(graph);
    warnings_.clear();
    embeddings_ = embed_all(graph_.nodes());
    signatures_ = SignatureTable();
    signatures_.compute_all(signature_computer());
    encodings_.assign(graph_.node_count(), {});
    for (NodeIndex v = 0; v < graph_.node_count(); ++v) encode_node(v);
    if (graph_.node_count() > 0) rebuild_index();
    return {graph_.node_count(), graph_.edge_count(), index_.size()};
  }

  IngestSummary ingest_files(const std::filesystem::path& nodes, const std::filesystem::path& edges) {
    const auto n = read_nodes_jsonl(nodes);
    const auto e = read_edges_jsonl(edges);
    return ingest(n, e);
  }

  /// Re-clusters every current encoding from scratch.
  void rebuild_index() {
    std::vector<IndexEntry> entries;
    entries.reserve(graph_.node_count());
    for (NodeIndex v = 0; v < graph_.node_count(); ++v)
      entries.push_back({graph_.node_at(v).id, encodings_[v].values, graph_.node_at(v).timestamp});
    TemporalMetricParams metric{config_.alpha, TemporalMetricParams::span_of(graph_.time_extent())};
    index_ = ManifoldIndex::build(entries, config_.index, metric);
    graph_.reset_update_count();
  }

  /// Incremental path: new or replaced nodes are embedded, signatures are
  /// recomputed on the K-hop locality set of every touched node, those nodes
  /// are re-encoded and upserted, then order reduction is considered.
  UpdateSummary update(std::span<const Node> nodes, std::span<const Edge> edges) {
    validate_batch(nodes, edges);
    UpdateSummary summary;
    std::set<NodeIndex> changed;
    std::vector<NodeIndex> to_embed;
    for (const auto& n : nodes) {
      if (auto existing = graph_.index_of(n.id)) {
        graph_.replace_node(n);
        ++summary.nodes_replaced;
        to_embed.push_back(*existing);
      } else {
        graph_.add_node(n);
        ++summary.nodes_added;
        to_embed.push_back(static_cast<NodeIndex>(graph_.node_count() - 1));
      }
    }
    embeddings_.resize(graph_.node_count());
    encodings_.resize(graph_.node_count());
    if (!to_embed.empty()) {
      std::vector<std::string> texts;
      for (auto v : to_embed) texts.push_back(graph_.node_at(v).content);
      auto vecs = provider_->batch_embed(texts);
      for (std::size_t i = 0; i < to_embed.size(); ++i) {
        embeddings_[to_embed[i]] = std::move(vecs[i]);
        changed.insert(to_embed[i]);
      }
    }
    for (const auto& e : edges) {
      graph_.add_edge(e);
      ++summary.edges_added;
      changed.insert(graph_.require(e.src));
      changed.insert(graph_.require(e.dst));
    }
    if (changed.empty()) return summary;

    const std::vector<NodeIndex> seeds(changed.begin(), changed.end());
    const auto touched = signatures_.incremental_update(signature_computer(), seeds);
    summary.recomputed = touched.size();

    if (!index_.built()) {
      for (NodeIndex v = 0; v < graph_.node_count(); ++v) encode_node(v);
      summary.reencoded = graph_.node_count();
      rebuild_index();
      return summary;
    }
    for (auto v : touched) {
      encode_node(v);
      const auto& node = graph_.node_at(v);
      index_.upsert(node.id, index_.project(encodings_[v].values), node.timestamp);
    }
    summary.reencoded = touched.size();
    summary.reduction = index_.maybe_reduce_order(graph_);
    return summary;
  }

  ParseOutcome parse_intent(std::string_view text, std::string_view reference_date) const {
    return parser_->parse(text, reference_date);
  }

  SearchContext search_context() const {
    return SearchContext{graph_, *provider_, projection_, config_.signature, index_, config_.deterministic_timing};
  }

  RetrievalResult search(const Intent& intent) const { return fusegraph::search(search_context(), intent); }

  /// Parse then search, with the parse stage timed.
  RetrievalResult search_text(std::string_view text, std::string_view reference_date) const {
    const auto t0 = std::chrono::steady_clock::now();
    auto outcome = parse_intent(text, reference_date);
    const auto t1 = std::chrono::steady_clock::now();
    auto result = search(outcome.intent);
    if (!config_.deterministic_timing)
      result.timing.parse_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return result;
  }

  // -------------------------------------------------------------------------
  // Snapshot

  std::string to_snapshot() const {
    BinaryWriter w;
    w.raw(kSnapshotMagic);
    w.u32(kSnapshotVersion);
    w.str(config_.canonical());
    w.u64(config_.hash());

    w.u64(graph_.node_count());
    for (const auto& n : graph_.nodes()) {
      w.str(n.id);
      w.u8(static_cast<std::uint8_t>(n.kind));
      w.str(n.content);
      w.i64(n.timestamp);
    }
    const auto edges = graph_.edges();
    w.u64(edges.size());
    for (const auto& e : edges) {
      w.u32(graph_.require(e.src));
      w.u32(graph_.require(e.dst));
      w.u8(static_cast<std::uint8_t>(e.relation));
    }
    w.u64(graph_.update_count());

    for (NodeIndex v = 0; v < graph_.node_count(); ++v) w.f64s(embeddings_[v].values);
    for (NodeIndex v = 0; v < graph_.node_count(); ++v) {
      const auto& s = signatures_.has(v) ? signatures_.at(v) : HybridSignature{};
      w.f64s(s.values);
      w.u64(s.version);
    }

    w.u64(projection_.seed);
    w.u64(projection_.target_dim);
    w.u64(projection_.input_dim);
    w.f64(projection_.sigma_gate);
    w.f64s(projection_.base.data);
    for (const auto& d : projection_.relation_delta) w.f64s(d.data);

    for (NodeIndex v = 0; v < graph_.node_count(); ++v) {
      w.f64s(encodings_[v].values);
      w.u64(encodings_[v].version);
    }
    index_.serialize(w);
    w.u64(warnings_.size());
    for (const auto& s : warnings_) w.str(s);

    w.u64(hashing::fnv1a(w.bytes(), hashing::kBucketBasis));
    return w.take();
  }

  static Engine from_snapshot(std::string_view bytes, std::shared_ptr<const EmbeddingProvider> provider = nullptr) {
    if (bytes.size() < kSnapshotMagic.size() + 12 || bytes.substr(0, kSnapshotMagic.size()) != kSnapshotMagic)
      throw Error(ErrorCode::SnapshotCorrupt, "bad magic header");
    const auto body = bytes.substr(0, bytes.size() - 8);
    BinaryReader trailer(bytes.substr(bytes.size() - 8));
    if (trailer.u64() != hashing::fnv1a(body, hashing::kBucketBasis))
      throw Error(ErrorCode::SnapshotCorrupt, "checksum mismatch");

    BinaryReader r(body);
    r.raw(kSnapshotMagic.size());
    if (const auto version = r.u32(); version != kSnapshotVersion)
      throw Error(ErrorCode::SnapshotCorrupt, "unsupported snapshot version " + std::to_string(version));
    auto config = EngineConfig::from_text(r.str());
    if (r.u64() != config.hash()) throw Error(ErrorCode::SnapshotCorrupt, "config hash mismatch");

    Engine e(config, std::move(provider));
    const auto n = r.length(1);
    for (std::size_t i = 0; i < n; ++i) {
      Node node;
      node.id = r.str();
      const auto kind = r.u8();
      if (kind > 2) throw Error(ErrorCode::SnapshotCorrupt, "node kind");
      node.kind = static_cast<NodeKind>(kind);
      node.content = r.str();
      node.timestamp = r.i64();
      e.graph_.add_node(std::move(node));
    }
    const auto m = r.length(9);
    for (std::size_t i = 0; i < m; ++i) {
      const auto src = r.u32();
      const auto dst = r.u32();
      const auto rel = r.u8();
      if (src >= n || dst >= n || rel > 2) throw Error(ErrorCode::SnapshotCorrupt, "edge endpoint");
      e.graph_.add_edge({e.graph_.node_at(src).id, e.graph_.node_at(dst).id, static_cast<RelationType>(rel)});
    }
    const auto updates = r.u64();
    e.graph_.restore_update_count(updates);

    e.embeddings_.resize(n);
    for (auto& v : e.embeddings_) v.values = r.f64s();
    e.signatures_.resize(n);
    for (NodeIndex v = 0; v < n; ++v) {
      HybridSignature s;
      s.values = r.f64s();
      s.version = r.u64();
      e.signatures_.set(v, std::move(s));
    }

    ProjectionModel p;
    p.seed = r.u64();
    p.target_dim = r.u64();
    p.input_dim = r.u64();
    p.sigma_gate = r.f64();
    p.base = Matrix(p.target_dim, p.input_dim);
    p.base.data = r.f64s();
    for (auto& d : p.relation_delta) {
      d = Matrix(p.target_dim, p.input_dim);
      d.data = r.f64s();
    }
    if (!(p == e.projection_)) throw Error(ErrorCode::SnapshotCorrupt, "projection model differs from its seed");

    e.encodings_.resize(n);
    for (auto& enc : e.encodings_) {
      enc.values = r.f64s();
      enc.version = r.u64();
    }
    e.index_ = ManifoldIndex::deserialize(r);
    const auto w = r.length(8);
    for (std::size_t i = 0; i < w; ++i) e.warnings_.push_back(r.str());
    if (!r.done()) throw Error(ErrorCode::SnapshotCorrupt, "trailing bytes");
    return e;
  }

  /// Writes to a sibling temp file and renames it over the target.
  void save(const std::filesystem::path& path) const {
    const auto bytes = to_snapshot();
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error(ErrorCode::InvalidArgument, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  static Engine load(const std::filesystem::path& path, std::shared_ptr<const EmbeddingProvider> provider = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::SnapshotCorrupt, "cannot open snapshot " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_snapshot(ss.str(), std::move(provider));
  }

 private:
  /// Rejects a batch that would fail part-way, before anything is mutated.
  void validate_batch(std::span<const Node> nodes, std::span<const Edge> edges) const {
    std::set<std::string> incoming;
    for (const auto& n : nodes) {
      if (n.id.empty()) throw Error(ErrorCode::InvalidArgument, "node id is empty");
      if (is_blank(n.content)) throw Error(ErrorCode::EmptyContent, n.id);
      if (n.timestamp < 0) throw Error(ErrorCode::InvalidTimestamp, n.id);
      if (!incoming.insert(n.id).second) throw Error(ErrorCode::DuplicateId, n.id);
    }
    std::set<std::tuple<std::string, std::string, RelationType>> seen;
    for (const auto& e : edges) {
      for (const auto* end : {&e.src, &e.dst})
        if (!graph_.contains(*end) && !incoming.contains(*end)) throw Error(ErrorCode::UnknownEndpoint, *end);
      if (e.src == e.dst) throw Error(ErrorCode::SelfLoop, e.src);
      if (graph_.has_edge(e.src, e.dst, e.relation) || !seen.insert({e.src, e.dst, e.relation}).second)
        throw Error(ErrorCode::DuplicateEdge, e.src + "->" + e.dst);
    }
  }

  std::vector<SemanticVector> embed_all(std::span<const Node> nodes) const {
    std::vector<std::string> texts;
    texts.reserve(nodes.size());
    for (const auto& n : nodes) texts.push_back(n.content);
    return provider_->batch_embed(texts);
  }

  void encode_node(NodeIndex v) {
    auto res = encode(projection_, graph_, signatures_, embeddings_, v);
    if (res.degenerate) warnings_.push_back("degenerate encoding for " + graph_.node_at(v).id);
    encodings_[v] = std::move(res.embedding);
  }

  EngineConfig config_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  std::shared_ptr<const IntentParser> parser_;
  LiteratureGraph graph_;
  std::vector<SemanticVector> embeddings_;
  SignatureTable signatures_;
  ProjectionModel projection_;
  std::vector<ManifoldEmbedding> encodings_;
  ManifoldIndex index_;
  std::vector<std::string> warnings_;
};

}  // namespace fusegraph
