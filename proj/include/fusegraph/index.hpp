#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fusegraph/binary_io.hpp"
#include "fusegraph/embedder.hpp"
#include "fusegraph/encoding.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph.hpp"

namespace fusegraph {

struct TemporalMetricParams {
  double alpha = 0.25;
  double max_time_diff = 1.0;  // seconds

  void validate() const {
    if (!(alpha >= 0)) throw Error(ErrorCode::ConfigError, "alpha must be >= 0");
    if (!(max_time_diff > 0)) throw Error(ErrorCode::ConfigError, "max_time_diff must be > 0");
  }

  static double span_of(TimeExtent extent) {
    return extent.max > extent.min ? static_cast<double>(extent.max - extent.min) : 1.0;
  }
};

/// Zero-valued counts mean "derive from the corpus at build time".
struct IndexConfig {
  std::size_t cluster_count = 0;    // ceil(sqrt(n))
  std::size_t probe_count = 0;      // ceil(0.1 * C)
  std::uint64_t update_threshold = 1000;
  double density_threshold = 0.01;
  std::size_t density_min_nodes = 1000;
  std::size_t reduced_dim = 0;      // ceil(D / 2)
  std::uint64_t seed = 42;
  int max_iterations = 25;
  double tolerance = 1e-4;

  void validate() const {
    if (update_threshold < 1) throw Error(ErrorCode::ConfigError, "update threshold must be >= 1");
    if (!(density_threshold > 0 && density_threshold <= 1))
      throw Error(ErrorCode::ConfigError, "density threshold must lie in (0,1]");
    if (max_iterations < 1) throw Error(ErrorCode::ConfigError, "max_iterations must be >= 1");
    if (reduced_dim != 0 && reduced_dim < 4) throw Error(ErrorCode::ConfigError, "reduced dim must be >= 4");
  }
};

/// Geodesic distance on the unit sphere. The half-angle form
/// 2*atan2(|a-b|, |a+b|) stays accurate for nearly parallel or antipodal
/// vectors, where acos(a.b) loses about half its digits, and is exactly
/// symmetric in its arguments.
inline double base_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double diff = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    const double s = a[i] + b[i];
    diff += d * d;
    sum += s * s;
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

inline double time_distance(Timestamp a, Timestamp b, const TemporalMetricParams& p) {
  const double gap = std::abs(static_cast<double>(a) - static_cast<double>(b));
  return std::min(1.0, gap / p.max_time_diff);
}

inline double temporal_metric(std::span<const double> a, Timestamp ta, std::span<const double> b,
                              Timestamp tb, const TemporalMetricParams& p) {
  return base_distance(a, b) + p.alpha * time_distance(ta, tb, p);
}

struct IndexEntry {
  std::string id;
  std::vector<double> embedding;
  Timestamp timestamp = 0;
};

struct SearchHit {
  std::string id;
  double distance = 0.0;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

inline bool hit_less(const SearchHit& a, const SearchHit& b) {
  return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
}

/// Inverted-file index over unit vectors: spherical k-means coarse
/// quantizer, exact re-rank of probed posting lists under the temporal
/// metric. Probing every cluster is exhaustive search.
///
/// Reads are const and may run concurrently; insert, upsert and
/// maybe_reduce_order need exclusive access.
class ManifoldIndex {
 public:
  ManifoldIndex() = default;

  static ManifoldIndex build(std::span<const IndexEntry> entries, IndexConfig config,
                             TemporalMetricParams metric) {
    config.validate();
    metric.validate();
    if (entries.empty()) throw Error(ErrorCode::EmptyInput, "no embeddings to index");
    const std::size_t dim = entries.front().embedding.size();
    if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "empty embedding");
    for (const auto& e : entries)
      if (e.embedding.size() != dim) throw Error(ErrorCode::DimensionMismatch, e.id);

    ManifoldIndex idx;
    idx.config_ = config;
    idx.metric_ = metric;
    idx.full_dim_ = dim;
    idx.active_dims_.resize(dim);
    std::iota(idx.active_dims_.begin(), idx.active_dims_.end(), std::size_t{0});

    const std::size_t n = entries.size();
    std::size_t c = config.cluster_count != 0
                        ? config.cluster_count
                        : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    c = std::clamp<std::size_t>(c, 1, n);

    std::vector<double> points(n * dim);
    for (std::size_t i = 0; i < n; ++i)
      std::copy(entries[i].embedding.begin(), entries[i].embedding.end(), points.begin() + i * dim);

    idx.centroids_ = spherical_kmeans(points, n, dim, c, config);
    idx.clusters_.assign(c, {});
    for (std::size_t i = 0; i < n; ++i) {
      const auto cl = idx.nearest_centroid(std::span<const double>(points.data() + i * dim, dim));
      idx.append(cl, entries[i].id, entries[i].embedding, entries[i].timestamp);
    }
    if (idx.locator_.size() != n) throw Error(ErrorCode::DuplicateId, "duplicate id in index input");

    idx.stats_.reset(dim);
    for (std::size_t i = 0; i < n; ++i) idx.stats_.add(std::span<const double>(points.data() + i * dim, dim));
    idx.updates_since_build_ = 0;
    idx.built_ = true;
    return idx;
  }

  bool built() const { return built_; }
  std::size_t size() const { return locator_.size(); }
  bool contains(const std::string& id) const { return locator_.contains(id); }
  std::size_t cluster_count() const { return centroids_.size() / std::max<std::size_t>(1, active_dim()); }
  std::size_t active_dim() const { return active_dims_.size(); }
  std::size_t full_dim() const { return full_dim_; }
  const std::vector<std::size_t>& active_dims() const { return active_dims_; }
  const IndexConfig& config() const { return config_; }
  const TemporalMetricParams& metric() const { return metric_; }
  std::uint64_t updates_since_build() const { return updates_since_build_; }
  std::size_t reductions() const { return reductions_; }

  std::size_t probe_count() const {
    const auto c = cluster_count();
    std::size_t p = config_.probe_count != 0
                        ? config_.probe_count
                        : static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(c)));
    return std::clamp<std::size_t>(p, 1, std::max<std::size_t>(1, c));
  }

  std::size_t reduced_dim() const {
    std::size_t d = config_.reduced_dim != 0
                        ? config_.reduced_dim
                        : static_cast<std::size_t>(std::ceil(static_cast<double>(full_dim_) / 2.0));
    return std::clamp<std::size_t>(d, std::min<std::size_t>(4, full_dim_), full_dim_);
  }

  void set_probe_count(std::size_t p) { config_.probe_count = p; }

  std::span<const double> centroid(std::size_t c) const {
    return std::span<const double>(centroids_).subspan(c * active_dim(), active_dim());
  }

  std::vector<double> dim_variances() const { return stats_.variances(); }

  /// Truncates a full-dimension embedding to the active coordinates and
  /// renormalizes it.
  std::vector<double> project(std::span<const double> full) const {
    if (full.size() != full_dim_) throw Error(ErrorCode::DimensionMismatch, "project expects full dimension");
    std::vector<double> out;
    out.reserve(active_dims_.size());
    for (auto d : active_dims_) out.push_back(full[d]);
    normalize_to_sphere(out);
    return out;
  }

  std::vector<SearchHit> knn(std::span<const double> query, std::optional<Timestamp> query_time,
                             std::size_t k, std::optional<std::size_t> probes = std::nullopt) const {
    if (!built_) throw Error(ErrorCode::IndexNotBuilt, "knn on an unbuilt index");
    if (query.size() != active_dim())
      throw Error(ErrorCode::DimensionMismatch,
                  "query has " + std::to_string(query.size()) + " dims, index " + std::to_string(active_dim()));
    if (k == 0) return {};
    const auto c = cluster_count();
    const auto p = std::clamp<std::size_t>(probes.value_or(probe_count()), 1, c);

    std::vector<std::pair<double, std::size_t>> order(c);
    for (std::size_t i = 0; i < c; ++i) order[i] = {base_distance(query, centroid(i)), i};
    std::sort(order.begin(), order.end());

    // Probe the p nearest lists, then keep going while fewer than k
    // candidates have been seen so small or skewed indexes are not starved.
    std::vector<SearchHit> hits;
    const auto d = active_dim();
    for (std::size_t j = 0; j < c && (j < p || hits.size() < k); ++j) {
      const auto& cl = clusters_[order[j].second];
      for (std::size_t m = 0; m < cl.ids.size(); ++m) {
        std::span<const double> v(cl.vectors.data() + m * d, d);
        double dist = base_distance(query, v);
        if (query_time) dist += metric_.alpha * time_distance(*query_time, cl.timestamps[m], metric_);
        hits.push_back({cl.ids[m], dist});
      }
    }
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_less);
    hits.resize(keep);
    return hits;
  }

  /// Adds a node at its nearest centroid. The embedding must already be in
  /// the active space (see project()).
  void insert(const std::string& id, std::span<const double> embedding, Timestamp timestamp) {
    if (!built_) throw Error(ErrorCode::IndexNotBuilt, "insert on an unbuilt index");
    if (locator_.contains(id)) throw Error(ErrorCode::DuplicateId, id);
    if (embedding.size() != active_dim()) throw Error(ErrorCode::DimensionMismatch, id);
    append(nearest_centroid(embedding), id, embedding, timestamp);
    stats_.add(embedding);
    ++updates_since_build_;
  }

  /// Replaces the stored vector of an indexed node, or inserts a new one.
  void upsert(const std::string& id, std::span<const double> embedding, Timestamp timestamp) {
    if (!built_) throw Error(ErrorCode::IndexNotBuilt, "upsert on an unbuilt index");
    if (embedding.size() != active_dim()) throw Error(ErrorCode::DimensionMismatch, id);
    if (locator_.contains(id)) stats_.remove(remove(id));
    insert(id, embedding, timestamp);  // counts the update
  }

  /// Triggered by graph density above threshold (for graphs of at least
  /// density_min_nodes nodes) or by more than update_threshold updates since
  /// build. Keeps the highest-variance coordinates.
  bool maybe_reduce_order(const LiteratureGraph& graph) {
    if (!built_) throw Error(ErrorCode::IndexNotBuilt, "reduce on an unbuilt index");
    bool trigger = updates_since_build_ > config_.update_threshold;
    if (!trigger && graph.node_count() >= 2 && graph.node_count() >= config_.density_min_nodes)
      trigger = graph.graph_density() > config_.density_threshold;
    if (!trigger || active_dim() <= reduced_dim()) return false;
    reduce_to(reduced_dim());
    return true;
  }

  /// A posting list holds more than 8x the mean: a rebuild would rebalance.
  bool rebuild_advised() const {
    if (!built_ || clusters_.empty()) return false;
    std::size_t largest = 0;
    for (const auto& cl : clusters_) largest = std::max(largest, cl.ids.size());
    const double mean = static_cast<double>(size()) / static_cast<double>(clusters_.size());
    return static_cast<double>(largest) > 8.0 * mean;
  }

  /// Posting list membership, for inspection and tests.
  std::vector<std::vector<std::string>> postings() const {
    std::vector<std::vector<std::string>> out;
    for (const auto& cl : clusters_) out.push_back(cl.ids);
    return out;
  }

  /// Every stored entry (active-space vectors), cluster by cluster.
  std::vector<IndexEntry> entries() const {
    std::vector<IndexEntry> out;
    out.reserve(size());
    const auto d = active_dim();
    for (const auto& cl : clusters_)
      for (std::size_t m = 0; m < cl.ids.size(); ++m)
        out.push_back({cl.ids[m],
                       std::vector<double>(cl.vectors.begin() + static_cast<std::ptrdiff_t>(m * d),
                                           cl.vectors.begin() + static_cast<std::ptrdiff_t>((m + 1) * d)),
                       cl.timestamps[m]});
    return out;
  }

  void serialize(BinaryWriter& w) const {
    w.u8(built_ ? 1 : 0);
    w.u64(config_.cluster_count);
    w.u64(config_.probe_count);
    w.u64(config_.update_threshold);
    w.f64(config_.density_threshold);
    w.u64(config_.density_min_nodes);
    w.u64(config_.reduced_dim);
    w.u64(config_.seed);
    w.u64(static_cast<std::uint64_t>(config_.max_iterations));
    w.f64(config_.tolerance);
    w.f64(metric_.alpha);
    w.f64(metric_.max_time_diff);
    w.u64(full_dim_);
    w.u64(active_dims_.size());
    for (auto d : active_dims_) w.u64(d);
    w.f64s(centroids_);
    w.u64(clusters_.size());
    for (const auto& cl : clusters_) {
      w.u64(cl.ids.size());
      for (std::size_t m = 0; m < cl.ids.size(); ++m) {
        w.str(cl.ids[m]);
        w.i64(cl.timestamps[m]);
      }
      w.f64s(cl.vectors);
    }
    stats_.serialize(w);
    w.u64(updates_since_build_);
    w.u64(reductions_);
  }

  static ManifoldIndex deserialize(BinaryReader& r) {
    ManifoldIndex idx;
    idx.built_ = r.u8() != 0;
    idx.config_.cluster_count = r.u64();
    idx.config_.probe_count = r.u64();
    idx.config_.update_threshold = r.u64();
    idx.config_.density_threshold = r.f64();
    idx.config_.density_min_nodes = r.u64();
    idx.config_.reduced_dim = r.u64();
    idx.config_.seed = r.u64();
    idx.config_.max_iterations = static_cast<int>(r.u64());
    idx.config_.tolerance = r.f64();
    idx.metric_.alpha = r.f64();
    idx.metric_.max_time_diff = r.f64();
    idx.full_dim_ = r.u64();
    idx.active_dims_.resize(r.length(8));
    for (auto& d : idx.active_dims_) {
      d = r.u64();
      if (d >= idx.full_dim_) throw Error(ErrorCode::SnapshotCorrupt, "active dim out of range");
    }
    idx.centroids_ = r.f64s();
    const auto d = idx.active_dim();
    idx.clusters_.resize(r.length(8));
    if (d != 0 && idx.centroids_.size() != idx.clusters_.size() * d)
      throw Error(ErrorCode::SnapshotCorrupt, "centroid table size");
    for (std::size_t c = 0; c < idx.clusters_.size(); ++c) {
      auto& cl = idx.clusters_[c];
      const auto count = r.length(16);
      for (std::size_t m = 0; m < count; ++m) {
        cl.ids.push_back(r.str());
        cl.timestamps.push_back(r.i64());
        idx.locator_[cl.ids.back()] = {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(m)};
      }
      cl.vectors = r.f64s();
      if (cl.vectors.size() != count * d) throw Error(ErrorCode::SnapshotCorrupt, "posting vectors size");
    }
    idx.stats_ = RunningStats::deserialize(r);
    idx.updates_since_build_ = r.u64();
    idx.reductions_ = r.u64();
    return idx;
  }

 private:
  struct Cluster {
    std::vector<std::string> ids;
    std::vector<Timestamp> timestamps;
    std::vector<double> vectors;  // ids.size() x active_dim
  };

  /// Per-coordinate Welford accumulators.
  struct RunningStats {
    std::uint64_t count = 0;
    std::vector<double> mean;
    std::vector<double> m2;

    void reset(std::size_t d) {
      count = 0;
      mean.assign(d, 0.0);
      m2.assign(d, 0.0);
    }

    void add(std::span<const double> x) {
      ++count;
      const double n = static_cast<double>(count);
      for (std::size_t i = 0; i < mean.size(); ++i) {
        const double delta = x[i] - mean[i];
        mean[i] += delta / n;
        m2[i] += delta * (x[i] - mean[i]);
      }
    }

    void remove(std::span<const double> x) {
      if (count <= 1) {
        reset(mean.size());
        return;
      }
      const double n = static_cast<double>(count - 1);
      for (std::size_t i = 0; i < mean.size(); ++i) {
        const double old_mean = (mean[i] * static_cast<double>(count) - x[i]) / n;
        m2[i] -= (x[i] - old_mean) * (x[i] - mean[i]);
        m2[i] = std::max(0.0, m2[i]);
        mean[i] = old_mean;
      }
      --count;
    }

    std::vector<double> variances() const {
      std::vector<double> v(mean.size(), 0.0);
      if (count == 0) return v;
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = m2[i] / static_cast<double>(count);
      return v;
    }

    RunningStats subset(std::span<const std::size_t> keep) const {
      RunningStats s;
      s.count = count;
      for (auto k : keep) {
        s.mean.push_back(mean[k]);
        s.m2.push_back(m2[k]);
      }
      return s;
    }

    void serialize(BinaryWriter& w) const {
      w.u64(count);
      w.f64s(mean);
      w.f64s(m2);
    }

    static RunningStats deserialize(BinaryReader& r) {
      RunningStats s;
      s.count = r.u64();
      s.mean = r.f64s();
      s.m2 = r.f64s();
      if (s.mean.size() != s.m2.size()) throw Error(ErrorCode::SnapshotCorrupt, "variance table");
      return s;
    }
  };

  static std::vector<double> spherical_kmeans(std::span<const double> points, std::size_t n, std::size_t dim,
                                              std::size_t c, const IndexConfig& config) {
    auto point = [&](std::size_t i) { return points.subspan(i * dim, dim); };
    SplitMix64 rng(config.seed);
    std::vector<double> centroids;
    centroids.reserve(c * dim);

    // k-means++ seeding on chordal distance 2 - 2cos.
    std::vector<double> closest(n, 4.0);
    std::size_t first = static_cast<std::size_t>(rng.next() % n);
    for (std::size_t k = 0; k < c; ++k) {
      std::size_t pick = first;
      if (k > 0) {
        double total = 0.0;
        for (double x : closest) total += x;
        if (total <= 0.0) {
          pick = static_cast<std::size_t>(rng.next() % n);
        } else {
          double target = rng.uniform() * total;
          pick = n - 1;
          for (std::size_t i = 0; i < n; ++i) {
            target -= closest[i];
            if (target < 0.0) {
              pick = i;
              break;
            }
          }
        }
      }
      auto p = point(pick);
      centroids.insert(centroids.end(), p.begin(), p.end());
      for (std::size_t i = 0; i < n; ++i)
        closest[i] = std::min(closest[i], std::max(0.0, 2.0 - 2.0 * dot(point(i), p)));
    }

    std::vector<std::size_t> assign(n, 0);
    std::vector<double> sums(c * dim);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
      for (std::size_t i = 0; i < n; ++i) assign[i] = nearest(centroids, c, dim, point(i));
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto p = point(i);
        double* s = sums.data() + assign[i] * dim;
        for (std::size_t j = 0; j < dim; ++j) s[j] += p[j];
      }
      double movement = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        std::vector<double> next(sums.begin() + static_cast<std::ptrdiff_t>(k * dim),
                                 sums.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim));
        if (l2_norm(next) < 1e-12) continue;  // empty or cancelling cluster keeps its centroid
        normalize_to_sphere(next);
        std::span<double> cur(centroids.data() + k * dim, dim);
        movement = std::max(movement, std::acos(std::clamp(dot(cur, next), -1.0, 1.0)));
        std::copy(next.begin(), next.end(), cur.begin());
      }
      if (movement < config.tolerance) break;
    }
    return centroids;
  }

  static std::size_t nearest(std::span<const double> centroids, std::size_t c, std::size_t dim,
                             std::span<const double> x) {
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double s = dot(x, centroids.subspan(k * dim, dim));
      if (s > best_dot) {
        best_dot = s;
        best = k;
      }
    }
    return best;
  }

  std::size_t nearest_centroid(std::span<const double> x) const {
    return nearest(centroids_, cluster_count(), active_dim(), x);
  }

  void append(std::size_t c, const std::string& id, std::span<const double> v, Timestamp t) {
    auto& cl = clusters_[c];
    locator_[id] = {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(cl.ids.size())};
    cl.ids.push_back(id);
    cl.timestamps.push_back(t);
    cl.vectors.insert(cl.vectors.end(), v.begin(), v.end());
  }

  /// Swap-with-last removal; returns the removed vector.
  std::vector<double> remove(const std::string& id) {
    const auto [c, m] = locator_.at(id);
    auto& cl = clusters_[c];
    const auto d = active_dim();
    const auto last = cl.ids.size() - 1;
    std::vector<double> removed(cl.vectors.begin() + static_cast<std::ptrdiff_t>(m * d),
                                cl.vectors.begin() + static_cast<std::ptrdiff_t>((m + 1) * d));
    if (m != last) {
      cl.ids[m] = std::move(cl.ids[last]);
      cl.timestamps[m] = cl.timestamps[last];
      std::copy(cl.vectors.begin() + static_cast<std::ptrdiff_t>(last * d), cl.vectors.end(),
                cl.vectors.begin() + static_cast<std::ptrdiff_t>(m * d));
      locator_[cl.ids[m]] = {c, m};
    }
    cl.ids.pop_back();
    cl.timestamps.pop_back();
    cl.vectors.resize(last * d);
    locator_.erase(id);
    return removed;
  }

  void reduce_to(std::size_t target) {
    const auto var = stats_.variances();
    std::vector<std::size_t> order(var.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return var[a] > var[b]; });
    order.resize(target);
    std::sort(order.begin(), order.end());

    auto shrink = [&](std::span<const double> v) {
      std::vector<double> out;
      out.reserve(target);
      for (auto k : order) out.push_back(v[k]);
      normalize_to_sphere(out);
      return out;
    };
    const auto d = active_dim();
    std::vector<double> centroids;
    for (std::size_t k = 0; k < cluster_count(); ++k) {
      auto v = shrink(centroid(k));
      centroids.insert(centroids.end(), v.begin(), v.end());
    }
    for (auto& cl : clusters_) {
      std::vector<double> vectors;
      vectors.reserve(cl.ids.size() * target);
      for (std::size_t m = 0; m < cl.ids.size(); ++m) {
        auto v = shrink(std::span<const double>(cl.vectors.data() + m * d, d));
        vectors.insert(vectors.end(), v.begin(), v.end());
      }
      cl.vectors = std::move(vectors);
    }
    std::vector<std::size_t> active;
    for (auto k : order) active.push_back(active_dims_[k]);
    stats_ = stats_.subset(order);
    active_dims_ = std::move(active);
    centroids_ = std::move(centroids);
    ++reductions_;
  }

  bool built_ = false;
  IndexConfig config_;
  TemporalMetricParams metric_;
  std::size_t full_dim_ = 0;
  std::vector<std::size_t> active_dims_;
  std::vector<double> centroids_;
  std::vector<Cluster> clusters_;
  std::unordered_map<std::string, std::pair<std::uint32_t, std::uint32_t>> locator_;
  RunningStats stats_;
  std::uint64_t updates_since_build_ = 0;
  std::size_t reductions_ = 0;
};

}  // namespace fusegraph
