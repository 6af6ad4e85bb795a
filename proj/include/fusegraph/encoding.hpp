#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fusegraph/embedder.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph.hpp"
#include "fusegraph/signature.hpp"

namespace fusegraph {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != cols) throw Error(ErrorCode::DimensionMismatch, "matrix-vector product");
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      const double* row = data.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
      y[r] = s;
    }
    return y;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Platform-independent seeded stream (splitmix64).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

struct ManifoldEmbedding {
  std::vector<double> values;
  std::uint64_t version = 0;

  friend bool operator==(const ManifoldEmbedding&, const ManifoldEmbedding&) = default;
};

/// Base projection plus one additive delta per relation type. Fully
/// determined by (seed, D, m); immutable once built.
struct ProjectionModel {
  std::size_t target_dim = 32;
  std::size_t input_dim = 64;
  double sigma_gate = 1.0;
  std::uint64_t seed = 42;
  Matrix base;
  std::array<Matrix, 3> relation_delta;

  static ProjectionModel initialize(std::uint64_t seed, std::size_t target_dim, std::size_t input_dim,
                                    double sigma_gate) {
    if (target_dim < 4) throw Error(ErrorCode::ConfigError, "projection dim must be >= 4");
    if (target_dim > input_dim)
      throw Error(ErrorCode::ConfigError, "projection dim must not exceed embedding dim");
    ProjectionModel model;
    model.target_dim = target_dim;
    model.input_dim = input_dim;
    model.sigma_gate = sigma_gate;
    model.seed = seed;
    SplitMix64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    auto fill = [&](Matrix& m) {
      m = Matrix(target_dim, input_dim);
      for (double& x : m.data) x = (2.0 * rng.uniform() - 1.0) * bound;
    };
    fill(model.base);
    for (auto& delta : model.relation_delta) fill(delta);
    return model;
  }

  friend bool operator==(const ProjectionModel&, const ProjectionModel&) = default;
};

/// Elementwise sigmoid-gated blend of signature and semantic vector.
inline std::vector<double> gate_fuse(std::span<const double> signature, std::span<const double> semantic,
                                     double sigma_gate) {
  if (signature.size() != semantic.size())
    throw Error(ErrorCode::DimensionMismatch, "gate_fuse operands differ in length");
  std::vector<double> fused(signature.size());
  for (std::size_t i = 0; i < fused.size(); ++i) {
    const double g = 1.0 / (1.0 + std::exp(-sigma_gate * (signature[i] + semantic[i])));
    fused[i] = g * signature[i] + (1.0 - g) * semantic[i];
  }
  return fused;
}

/// W_base + sum_r (count_r / total) * W_rel[r]; W_base exactly when no
/// relations are incident.
inline Matrix adjust_projection(const ProjectionModel& model, const std::array<std::size_t, 3>& counts) {
  Matrix w = model.base;
  const std::size_t total = counts[0] + counts[1] + counts[2];
  if (total == 0) return w;
  for (std::size_t r = 0; r < 3; ++r) {
    if (counts[r] == 0) continue;
    const double share = static_cast<double>(counts[r]) / static_cast<double>(total);
    const auto& delta = model.relation_delta[r].data;
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] += share * delta[i];
  }
  return w;
}

inline Matrix adjust_projection(const ProjectionModel& model, std::span<const RelationType> relations) {
  std::array<std::size_t, 3> counts{};
  for (auto r : relations) counts[static_cast<std::size_t>(r)]++;
  return adjust_projection(model, counts);
}

/// Divides by the L2 norm; returns false (and leaves e_0) when the norm is
/// below 1e-12.
inline bool normalize_to_sphere(std::vector<double>& v) {
  const double n = l2_norm(v);
  if (!(n >= 1e-12) || !std::isfinite(n)) {
    std::fill(v.begin(), v.end(), 0.0);
    if (!v.empty()) v[0] = 1.0;
    return false;
  }
  for (double& x : v) x /= n;
  return true;
}

struct EncodeResult {
  ManifoldEmbedding embedding;
  bool degenerate = false;
};

inline EncodeResult encode_features(const ProjectionModel& model, std::span<const double> signature,
                                    std::span<const double> semantic,
                                    const std::array<std::size_t, 3>& relation_counts,
                                    std::uint64_t version = 0) {
  if (signature.size() != model.input_dim || semantic.size() != model.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "encode input dimension");
  const auto fused = gate_fuse(signature, semantic, model.sigma_gate);
  EncodeResult out;
  out.embedding.values = adjust_projection(model, relation_counts).apply(fused);
  out.embedding.version = version;
  out.degenerate = !normalize_to_sphere(out.embedding.values);
  return out;
}

/// Encodes a graph node from its current signature and semantic vector.
inline EncodeResult encode(const ProjectionModel& model, const LiteratureGraph& graph,
                           const SignatureTable& signatures, std::span<const SemanticVector> embeddings,
                           NodeIndex v) {
  if (v >= graph.node_count()) throw Error(ErrorCode::UnknownNode, std::to_string(v));
  if (!signatures.has(v)) throw Error(ErrorCode::MissingSignature, graph.node_at(v).id);
  if (v >= embeddings.size() || embeddings[v].values.empty())
    throw Error(ErrorCode::MissingEmbedding, graph.node_at(v).id);
  const auto& sig = signatures.at(v);
  return encode_features(model, sig.values, embeddings[v].values, graph.incident_relation_counts(v),
                         sig.version);
}

}  // namespace fusegraph
