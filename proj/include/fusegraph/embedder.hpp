#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "fusegraph/error.hpp"

namespace fusegraph {

/// Unit-norm content embedding of a node's text.
struct SemanticVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const SemanticVector&, const SemanticVector&) = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double cosine_similarity(const SemanticVector& a, const SemanticVector& b) {
  return cosine_similarity(a.values, b.values);
}

enum class ProviderKind { builtin, remote };

struct EmbedderConfig {
  std::size_t dim = 64;
  ProviderKind provider = ProviderKind::builtin;
  std::string remote_endpoint;  // e.g. "http://127.0.0.1:8090"
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;

  void validate() const {
    if (dim < 8) throw Error(ErrorCode::ConfigError, "embedding dim must be >= 8");
    if (batch_size < 1) throw Error(ErrorCode::ConfigError, "batch size must be >= 1");
    if (max_in_flight < 1) throw Error(ErrorCode::ConfigError, "max in-flight must be >= 1");
    if (provider == ProviderKind::remote && remote_endpoint.empty())
      throw Error(ErrorCode::ConfigError, "remote provider needs an endpoint");
  }
};

/// Provider contract: every emitted vector has dim() entries and unit L2 norm.
/// Implementations are immutable after construction and safe to call from
/// any number of threads.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual SemanticVector embed(std::string_view text) const = 0;

  virtual std::vector<SemanticVector> batch_embed(std::span<const std::string> texts) const {
    std::vector<SemanticVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
  }
};

inline bool is_blank(std::string_view text) {
  return text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

/// Lowercased tokens: maximal runs of [a-z0-9] or non-ASCII bytes.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    const bool word = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
    if (word) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace hashing {

inline constexpr std::uint64_t kBucketBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kSignBasis = 0x84222325cbf29ce4ULL;
inline constexpr std::uint64_t kPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= kPrime;
  }
  return h;
}

}  // namespace hashing

/// Signed feature hashing over a bag of tokens. A pure function of the text
/// and the dimension; the hash constants above are part of the format.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dim = 64) : dim_(dim) {
    if (dim < 8) throw Error(ErrorCode::ConfigError, "embedding dim must be >= 8");
  }

  std::size_t dim() const override { return dim_; }

  SemanticVector embed(std::string_view text) const override {
    if (is_blank(text)) throw Error(ErrorCode::EmptyContent, "text is empty");
    auto tokens = tokenize(text);
    if (tokens.empty()) throw Error(ErrorCode::EmptyContent, "text has no tokens");
    SemanticVector v{std::vector<double>(dim_, 0.0)};
    for (const auto& tok : tokens) {
      const auto bucket = hashing::fnv1a(tok, hashing::kBucketBasis) % dim_;
      const double sign = (hashing::fnv1a(tok, hashing::kSignBasis) >> 63) ? -1.0 : 1.0;
      v.values[bucket] += sign;
    }
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      // Opposite-signed tokens cancelled exactly.
      v.values[0] = 1.0;
      return v;
    }
    for (double& x : v.values) x /= norm;
    return v;
  }

 private:
  std::size_t dim_;
};

/// Client for the POST /embed wire contract. Chunks batches to the configured
/// limit and bounds concurrent requests.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::string endpoint, std::size_t dim, std::size_t batch_size = 32,
                 std::size_t max_in_flight = 4)
      : endpoint_(std::move(endpoint)),
        dim_(dim),
        batch_size_(std::max<std::size_t>(1, batch_size)),
        slots_(std::make_unique<std::counting_semaphore<1024>>(
            static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(max_in_flight, 1, 1024)))) {}

  std::size_t dim() const override { return dim_; }

  SemanticVector embed(std::string_view text) const override {
    std::string t(text);
    return batch_embed(std::span<const std::string>(&t, 1)).front();
  }

  std::vector<SemanticVector> batch_embed(std::span<const std::string> texts) const override {
    for (const auto& t : texts)
      if (is_blank(t)) throw Error(ErrorCode::EmptyContent, "text is empty");
    std::vector<SemanticVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
      auto chunk = texts.subspan(start, std::min(batch_size_, texts.size() - start));
      auto vecs = request(chunk);
      for (auto& v : vecs) out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::vector<SemanticVector> request(std::span<const std::string> texts) const {
    nlohmann::json body;
    body["texts"] = std::vector<std::string>(texts.begin(), texts.end());

    slots_->acquire();
    httplib::Result res;
    {
      httplib::Client client(endpoint_);
      client.set_connection_timeout(5);
      client.set_read_timeout(60);
      res = client.Post("/embed", body.dump(), "application/json");
    }
    slots_->release();

    if (!res) throw Error(ErrorCode::RemoteUnavailable, endpoint_ + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw Error(ErrorCode::RemoteUnavailable, endpoint_ + ": HTTP " + std::to_string(res->status));

    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::RemoteUnavailable, std::string("malformed body: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("dim") || !doc["dim"].is_number_integer() ||
        !doc.contains("vectors") || !doc["vectors"].is_array())
      throw Error(ErrorCode::RemoteUnavailable, "malformed body: missing dim/vectors");
    const auto dim = doc["dim"].get<std::int64_t>();
    if (dim != static_cast<std::int64_t>(dim_))
      throw Error(ErrorCode::DimensionMismatch,
                  "remote dim " + std::to_string(dim) + ", expected " + std::to_string(dim_));
    const auto& vectors = doc["vectors"];
    if (vectors.size() != texts.size())
      throw Error(ErrorCode::RemoteUnavailable, "vector count does not match text count");

    std::vector<SemanticVector> out;
    out.reserve(texts.size());
    for (const auto& row : vectors) {
      if (!row.is_array()) throw Error(ErrorCode::RemoteUnavailable, "malformed vector");
      if (row.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "vector length differs from dim");
      SemanticVector v;
      v.values.reserve(dim_);
      for (const auto& x : row) {
        if (!x.is_number()) throw Error(ErrorCode::RemoteUnavailable, "non-numeric vector entry");
        v.values.push_back(x.get<double>());
      }
      const double n = l2_norm(v.values);
      if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6)
        throw Error(ErrorCode::RemoteUnavailable, "remote vector is not unit-normalized");
      out.push_back(std::move(v));
    }
    return out;
  }

  std::string endpoint_;
  std::size_t dim_;
  std::size_t batch_size_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

inline std::shared_ptr<const EmbeddingProvider> make_provider(const EmbedderConfig& cfg) {
  cfg.validate();
  if (cfg.provider == ProviderKind::remote)
    return std::make_shared<RemoteEmbedder>(cfg.remote_endpoint, cfg.dim, cfg.batch_size,
                                            cfg.max_in_flight);
  return std::make_shared<HashingEmbedder>(cfg.dim);
}

}  // namespace fusegraph
