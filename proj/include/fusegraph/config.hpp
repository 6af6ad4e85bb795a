#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "fusegraph/embedder.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/index.hpp"
#include "fusegraph/signature.hpp"

namespace fusegraph {

enum class ParserKind { rules, remote };

/// Every tunable of the engine. Serialized as a flat JSON object; see
/// README.md for the key list.
struct EngineConfig {
  EmbedderConfig embedder;
  SignatureParams signature;
  std::size_t projection_dim = 32;
  double sigma_gate = 1.0;
  std::uint64_t seed = 42;
  double alpha = 0.25;
  IndexConfig index;
  ParserKind parser = ParserKind::rules;
  std::string remote_parser_endpoint;
  std::string snapshot_path = "fusegraph.snap";
  bool deterministic_timing = false;
  std::size_t writer_queue_capacity = 64;

  void validate() const {
    embedder.validate();
    signature.validate();
    index.validate();
    if (projection_dim < 4) throw Error(ErrorCode::ConfigError, "projection_dim must be >= 4");
    if (projection_dim > embedder.dim)
      throw Error(ErrorCode::ConfigError, "projection_dim must not exceed embedding_dim");
    if (index.reduced_dim != 0 && index.reduced_dim > projection_dim)
      throw Error(ErrorCode::ConfigError, "reduced_dim must not exceed projection_dim");
    if (index.cluster_count != 0 && index.probe_count > index.cluster_count)
      throw Error(ErrorCode::ConfigError, "probe_count must not exceed cluster_count");
    if (!(alpha >= 0)) throw Error(ErrorCode::ConfigError, "alpha must be >= 0");
    if (parser == ParserKind::remote && remote_parser_endpoint.empty())
      throw Error(ErrorCode::ConfigError, "remote parser needs an endpoint");
    if (writer_queue_capacity < 1) throw Error(ErrorCode::ConfigError, "writer_queue_capacity must be >= 1");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["embedding_dim"] = embedder.dim;
    j["provider"] = embedder.provider == ProviderKind::remote ? "remote" : "builtin";
    j["remote_embed_endpoint"] = embedder.remote_endpoint;
    j["embed_batch_size"] = embedder.batch_size;
    j["embed_max_in_flight"] = embedder.max_in_flight;
    j["signature_k"] = signature.K;
    j["lambda_edge"] = signature.lambda_edge;
    j["nu_edge"] = signature.nu_edge;
    j["lambda_topo"] = signature.lambda_topo;
    j["mu_sem"] = signature.mu_sem;
    j["nu_time"] = signature.nu_time;
    j["beta_hodge"] = signature.beta_hodge;
    j["time_unit_seconds"] = signature.time_unit_seconds;
    j["projection_dim"] = projection_dim;
    j["sigma_gate"] = sigma_gate;
    j["seed"] = seed;
    j["alpha"] = alpha;
    j["cluster_count"] = index.cluster_count;
    j["probe_count"] = index.probe_count;
    j["update_threshold"] = index.update_threshold;
    j["density_threshold"] = index.density_threshold;
    j["density_min_nodes"] = index.density_min_nodes;
    j["reduced_dim"] = index.reduced_dim;
    j["kmeans_max_iterations"] = index.max_iterations;
    j["intent_parser"] = parser == ParserKind::remote ? "remote" : "rules";
    j["remote_parser_endpoint"] = remote_parser_endpoint;
    j["snapshot_path"] = snapshot_path;
    j["deterministic_timing"] = deterministic_timing;
    j["writer_queue_capacity"] = writer_queue_capacity;
    return j;
  }

  std::string canonical() const { return to_json().dump(); }

  std::uint64_t hash() const { return hashing::fnv1a(canonical(), hashing::kBucketBasis); }

  /// Missing keys keep their defaults; unknown or mistyped keys are errors.
  static EngineConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a flat JSON object");
    EngineConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const auto& v = it.value();
      auto need = [&](bool ok, const char* what) {
        if (!ok) throw Error(ErrorCode::ConfigError, "key \"" + key + "\" must be " + what);
      };
      auto uint = [&] {
        need(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
             "a nonnegative integer");
        return v.get<std::uint64_t>();
      };
      auto real = [&] {
        need(v.is_number(), "a number");
        return v.get<double>();
      };
      auto text = [&] {
        need(v.is_string(), "a string");
        return v.get<std::string>();
      };
      if (key == "embedding_dim") c.embedder.dim = uint();
      else if (key == "provider") {
        const auto p = text();
        need(p == "builtin" || p == "remote", "\"builtin\" or \"remote\"");
        c.embedder.provider = p == "remote" ? ProviderKind::remote : ProviderKind::builtin;
      } else if (key == "remote_embed_endpoint") c.embedder.remote_endpoint = text();
      else if (key == "embed_batch_size") c.embedder.batch_size = uint();
      else if (key == "embed_max_in_flight") c.embedder.max_in_flight = uint();
      else if (key == "signature_k") c.signature.K = static_cast<int>(uint());
      else if (key == "lambda_edge") c.signature.lambda_edge = real();
      else if (key == "nu_edge") c.signature.nu_edge = real();
      else if (key == "lambda_topo") c.signature.lambda_topo = real();
      else if (key == "mu_sem") c.signature.mu_sem = real();
      else if (key == "nu_time") c.signature.nu_time = real();
      else if (key == "beta_hodge") c.signature.beta_hodge = real();
      else if (key == "time_unit_seconds") c.signature.time_unit_seconds = real();
      else if (key == "projection_dim") c.projection_dim = uint();
      else if (key == "sigma_gate") c.sigma_gate = real();
      else if (key == "seed") c.seed = uint();
      else if (key == "alpha") c.alpha = real();
      else if (key == "cluster_count") c.index.cluster_count = uint();
      else if (key == "probe_count") c.index.probe_count = uint();
      else if (key == "update_threshold") c.index.update_threshold = uint();
      else if (key == "density_threshold") c.index.density_threshold = real();
      else if (key == "density_min_nodes") c.index.density_min_nodes = uint();
      else if (key == "reduced_dim") c.index.reduced_dim = uint();
      else if (key == "kmeans_max_iterations") c.index.max_iterations = static_cast<int>(uint());
      else if (key == "intent_parser") {
        const auto p = text();
        need(p == "rules" || p == "remote", "\"rules\" or \"remote\"");
        c.parser = p == "remote" ? ParserKind::remote : ParserKind::rules;
      } else if (key == "remote_parser_endpoint") c.remote_parser_endpoint = text();
      else if (key == "snapshot_path") c.snapshot_path = text();
      else if (key == "deterministic_timing") {
        need(v.is_boolean(), "a boolean");
        c.deterministic_timing = v.get<bool>();
      } else if (key == "writer_queue_capacity") c.writer_queue_capacity = uint();
      else throw Error(ErrorCode::ConfigError, "unknown key \"" + key + "\"");
    }
    c.index.seed = c.seed;
    c.validate();
    return c;
  }

  static EngineConfig from_text(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
    return from_json(j);
  }

  static EngineConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
  }
};

/// Config path precedence: explicit flag, then $FUSEGRAPH_CONFIG, else none.
inline std::optional<std::filesystem::path> resolve_config_path(const std::string& flag_value) {
  if (!flag_value.empty()) return std::filesystem::path(flag_value);
  if (const char* env = std::getenv("FUSEGRAPH_CONFIG"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

}  // namespace fusegraph
