#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fusegraph/error.hpp"
#include "fusegraph/graph.hpp"

namespace fusegraph {

namespace detail {

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

inline nlohmann::json parse_line(const std::string& line, std::size_t lineno) {
  try {
    auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw ParseError(lineno, "expected a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(lineno, e.what());
  }
}

inline void require_exact_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                               std::size_t lineno) {
  for (const char* k : keys)
    if (!j.contains(k)) throw ParseError(lineno, std::string("missing field \"") + k + "\"");
  if (j.size() != keys.size()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) throw ParseError(lineno, "unexpected field \"" + it.key() + "\"");
    }
  }
}

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t lineno) {
  if (!j[key].is_string()) throw ParseError(lineno, std::string("field \"") + key + "\" must be a string");
  return j[key].get<std::string>();
}

}  // namespace detail

inline Node node_from_json(const nlohmann::json& j, std::size_t lineno = 1) {
  detail::require_exact_keys(j, {"id", "kind", "content", "timestamp"}, lineno);
  Node n;
  n.id = detail::require_string(j, "id", lineno);
  auto kind = parse_node_kind(detail::require_string(j, "kind", lineno));
  if (!kind) throw ParseError(lineno, "unknown kind \"" + j["kind"].get<std::string>() + "\"");
  n.kind = *kind;
  n.content = detail::require_string(j, "content", lineno);
  if (!j["timestamp"].is_number_integer())
    throw ParseError(lineno, "field \"timestamp\" must be an integer");
  n.timestamp = j["timestamp"].get<Timestamp>();
  if (n.id.empty()) throw ParseError(lineno, "empty id");
  if (n.content.empty()) throw ParseError(lineno, "empty content");
  if (n.timestamp < 0) throw ParseError(lineno, "negative timestamp");
  return n;
}

inline Edge edge_from_json(const nlohmann::json& j, std::size_t lineno = 1) {
  detail::require_exact_keys(j, {"src", "dst", "relation"}, lineno);
  Edge e;
  e.src = detail::require_string(j, "src", lineno);
  e.dst = detail::require_string(j, "dst", lineno);
  auto rel = parse_relation(detail::require_string(j, "relation", lineno));
  if (!rel) throw ParseError(lineno, "unknown relation \"" + j["relation"].get<std::string>() + "\"");
  e.relation = *rel;
  return e;
}

inline nlohmann::ordered_json to_json(const Node& n) {
  nlohmann::ordered_json j;
  j["id"] = n.id;
  j["kind"] = to_string(n.kind);
  j["content"] = n.content;
  j["timestamp"] = n.timestamp;
  return j;
}

inline nlohmann::ordered_json to_json(const Edge& e) {
  nlohmann::ordered_json j;
  j["src"] = e.src;
  j["dst"] = e.dst;
  j["relation"] = to_string(e.relation);
  return j;
}

inline std::vector<Node> read_nodes_jsonl(std::istream& in) {
  std::vector<Node> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (detail::blank(line)) continue;
    out.push_back(node_from_json(detail::parse_line(line, lineno), lineno));
  }
  return out;
}

inline std::vector<Edge> read_edges_jsonl(std::istream& in) {
  std::vector<Edge> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (detail::blank(line)) continue;
    out.push_back(edge_from_json(detail::parse_line(line, lineno), lineno));
  }
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
  return in;
}

inline std::vector<Node> read_nodes_jsonl(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_nodes_jsonl(in);
}

inline std::vector<Edge> read_edges_jsonl(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_edges_jsonl(in);
}

inline void write_nodes_jsonl(std::ostream& out, std::span<const Node> nodes) {
  for (const auto& n : nodes) out << to_json(n).dump() << '\n';
}

inline void write_edges_jsonl(std::ostream& out, std::span<const Edge> edges) {
  for (const auto& e : edges) out << to_json(e).dump() << '\n';
}

/// Loads nodes first, then edges, into a fresh graph.
inline LiteratureGraph build_graph(std::span<const Node> nodes, std::span<const Edge> edges) {
  LiteratureGraph g;
  for (const auto& n : nodes) g.add_node(n);
  for (const auto& e : edges) g.add_edge(e);
  return g;
}

}  // namespace fusegraph
