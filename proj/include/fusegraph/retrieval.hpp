#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "fusegraph/embedder.hpp"
#include "fusegraph/encoding.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph.hpp"
#include "fusegraph/index.hpp"
#include "fusegraph/signature.hpp"

namespace fusegraph {

// ---------------------------------------------------------------------------
// Calendar helpers (proleptic Gregorian, UTC)

inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
};

inline bool leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

/// Parses YYYY-MM-DD.
inline CivilDate parse_date(std::string_view s) {
  auto bad = [&] { return Error(ErrorCode::InvalidArgument, "expected YYYY-MM-DD, got \"" + std::string(s) + "\""); };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw bad();
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') throw bad();
  CivilDate d;
  d.year = std::stoi(std::string(s.substr(0, 4)));
  d.month = static_cast<unsigned>(std::stoi(std::string(s.substr(5, 2))));
  d.day = static_cast<unsigned>(std::stoi(std::string(s.substr(8, 2))));
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (d.month < 1 || d.month > 12) throw bad();
  const unsigned max_day = kDays[d.month - 1] + (d.month == 2 && leap_year(d.year) ? 1 : 0);
  if (d.day < 1 || d.day > max_day) throw bad();
  return d;
}

inline Timestamp start_of_day(const CivilDate& d) { return days_from_civil(d.year, d.month, d.day) * 86400; }
inline Timestamp end_of_day(const CivilDate& d) { return start_of_day(d) + 86399; }

// ---------------------------------------------------------------------------
// Intent

struct TimeRange {
  Timestamp start = 0;
  Timestamp end = 0;

  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct Intent {
  std::string keywords;
  std::optional<NodeKind> granularity;  // nullopt = all kinds
  std::optional<TimeRange> time_range;
  std::optional<RelationType> relation_type;
  int k = 10;

  void validate() const {
    if (is_blank(keywords)) throw Error(ErrorCode::EmptyQuery, "keywords are empty");
    if (time_range && time_range->start > time_range->end)
      throw Error(ErrorCode::InvalidArgument, "time range start exceeds end");
    if (k < 1 || k > 1000) throw Error(ErrorCode::InvalidArgument, "k must lie in [1, 1000]");
  }

  friend bool operator==(const Intent&, const Intent&) = default;
};

inline nlohmann::ordered_json to_json(const Intent& intent) {
  nlohmann::ordered_json j;
  j["keywords"] = intent.keywords;
  j["granularity"] = intent.granularity ? std::string(to_string(*intent.granularity)) : std::string("all");
  if (intent.time_range)
    j["time_range"] = {{"start", intent.time_range->start}, {"end", intent.time_range->end}};
  else
    j["time_range"] = nullptr;
  j["relation_type"] = intent.relation_type ? nlohmann::ordered_json(std::string(to_string(*intent.relation_type)))
                                            : nlohmann::ordered_json(nullptr);
  j["k"] = intent.k;
  return j;
}

template <typename Json>
Intent intent_from_json(const Json& j) {
  auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidArgument, "intent: " + why); };
  if (!j.is_object()) throw bad("expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    if (key != "keywords" && key != "granularity" && key != "time_range" && key != "relation_type" && key != "k")
      throw bad("unknown field \"" + key + "\"");
  }
  Intent intent;
  if (!j.contains("keywords") || !j["keywords"].is_string()) throw Error(ErrorCode::EmptyQuery, "keywords missing");
  intent.keywords = j["keywords"].template get<std::string>();
  if (j.contains("granularity") && !j["granularity"].is_null()) {
    if (!j["granularity"].is_string()) throw bad("granularity must be a string");
    const auto g = j["granularity"].template get<std::string>();
    if (g != "all") {
      intent.granularity = parse_node_kind(g);
      if (!intent.granularity) throw bad("unknown granularity \"" + g + "\"");
    }
  }
  if (j.contains("time_range") && !j["time_range"].is_null()) {
    const auto& tr = j["time_range"];
    if (!tr.is_object() || !tr.contains("start") || !tr.contains("end") || !tr["start"].is_number_integer() ||
        !tr["end"].is_number_integer() || tr.size() != 2)
      throw bad("time_range must be {\"start\": int, \"end\": int}");
    intent.time_range = TimeRange{tr["start"].template get<Timestamp>(), tr["end"].template get<Timestamp>()};
  }
  if (j.contains("relation_type") && !j["relation_type"].is_null()) {
    if (!j["relation_type"].is_string()) throw bad("relation_type must be a string");
    const auto r = j["relation_type"].template get<std::string>();
    intent.relation_type = parse_relation(r);
    if (!intent.relation_type) throw bad("unknown relation_type \"" + r + "\"");
  }
  if (j.contains("k")) {
    if (!j["k"].is_number_integer()) throw bad("k must be an integer");
    const auto k = j["k"].template get<std::int64_t>();
    if (k < 1 || k > 1000) throw bad("k must lie in [1, 1000]");
    intent.k = static_cast<int>(k);
  }
  intent.validate();
  return intent;
}

// ---------------------------------------------------------------------------
// Parsing

struct ParseOutcome {
  Intent intent;
  std::optional<std::string> warning;
};

class IntentParser {
 public:
  virtual ~IntentParser() = default;
  virtual ParseOutcome parse(std::string_view text, std::string_view reference_date) const = 0;
};

/// Marker-driven extraction. The rule table is versioned; any change to the
/// markers below must bump kRuleTableVersion.
class RuleBasedParser final : public IntentParser {
 public:
  static constexpr std::string_view kRuleTableVersion = "rules-v1";

  ParseOutcome parse(std::string_view text, std::string_view reference_date) const override {
    return {parse_intent(text, reference_date), std::nullopt};
  }

  static Intent parse_intent(std::string_view text, std::string_view reference_date) {
    if (is_blank(text)) throw Error(ErrorCode::EmptyQuery, "query text is empty");
    const CivilDate ref = parse_date(reference_date);
    const auto tokens = tokenize(text);

    Intent intent;
    std::vector<std::string> keywords;
    auto year_at = [&](std::size_t i) -> std::optional<int> {
      if (i >= tokens.size() || tokens[i].size() != 4) return std::nullopt;
      if (!std::all_of(tokens[i].begin(), tokens[i].end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
      return std::stoi(tokens[i]);
    };
    auto count_at = [&](std::size_t i) -> std::optional<int> {
      if (i >= tokens.size() || tokens[i].empty() || tokens[i].size() > 3) return std::nullopt;
      if (!std::all_of(tokens[i].begin(), tokens[i].end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
      return std::stoi(tokens[i]);
    };
    auto is = [&](std::size_t i, std::string_view w) { return i < tokens.size() && tokens[i] == w; };
    auto set_granularity = [&](NodeKind k) {
      if (!intent.granularity) intent.granularity = k;
    };
    auto set_relation = [&](RelationType r) {
      if (!intent.relation_type) intent.relation_type = r;
    };

    for (std::size_t i = 0; i < tokens.size();) {
      const auto& t = tokens[i];
      if (t == "knowledge" && (is(i + 1, "unit") || is(i + 1, "units"))) {
        set_granularity(NodeKind::knowledge_unit);
        i += 2;
      } else if (t == "paper" || t == "papers") {
        set_granularity(NodeKind::paper);
        ++i;
      } else if (t == "section" || t == "sections") {
        set_granularity(NodeKind::section);
        ++i;
      } else if (t == "since" && year_at(i + 1)) {
        if (!intent.time_range)
          intent.time_range = TimeRange{start_of_day({*year_at(i + 1), 1, 1}), end_of_day(ref)};
        i += 2;
      } else if (t == "between" && year_at(i + 1) && is(i + 2, "and") && year_at(i + 3)) {
        int a = *year_at(i + 1);
        int b = *year_at(i + 3);
        if (a > b) std::swap(a, b);
        if (!intent.time_range) intent.time_range = TimeRange{start_of_day({a, 1, 1}), end_of_day({b, 12, 31})};
        i += 4;
      } else if ((t == "last" || t == "past") && count_at(i + 1) && (is(i + 2, "years") || is(i + 2, "year"))) {
        const int n = *count_at(i + 1);
        CivilDate from{ref.year - n, ref.month, ref.day};
        if (from.month == 2 && from.day == 29 && !leap_year(from.year)) from.day = 28;
        if (!intent.time_range) intent.time_range = TimeRange{start_of_day(from), end_of_day(ref)};
        i += 3;
      } else if (t == "citing" || t == "cited" || t == "cites") {
        set_relation(RelationType::citation);
        ++i;
      } else if (t == "containing" || t == "contains") {
        set_relation(RelationType::inclusion);
        ++i;
      } else if (t == "part" && is(i + 1, "of")) {
        set_relation(RelationType::inclusion);
        i += 2;
      } else if (t == "related" && is(i + 1, "to")) {
        set_relation(RelationType::association);
        i += 2;
      } else {
        if (!filler().contains(t)) keywords.push_back(t);
        ++i;
      }
    }
    if (keywords.empty()) throw Error(ErrorCode::UnresolvableIntent, "no keywords remain in \"" + std::string(text) + "\"");
    for (std::size_t i = 0; i < keywords.size(); ++i) {
      if (i) intent.keywords += ' ';
      intent.keywords += keywords[i];
    }
    return intent;
  }

 private:
  static const std::unordered_set<std::string>& filler() {
    static const std::unordered_set<std::string> words{
        "a",    "an",   "the",  "about", "on",    "regarding", "concerning", "for",  "of",
        "in",   "with", "by",   "from",  "to",    "and",       "or",         "that", "which",
        "find", "show", "me",   "all",   "any",   "some",      "published",  "into"};
    return words;
  }
};

/// Client for POST /parse. Any transport failure or a response that is not
/// a valid Intent document falls back to the rule-based parser and reports
/// a warning.
class RemoteIntentParser final : public IntentParser {
 public:
  explicit RemoteIntentParser(std::string endpoint) : endpoint_(std::move(endpoint)) {}

  ParseOutcome parse(std::string_view text, std::string_view reference_date) const override {
    if (is_blank(text)) throw Error(ErrorCode::EmptyQuery, "query text is empty");
    nlohmann::json body{{"text", std::string(text)}, {"reference_date", std::string(reference_date)}};
    std::string why;
    httplib::Client client(endpoint_);
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
    if (auto res = client.Post("/parse", body.dump(), "application/json")) {
      if (res->status == 200) {
        try {
          return {intent_from_json(nlohmann::json::parse(res->body)), std::nullopt};
        } catch (const std::exception& e) {
          why = e.what();
        }
      } else {
        why = "HTTP " + std::to_string(res->status);
      }
    } else {
      why = httplib::to_string(res.error());
    }
    auto outcome = RuleBasedParser().parse(text, reference_date);
    outcome.warning = "external parser fell back to rules: " + why;
    return outcome;
  }

 private:
  std::string endpoint_;
};

// ---------------------------------------------------------------------------
// Filtering and search

inline bool passes_filters(const Node& node, std::optional<NodeKind> granularity,
                           const std::optional<TimeRange>& range) {
  if (granularity && node.kind != *granularity) return false;
  if (range && (node.timestamp < range->start || node.timestamp > range->end)) return false;
  return true;
}

/// Ids passing the kind and time filters, in ascending id order.
inline std::vector<std::string> filter_nodes(const LiteratureGraph& graph, std::optional<NodeKind> granularity,
                                             const std::optional<TimeRange>& range) {
  std::vector<std::string> out;
  for (const auto& n : graph.nodes())
    if (passes_filters(n, granularity, range)) out.push_back(n.id);
  std::sort(out.begin(), out.end());
  return out;
}

inline bool has_incident_relation(const LiteratureGraph& graph, NodeIndex v, RelationType rel) {
  for (const auto& inc : graph.out_edges(v))
    if (inc.relation == rel) return true;
  for (const auto& inc : graph.in_edges(v))
    if (inc.relation == rel) return true;
  return false;
}

struct ResultRelation {
  RelationType relation;
  std::string neighbor;
  bool outgoing = true;

  friend bool operator==(const ResultRelation&, const ResultRelation&) = default;
};

struct ResultEntry {
  std::string id;
  NodeKind kind = NodeKind::paper;
  std::string excerpt;
  Timestamp timestamp = 0;
  double score = 0.0;
  std::vector<ResultRelation> relations;

  friend bool operator==(const ResultEntry&, const ResultEntry&) = default;
};

struct StageTiming {
  double parse_ms = 0.0;
  double search_ms = 0.0;
  double format_ms = 0.0;

  friend bool operator==(const StageTiming&, const StageTiming&) = default;
};

struct RetrievalResult {
  Intent query;
  std::vector<ResultEntry> entries;
  StageTiming timing;

  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// First n code points of a UTF-8 string.
inline std::string utf8_prefix(std::string_view s, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t count = 0; pos < s.size() && count < n; ++count) {
    ++pos;
    while (pos < s.size() && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) ++pos;
  }
  return std::string(s.substr(0, pos));
}

inline constexpr std::size_t kExcerptChars = 280;
inline constexpr std::size_t kCandidatePool = 50;

/// Read-only view of the engine state a search needs.
struct SearchContext {
  const LiteratureGraph& graph;
  const EmbeddingProvider& embedder;
  const ProjectionModel& projection;
  const SignatureParams& signature;
  const ManifoldIndex& index;
  bool deterministic_timing = false;
};

/// Query keywords are encoded as an isolated node carrying the query time
/// (the most recent corpus time when the intent has no range), projected
/// with the relation-free base matrix, then restricted to the active dims.
inline std::vector<double> encode_query(const SearchContext& ctx, std::string_view keywords,
                                        std::optional<Timestamp> query_time) {
  const auto sem = ctx.embedder.embed(keywords);
  const auto extent = ctx.graph.time_extent();
  const double tau = query_time ? std::clamp(normalized_time(*query_time, extent), 0.0, 1.0) : 1.0;
  std::vector<double> tf(sem.dim());
  time_feature_into(tau, tf);
  std::vector<double> sig(sem.dim());
  for (std::size_t i = 0; i < sig.size(); ++i)
    sig[i] = ctx.signature.mu_sem * sem.values[i] + ctx.signature.nu_time * tf[i];
  auto full = encode_features(ctx.projection, sig, sem.values, {0, 0, 0}).embedding.values;
  return ctx.index.project(full);
}

inline std::optional<Timestamp> query_time_of(const Intent& intent) {
  if (!intent.time_range) return std::nullopt;
  return intent.time_range->start + (intent.time_range->end - intent.time_range->start) / 2;
}

/// Distance range [0, pi + alpha] mapped onto [0, 1], 1 being identical.
inline double score_of(double distance, double alpha) {
  return std::clamp(1.0 - distance / (std::numbers::pi + alpha), 0.0, 1.0);
}

inline std::vector<ResultRelation> incident_relations(const LiteratureGraph& graph, NodeIndex v) {
  std::vector<ResultRelation> out;
  for (const auto& inc : graph.out_edges(v)) out.push_back({inc.relation, graph.node_at(inc.other).id, true});
  for (const auto& inc : graph.in_edges(v)) out.push_back({inc.relation, graph.node_at(inc.other).id, false});
  return out;
}

inline RetrievalResult search(const SearchContext& ctx, const Intent& intent) {
  using Clock = std::chrono::steady_clock;
  if (is_blank(intent.keywords)) throw Error(ErrorCode::EmptyQuery, "keywords are empty");
  intent.validate();
  if (!ctx.index.built()) throw Error(ErrorCode::IndexNotBuilt, "search before index build");

  const auto t0 = Clock::now();
  const auto query = encode_query(ctx, intent.keywords, query_time_of(intent));
  const auto want = static_cast<std::size_t>(intent.k);

  auto collect = [&](std::size_t pool) {
    std::vector<std::pair<NodeIndex, double>> kept;
    for (const auto& hit : ctx.index.knn(query, query_time_of(intent), pool)) {
      const auto v = ctx.graph.index_of(hit.id);
      if (!v) continue;
      const auto& node = ctx.graph.node_at(*v);
      if (!passes_filters(node, intent.granularity, intent.time_range)) continue;
      if (intent.relation_type && !has_incident_relation(ctx.graph, *v, *intent.relation_type)) continue;
      kept.emplace_back(*v, hit.distance);
    }
    return kept;
  };
  const auto pool = std::max(kCandidatePool, want);
  auto kept = collect(pool);
  if (kept.size() < want && pool < ctx.index.size()) kept = collect(4 * pool);
  if (kept.size() > want) kept.resize(want);
  const auto t1 = Clock::now();

  RetrievalResult result;
  result.query = intent;
  for (const auto& [v, distance] : kept) {
    const auto& node = ctx.graph.node_at(v);
    result.entries.push_back({node.id, node.kind, utf8_prefix(node.content, kExcerptChars), node.timestamp,
                              score_of(distance, ctx.index.metric().alpha), incident_relations(ctx.graph, v)});
  }
  const auto t2 = Clock::now();
  if (!ctx.deterministic_timing) {
    result.timing.search_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.timing.format_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Result document

inline nlohmann::ordered_json to_json(const RetrievalResult& result) {
  nlohmann::ordered_json doc;
  doc["query"] = to_json(result.query);
  doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : result.entries) {
    nlohmann::ordered_json entry;
    entry["id"] = e.id;
    entry["kind"] = to_string(e.kind);
    entry["excerpt"] = e.excerpt;
    entry["timestamp"] = e.timestamp;
    entry["score"] = e.score;
    entry["relations"] = nlohmann::ordered_json::array();
    for (const auto& r : e.relations)
      entry["relations"].push_back(
          {{"relation", to_string(r.relation)}, {"neighbor", r.neighbor}, {"direction", r.outgoing ? "out" : "in"}});
    doc["entries"].push_back(std::move(entry));
  }
  doc["timing"] = {{"parse_ms", result.timing.parse_ms},
                   {"search_ms", result.timing.search_ms},
                   {"format_ms", result.timing.format_ms}};
  return doc;
}

/// Canonical serialization: fixed key order, compact, shortest round-trip
/// number formatting.
inline std::string to_programmable_format(const RetrievalResult& result) { return to_json(result).dump(); }

inline RetrievalResult result_from_document(std::string_view text) {
  RetrievalResult r;
  const auto doc = nlohmann::ordered_json::parse(text);
  r.query = intent_from_json(doc.at("query"));
  for (const auto& e : doc.at("entries")) {
    ResultEntry entry;
    entry.id = e.at("id").get<std::string>();
    auto kind = parse_node_kind(e.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown kind in result document");
    entry.kind = *kind;
    entry.excerpt = e.at("excerpt").get<std::string>();
    entry.timestamp = e.at("timestamp").get<Timestamp>();
    entry.score = e.at("score").get<double>();
    for (const auto& rel : e.at("relations")) {
      auto type = parse_relation(rel.at("relation").get<std::string>());
      if (!type) throw Error(ErrorCode::InvalidArgument, "unknown relation in result document");
      entry.relations.push_back({*type, rel.at("neighbor").get<std::string>(), rel.at("direction") == "out"});
    }
    r.entries.push_back(std::move(entry));
  }
  const auto& t = doc.at("timing");
  r.timing = {t.at("parse_ms").get<double>(), t.at("search_ms").get<double>(), t.at("format_ms").get<double>()};
  return r;
}

}  // namespace fusegraph
