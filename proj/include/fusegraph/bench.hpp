#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "fusegraph/embedder.hpp"
#include "fusegraph/encoding.hpp"
#include "fusegraph/engine.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph.hpp"
#include "fusegraph/graph_io.hpp"
#include "fusegraph/index.hpp"
#include "fusegraph/signature.hpp"

namespace fusegraph::bench {

// ---------------------------------------------------------------------------
// Seeded randomness

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_.next(); }
  double uniform() { return gen_.uniform(); }
  /// Uniform in [0, n). n must be positive.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_.next() % n); }
  /// Uniform in [lo, hi].
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool chance(double p) { return uniform() < p; }

  double normal() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * std::numbers::pi * v);
    return r * std::cos(2.0 * std::numbers::pi * v);
  }

  std::vector<double> unit_vector(std::size_t dim) {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal();
    normalize_to_sphere(v);
    return v;
  }

 private:
  SplitMix64 gen_;
  std::optional<double> spare_;
};

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticSpec {
  std::size_t papers = 100;
  std::size_t sections_min = 2;
  std::size_t sections_max = 4;
  std::size_t units_min = 1;
  std::size_t units_max = 3;
  std::size_t citations_per_paper = 3;
  double attachment_exponent = 1.0;
  double citation_topic_bias = 3.0;  // weight multiplier for same-topic targets
  Timestamp time_start = 1262304000;  // 2010-01-01
  Timestamp time_span = 15LL * 365 * 86400;
  std::size_t vocabulary = 1800;
  std::size_t topics = 6;
  std::size_t topic_core_words = 4;  // recurring terms per topic
  double core_share = 0.6;           // share of topic draws taken from the core terms
  std::size_t register_words = 6;    // kind-specific terms per node
  double association_prob = 0.6;
  std::uint64_t seed = 1;
  /// Output statistic: the distance threshold that best separates adjacent
  /// from random pairs, filled in by the adjacency check.
  std::optional<double> epsilon_report;

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorCode::InvalidArgument, what);
    };
    need(papers >= 1, "papers must be >= 1");
    need(sections_min >= 1 && sections_max >= sections_min, "sections range");
    need(units_min >= 1 && units_max >= units_min, "units range");
    need(topics >= 1 && vocabulary >= topics, "vocabulary must cover every topic");
    need(attachment_exponent >= 0 && citation_topic_bias > 0, "citation weights");
    need(time_span >= 0 && time_start >= 0, "time span");
    need(association_prob >= 0 && association_prob <= 1, "association_prob");
    need(core_share >= 0 && core_share <= 1, "core_share");
  }

  double expected_nodes_per_paper() const {
    const double s = 0.5 * static_cast<double>(sections_min + sections_max);
    const double u = 0.5 * static_cast<double>(units_min + units_max);
    return 1.0 + s * (1.0 + u);
  }

  /// A spec sized to produce roughly n nodes.
  static SyntheticSpec for_nodes(std::size_t n, std::uint64_t seed) {
    SyntheticSpec s;
    s.seed = seed;
    s.papers = std::max<std::size_t>(1, static_cast<std::size_t>(
                                            std::llround(static_cast<double>(n) / s.expected_nodes_per_paper())));
    return s;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["papers"] = papers;
    j["sections"] = {sections_min, sections_max};
    j["units"] = {units_min, units_max};
    j["citations_per_paper"] = citations_per_paper;
    j["attachment_exponent"] = attachment_exponent;
    j["citation_topic_bias"] = citation_topic_bias;
    j["time_start"] = time_start;
    j["time_span"] = time_span;
    j["vocabulary"] = vocabulary;
    j["topics"] = topics;
    j["topic_core_words"] = topic_core_words;
    j["core_share"] = core_share;
    j["register_words"] = register_words;
    j["association_prob"] = association_prob;
    j["seed"] = seed;
    j["epsilon_report"] = epsilon_report ? nlohmann::ordered_json(*epsilon_report) : nlohmann::ordered_json();
    return j;
  }
};

struct Corpus {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
};

/// Pronounceable, unique word for a vocabulary index.
inline std::string vocabulary_word(std::size_t i) {
  static constexpr std::string_view kOnsets = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  constexpr std::size_t kSyllables = kOnsets.size() * kVowels.size();
  std::string w;
  for (int s = 0; s < 3; ++s) {
    const std::size_t syl = i % kSyllables;
    i /= kSyllables;
    w += kOnsets[syl / kVowels.size()];
    w += kVowels[syl % kVowels.size()];
  }
  if (i > 0) w += std::to_string(i);
  return w;
}

namespace detail {

inline constexpr std::array<std::array<std::string_view, 8>, 3> kRegister{{
    {"paper", "study", "propose", "framework", "contribution", "novel", "abstract", "approach"},
    {"section", "method", "results", "discussion", "experiment", "analysis", "setup", "evaluation"},
    {"definition", "lemma", "claim", "observation", "finding", "property", "assertion", "fact"},
}};

inline std::string base36(std::size_t n) {
  static constexpr std::string_view kDigits = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string s;
  do {
    s += kDigits[n % 36];
    n /= 36;
  } while (n > 0);
  std::reverse(s.begin(), s.end());
  return s;
}

class TextMaker {
 public:
  TextMaker(const SyntheticSpec& spec, Rng& rng)
      : rng_(rng),
        per_topic_(spec.vocabulary / spec.topics),
        topics_(spec.topics),
        core_(std::min(spec.topic_core_words, per_topic_)),
        core_share_(spec.core_share) {}

  /// A recurring core term of the topic, or a Zipf-like draw from the rest
  /// of the topic's slice of the vocabulary.
  std::string topic_word(std::size_t topic) {
    if (core_ > 0 && rng_.chance(core_share_)) return vocabulary_word(topic * per_topic_ + rng_.below(core_));
    const double u = rng_.uniform();
    const auto offset = static_cast<std::size_t>(u * u * static_cast<double>(per_topic_));
    return vocabulary_word(topic * per_topic_ + std::min(offset, per_topic_ - 1));
  }

  std::string register_word(NodeKind kind) {
    const auto& words = kRegister[static_cast<std::size_t>(kind)];
    return std::string(words[rng_.below(words.size())]);
  }

  std::size_t random_topic() { return rng_.below(topics_); }

 private:
  Rng& rng_;
  std::size_t per_topic_;
  std::size_t topics_;
  std::size_t core_;
  double core_share_;
};

inline void append_word(std::string& text, std::string_view word) {
  if (!text.empty()) text += ' ';
  text += word;
}

}  // namespace detail

/// Hierarchical corpus: papers with topic-mixture content, sections and
/// knowledge units inheriting their paper's topic with noise, inclusion edges
/// down the hierarchy, preferential-attachment citations between papers and
/// association edges between same-topic knowledge units. Deterministic in
/// the spec.
inline Corpus generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  detail::TextMaker text(spec, rng);
  Corpus corpus;

  std::vector<std::size_t> paper_topic(spec.papers);
  std::vector<double> attachment(spec.papers, 1.0);  // (in-degree + 1)^exponent
  std::vector<std::size_t> in_degree(spec.papers, 0);
  std::vector<std::vector<std::size_t>> units_by_topic(spec.topics);  // node positions
  std::vector<std::size_t> unit_paper;  // by node position, only meaningful for units
  std::vector<double> weights;

  for (std::size_t p = 0; p < spec.papers; ++p) {
    const std::size_t t1 = text.random_topic();
    const std::size_t t2 = text.random_topic();
    paper_topic[p] = t1;
    const Timestamp ts =
        spec.time_start + static_cast<Timestamp>(static_cast<double>(spec.time_span) * static_cast<double>(p) /
                                                 static_cast<double>(std::max<std::size_t>(1, spec.papers - 1)));
    std::array<std::string, 3> keys;
    for (std::size_t k = 0; k < keys.size(); ++k) keys[k] = "k" + detail::base36(p) + "x" + std::to_string(k);

    const std::string paper_id = "P" + std::to_string(p);
    std::string content;
    for (std::size_t i = 0; i < spec.register_words; ++i)
      detail::append_word(content, text.register_word(NodeKind::paper));
    for (const auto& k : keys) detail::append_word(content, k);
    for (int i = 0; i < 24; ++i) detail::append_word(content, text.topic_word(i % 4 == 3 ? t2 : t1));
    corpus.nodes.push_back({paper_id, NodeKind::paper, std::move(content), ts});

    // Citations to earlier papers, weighted by attachment and topic.
    const std::size_t cites = std::min(p, spec.citations_per_paper);
    if (cites > 0) {
      weights.assign(p, 0.0);
      double total = 0.0;
      for (std::size_t q = 0; q < p; ++q) {
        weights[q] = attachment[q] * (paper_topic[q] == t1 ? spec.citation_topic_bias : 1.0);
        total += weights[q];
      }
      std::vector<std::size_t> chosen;
      while (chosen.size() < cites) {
        double r = rng.uniform() * total;
        std::size_t q = 0;
        while (q + 1 < p && r >= weights[q]) r -= weights[q++];
        while (q > 0 && weights[q] == 0.0) --q;  // rounding ran past the live mass
        if (weights[q] == 0.0) break;
        chosen.push_back(q);
        total -= weights[q];
        weights[q] = 0.0;
        if (total <= 0.0) break;
      }
      for (auto q : chosen) {
        corpus.edges.push_back({paper_id, "P" + std::to_string(q), RelationType::citation});
        ++in_degree[q];
        attachment[q] = std::pow(static_cast<double>(in_degree[q] + 1), spec.attachment_exponent);
      }
    }

    const std::size_t sections = rng.between(spec.sections_min, spec.sections_max);
    for (std::size_t s = 0; s < sections; ++s) {
      const std::string section_id = paper_id + ".S" + std::to_string(s);
      std::string sc;
      for (std::size_t i = 0; i < spec.register_words; ++i)
        detail::append_word(sc, text.register_word(NodeKind::section));
      detail::append_word(sc, keys[s % keys.size()]);
      detail::append_word(sc, keys[(s + 1) % keys.size()]);
      for (int i = 0; i < 14; ++i)
        detail::append_word(sc, text.topic_word(i % 7 == 6 ? text.random_topic() : t1));
      corpus.nodes.push_back({section_id, NodeKind::section, std::move(sc), ts});
      corpus.edges.push_back({paper_id, section_id, RelationType::inclusion});

      const std::size_t units = rng.between(spec.units_min, spec.units_max);
      for (std::size_t u = 0; u < units; ++u) {
        const std::string unit_id = section_id + ".U" + std::to_string(u);
        std::string uc;
        for (std::size_t i = 0; i < spec.register_words; ++i)
          detail::append_word(uc, text.register_word(NodeKind::knowledge_unit));
        detail::append_word(uc, keys[(s + u) % keys.size()]);
        for (int i = 0; i < 10; ++i)
          detail::append_word(uc, text.topic_word(i % 5 == 4 ? text.random_topic() : t1));
        const std::size_t pos = corpus.nodes.size();
        corpus.nodes.push_back({unit_id, NodeKind::knowledge_unit, std::move(uc), ts});
        corpus.edges.push_back({section_id, unit_id, RelationType::inclusion});

        // Association with an earlier same-topic unit from another paper.
        auto& peers = units_by_topic[t1];
        if (!peers.empty() && rng.chance(spec.association_prob)) {
          const std::size_t window = std::min<std::size_t>(peers.size(), 500);
          const std::size_t target = peers[peers.size() - 1 - rng.below(window)];
          if (unit_paper[target] != p)
            corpus.edges.push_back({unit_id, corpus.nodes[target].id, RelationType::association});
        }
        unit_paper.resize(pos + 1, p);
        unit_paper[pos] = p;
        peers.push_back(pos);
      }
    }
  }
  return corpus;
}

/// Flat random graph with roughly n * avg_degree / 2 edges (avg_degree is the
/// mean undirected degree) and short topical content.
inline Corpus random_graph(std::size_t n, double avg_degree, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "random_graph needs n >= 2");
  SyntheticSpec spec;
  spec.seed = seed;
  Rng rng(seed);
  detail::TextMaker text(spec, rng);
  Corpus corpus;
  corpus.nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind = kAllNodeKinds[rng.below(3)];
    const auto topic = text.random_topic();
    std::string content;
    detail::append_word(content, text.register_word(kind));
    for (int w = 0; w < 8; ++w) detail::append_word(content, text.topic_word(topic));
    const auto ts = spec.time_start + static_cast<Timestamp>(rng.below(static_cast<std::size_t>(spec.time_span)));
    corpus.nodes.push_back({"n" + std::to_string(i), kind, std::move(content), ts});
  }
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n) * avg_degree / 2.0));
  std::unordered_set<std::uint64_t> seen;
  corpus.edges.reserve(target);
  while (corpus.edges.size() < target) {
    const auto a = rng.below(n);
    const auto b = rng.below(n);
    if (a == b) continue;
    const auto key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
    if (!seen.insert(key).second) continue;
    corpus.edges.push_back({corpus.nodes[a].id, corpus.nodes[b].id, kAllRelations[rng.below(3)]});
  }
  return corpus;
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream nodes(dir / "nodes.jsonl");
  std::ofstream edges(dir / "edges.jsonl");
  if (!nodes || !edges) throw Error(ErrorCode::InvalidArgument, "cannot write corpus to " + dir.string());
  write_nodes_jsonl(nodes, corpus.nodes);
  write_edges_jsonl(edges, corpus.edges);
}

// ---------------------------------------------------------------------------
// Statistics

inline double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  if (xs.size() % 2 == 1) return xs[mid];
  const double hi = xs[mid];
  const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto pos = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size()))) - 1;
  return xs[std::min(pos, xs.size() - 1)];
}

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "pearson needs paired samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Probability that a positive scores below a negative (ties count half):
/// the ROC-AUC of "small distance means positive".
inline double roc_auc_lower_is_positive(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw Error(ErrorCode::InvalidArgument, "AUC needs both classes");
  std::vector<double> all(positives.begin(), positives.end());
  all.insert(all.end(), negatives.begin(), negatives.end());
  const auto ranks = average_ranks(all);
  double neg_rank_sum = 0.0;
  for (std::size_t i = positives.size(); i < all.size(); ++i) neg_rank_sum += ranks[i];
  const double nn = static_cast<double>(negatives.size());
  const double np = static_cast<double>(positives.size());
  const double u = neg_rank_sum - nn * (nn + 1.0) / 2.0;
  return u / (np * nn);
}

/// Threshold eps maximizing TPR - FPR for the rule "distance <= eps means
/// positive" (Youden's J).
inline double youden_threshold(std::span<const double> positives, std::span<const double> negatives) {
  std::vector<std::pair<double, bool>> all;
  for (double d : positives) all.emplace_back(d, true);
  for (double d : negatives) all.emplace_back(d, false);
  std::sort(all.begin(), all.end());
  double best_j = -1.0;
  double best_eps = all.empty() ? 0.0 : all.front().first;
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (all[i].second ? tp : fp) += 1.0;
    if (i + 1 < all.size() && all[i + 1].first == all[i].first) continue;
    const double j = tp / static_cast<double>(positives.size()) - fp / static_cast<double>(negatives.size());
    if (j > best_j) {
      best_j = j;
      best_eps = all[i].first;
    }
  }
  return best_eps;
}

/// Multinomial logistic regression trained by full-batch gradient descent
/// on standardized features; returns held-out accuracy on a shuffled split.
inline double linear_classifier_accuracy(const std::vector<std::vector<double>>& features,
                                         const std::vector<std::size_t>& labels, std::size_t classes,
                                         double train_fraction, std::uint64_t seed, int epochs = 400,
                                         double learning_rate = 0.5, double l2 = 1e-4) {
  const std::size_t n = features.size();
  if (n < 2 || labels.size() != n) throw Error(ErrorCode::InvalidArgument, "classifier needs labeled samples");
  const std::size_t dim = features.front().size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n))), 1, n - 1);

  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (std::size_t i = 0; i < n_train; ++i)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += features[order[i]][d];
  for (auto& m : mean) m /= static_cast<double>(n_train);
  for (std::size_t i = 0; i < n_train; ++i)
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = features[order[i]][d] - mean[d];
      scale[d] += c * c;
    }
  for (auto& s : scale) s = std::sqrt(s / static_cast<double>(n_train)) + 1e-12;
  auto x = [&](std::size_t sample, std::size_t d) {
    return d == dim ? 1.0 : (features[sample][d] - mean[d]) / scale[d];
  };

  const std::size_t width = dim + 1;
  std::vector<double> w(classes * width, 0.0), grad(classes * width), logits(classes);
  auto predict = [&](std::size_t sample) {
    for (std::size_t c = 0; c < classes; ++c) {
      double z = 0.0;
      for (std::size_t d = 0; d < width; ++d) z += w[c * width + d] * x(sample, d);
      logits[c] = z;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& z : logits) sum += (z = std::exp(z - mx));
    for (auto& z : logits) z /= sum;
  };
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n_train; ++i) {
      const auto s = order[i];
      predict(s);
      for (std::size_t c = 0; c < classes; ++c) {
        const double err = logits[c] - (labels[s] == c ? 1.0 : 0.0);
        for (std::size_t d = 0; d < width; ++d) grad[c * width + d] += err * x(s, d);
      }
    }
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] -= learning_rate * (grad[k] / static_cast<double>(n_train) + l2 * w[k]);
  }
  std::size_t correct = 0;
  for (std::size_t i = n_train; i < n; ++i) {
    const auto s = order[i];
    predict(s);
    const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == labels[s]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n - n_train);
}

// ---------------------------------------------------------------------------
// Oracles

/// Exhaustive k nearest neighbours under the temporal metric, ties broken by
/// id.
inline std::vector<SearchHit> exhaustive_knn(std::span<const IndexEntry> entries, std::span<const double> query,
                                             std::optional<Timestamp> query_time, std::size_t k,
                                             const TemporalMetricParams& metric) {
  std::vector<SearchHit> all;
  all.reserve(entries.size());
  for (const auto& e : entries) {
    const double d = query_time ? temporal_metric(query, *query_time, e.embedding, e.timestamp, metric)
                                : base_distance(query, e.embedding);
    all.push_back({e.id, d});
  }
  std::sort(all.begin(), all.end(), hit_less);
  all.resize(std::min(k, all.size()));
  return all;
}

/// Breadth-first K-hop ball over undirected adjacency, written against a
/// dense distance array rather than the graph's own traversal.
inline std::vector<NodeIndex> bfs_ball_oracle(const LiteratureGraph& graph, std::span<const NodeIndex> seeds,
                                              int max_hops) {
  std::vector<int> dist(graph.node_count(), -1);
  std::vector<NodeIndex> queue;
  for (auto s : seeds)
    if (dist[s] < 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto v = queue[head];
    if (dist[v] == max_hops) continue;
    for (auto u : graph.undirected_neighbors(v))
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
  }
  std::sort(queue.begin(), queue.end());
  return queue;
}

// ---------------------------------------------------------------------------
// Criteria

struct Criterion {
  std::string name;
  std::string target;
  nlohmann::ordered_json measured;
  bool pass = false;

  nlohmann::ordered_json to_json() const {
    return {{"name", name}, {"target", target}, {"measured", measured}, {"pass", pass}};
  }
};

inline nlohmann::ordered_json environment() {
  nlohmann::ordered_json j;
  j["compiler"] = __VERSION__;
  j["cplusplus"] = __cplusplus;
#ifdef NDEBUG
  j["assertions"] = false;
#else
  j["assertions"] = true;
#endif
  j["hardware_threads"] = std::thread::hardware_concurrency();
  return j;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }
  double micros() const { return seconds() * 1e6; }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Engine config used by the suites: library defaults with zeroed timing so
/// result documents are reproducible.
inline EngineConfig bench_config() {
  EngineConfig c;
  c.deterministic_timing = true;
  return c;
}

inline Engine build_engine(const Corpus& corpus, EngineConfig config = bench_config()) {
  Engine engine(std::move(config));
  engine.ingest(corpus.nodes, corpus.edges);
  return engine;
}

/// Graph, semantic vectors and signatures only: the state the incremental
/// update path works on.
struct SignatureState {
  LiteratureGraph graph;
  HashingEmbedder embedder;
  std::vector<SemanticVector> embeddings;
  SignatureParams params;
  SignatureTable table;

  SignatureState(const Corpus& corpus, SignatureParams p = {}, std::size_t dim = 64)
      : graph(build_graph(corpus.nodes, corpus.edges)), embedder(dim), params(p) {
    std::vector<std::string> texts;
    texts.reserve(corpus.nodes.size());
    for (const auto& n : graph.nodes()) texts.push_back(n.content);
    embeddings = embedder.batch_embed(texts);
    table.compute_all(computer());
  }

  SignatureComputer computer() const { return SignatureComputer(graph, embeddings, params, embedder.dim()); }

  /// Replaces the content of v and re-embeds it (not timed by callers that
  /// only measure the locality pass).
  void replace_content(NodeIndex v, std::string content) {
    Node node = graph.node_at(v);
    node.content = std::move(content);
    embeddings[v] = embedder.embed(node.content);
    graph.replace_node(std::move(node));
  }
};

inline std::string fresh_content(Rng& rng, std::size_t salt) {
  std::string s = "revision r" + std::to_string(salt);
  for (int i = 0; i < 8; ++i) detail::append_word(s, vocabulary_word(rng.below(4000)));
  return s;
}

/// Single-node updates: the recomputed set must equal an independent BFS
/// ball, rows outside it must be untouched, and the final table must equal a
/// from-scratch recomputation.
inline Criterion update_locality(std::size_t n = 10000, std::size_t updates = 100, std::uint64_t seed = 1) {
  Stopwatch clock;
  SignatureState state(generate(SyntheticSpec::for_nodes(n, seed)));
  Rng rng(seed ^ 0x5eedULL);
  const int K = state.params.K;
  std::size_t exact = 0;
  std::size_t preserved = 0;
  for (std::size_t u = 0; u < updates; ++u) {
    const auto v = static_cast<NodeIndex>(rng.below(state.graph.node_count()));
    state.replace_content(v, fresh_content(rng, u));
    const std::vector<HybridSignature> before(state.table.rows().begin(), state.table.rows().end());
    const NodeIndex seed_node = v;
    const auto touched = state.table.incremental_update(state.computer(), std::span<const NodeIndex>(&seed_node, 1));
    const auto oracle = bfs_ball_oracle(state.graph, std::span<const NodeIndex>(&seed_node, 1), K);
    if (touched == oracle) ++exact;
    bool untouched_same = true;
    for (NodeIndex w = 0; w < state.graph.node_count() && untouched_same; ++w) {
      if (std::binary_search(oracle.begin(), oracle.end(), w)) continue;
      const auto& a = before[w];
      const auto& b = state.table.at(w);
      untouched_same = a.values == b.values && a.version == b.version;
    }
    if (untouched_same) ++preserved;
  }
  SignatureTable fresh;
  fresh.compute_all(state.computer());
  bool matches_full = true;
  for (NodeIndex w = 0; w < state.graph.node_count() && matches_full; ++w)
    matches_full = fresh.at(w).values == state.table.at(w).values;
  const double secs = clock.seconds();

  Criterion c;
  c.name = "update_locality";
  c.target = "recomputed set == BFS K-ball oracle for 100/100 updates at n=10k, K=2; < 60 s";
  c.measured = {{"n", state.graph.node_count()}, {"K", K},
                {"updates", updates},           {"exact_matches", exact},
                {"untouched_rows_preserved", preserved}, {"matches_full_recompute", matches_full},
                {"seconds", secs}};
  c.pass = exact == updates && preserved == updates && matches_full && secs < 60.0;
  return c;
}

struct LatencySample {
  std::size_t n = 0;
  double median_us = 0;
  double p95_us = 0;
  double mean_recomputed = 0;
};

/// Per-node incremental update latency (re-embed plus locality recompute) on
/// a random graph of mean degree avg_degree.
inline LatencySample measure_update_latency(std::size_t n, double avg_degree, std::size_t samples,
                                            std::uint64_t seed) {
  SignatureState state(random_graph(n, avg_degree, seed));
  Rng rng(seed ^ 0xa11ceULL);
  std::vector<double> micros;
  micros.reserve(samples);
  double recomputed = 0;
  const std::size_t warmup = std::min<std::size_t>(samples / 10 + 1, 100);
  for (std::size_t s = 0; s < samples + warmup; ++s) {
    const auto v = static_cast<NodeIndex>(rng.below(state.graph.node_count()));
    Node node = state.graph.node_at(v);
    node.content = fresh_content(rng, s);
    Stopwatch clock;
    state.embeddings[v] = state.embedder.embed(node.content);
    state.graph.replace_node(std::move(node));
    const auto touched = state.table.incremental_update(state.computer(), std::span<const NodeIndex>(&v, 1));
    const double us = clock.micros();
    if (s < warmup) continue;
    micros.push_back(us);
    recomputed += static_cast<double>(touched.size());
  }
  return {n, median(micros), quantile(micros, 0.95), recomputed / static_cast<double>(samples)};
}

inline Criterion update_scaling(std::size_t small_n = 10000, std::size_t large_n = 100000, double avg_degree = 5.0,
                                std::size_t samples = 2000, std::uint64_t seed = 1,
                                std::vector<std::size_t> extra_sizes = {}) {
  Stopwatch clock;
  std::vector<std::size_t> sizes = std::move(extra_sizes);
  sizes.push_back(small_n);
  sizes.push_back(large_n);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  double small_median = 0, large_median = 0;
  for (auto n : sizes) {
    const auto s = measure_update_latency(n, avg_degree, samples, seed);
    table.push_back({{"n", s.n}, {"median_us", s.median_us}, {"p95_us", s.p95_us},
                     {"mean_recomputed", s.mean_recomputed}});
    if (n == small_n) small_median = s.median_us;
    if (n == large_n) large_median = s.median_us;
  }
  const double growth = small_median > 0 ? large_median / small_median : 0.0;
  const double secs = clock.seconds();
  Criterion c;
  c.name = "update_scaling";
  c.target = "median per-node update < 1000 us at n=100k (degree 5, K=2); growth 10k->100k < 1.5x; < 600 s";
  c.measured = {{"latency", table}, {"growth", growth}, {"seconds", secs}};
  c.pass = large_median < 1000.0 && growth < 1.5 && secs < 600.0;
  return c;
}

// Recall -------------------------------------------------------------------

struct RecallQuery {
  std::vector<double> vector;
  std::optional<Timestamp> time;
};

/// Built engine plus queries drawn near stored vectors (jittered copies,
/// half of them carrying the source node's timestamp).
struct RecallFixture {
  Engine engine;
  std::vector<IndexEntry> entries;
  std::vector<RecallQuery> queries;
  double build_seconds = 0;

  static RecallFixture make(std::size_t n, std::size_t query_count, std::uint64_t seed, double jitter = 0.03) {
    Stopwatch clock;
    RecallFixture f{build_engine(generate(SyntheticSpec::for_nodes(n, seed))), {}, {}, 0};
    f.build_seconds = clock.seconds();
    f.entries = f.engine.index().entries();
    std::sort(f.entries.begin(), f.entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    Rng rng(seed ^ 0x9e77ULL);
    for (std::size_t q = 0; q < query_count; ++q) {
      const auto& src = f.entries[rng.below(f.entries.size())];
      std::vector<double> v = src.embedding;
      for (auto& x : v) x += jitter * rng.normal();
      normalize_to_sphere(v);
      f.queries.push_back({std::move(v), q % 2 == 0 ? std::optional<Timestamp>(src.timestamp) : std::nullopt});
    }
    return f;
  }
};

inline constexpr std::size_t kRecallK = 10;

inline Criterion exact_recall(const RecallFixture& f) {
  Stopwatch clock;
  const auto& index = f.engine.index();
  std::size_t exact = 0;
  for (const auto& q : f.queries) {
    const auto got = index.knn(q.vector, q.time, kRecallK, index.cluster_count());
    const auto want = exhaustive_knn(f.entries, q.vector, q.time, kRecallK, index.metric());
    if (got == want) ++exact;
  }
  const double secs = clock.seconds();
  Criterion c;
  c.name = "exact_recall";
  c.target = "probe_count = C: knn == brute force top-10 for 1000/1000 queries at n=10k; < 300 s";
  c.measured = {{"n", index.size()},       {"clusters", index.cluster_count()}, {"queries", f.queries.size()},
                {"exact_matches", exact}, {"seconds", secs + f.build_seconds}};
  c.pass = exact == f.queries.size() && secs + f.build_seconds < 300.0;
  return c;
}

inline double overlap_at_k(const std::vector<SearchHit>& got, const std::vector<SearchHit>& want) {
  if (want.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& w : want)
    for (const auto& g : got)
      if (g.id == w.id) {
        ++hit;
        break;
      }
  return static_cast<double>(hit) / static_cast<double>(want.size());
}

inline Criterion approx_recall(const RecallFixture& f) {
  Stopwatch clock;
  const auto& index = f.engine.index();
  const auto probes =
      static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(index.cluster_count())));
  double total = 0.0;
  for (const auto& q : f.queries) {
    const auto got = index.knn(q.vector, q.time, kRecallK, probes);
    const auto want = exhaustive_knn(f.entries, q.vector, q.time, kRecallK, index.metric());
    total += overlap_at_k(got, want);
  }
  const double recall = total / static_cast<double>(f.queries.size());
  const double secs = clock.seconds();
  Criterion c;
  c.name = "approx_recall";
  c.target = "probe_count = ceil(0.1 C): mean recall@10 vs oracle >= 0.90 over 1000 queries at n=10k; < 300 s";
  c.measured = {{"n", index.size()},   {"clusters", index.cluster_count()}, {"probes", probes},
                {"recall_at_10", recall}, {"seconds", secs + f.build_seconds}};
  c.pass = recall >= 0.90 && secs + f.build_seconds < 300.0;
  return c;
}

// Storage ------------------------------------------------------------------

inline Criterion storage_linearity(std::size_t small_n = 10000, std::size_t large_n = 100000,
                                   std::uint64_t seed = 1) {
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  std::array<double, 2> per_node{};
  std::size_t slot = 0;
  for (auto n : {small_n, large_n}) {
    const auto engine = build_engine(generate(SyntheticSpec::for_nodes(n, seed)));
    const auto bytes = engine.to_snapshot().size();
    per_node[slot++] = static_cast<double>(bytes) / static_cast<double>(engine.graph().node_count());
    table.push_back({{"n", engine.graph().node_count()}, {"bytes", bytes}, {"bytes_per_node", per_node[slot - 1]}});
  }
  const double diff = std::abs(per_node[1] - per_node[0]) / std::min(per_node[0], per_node[1]);
  Criterion c;
  c.name = "storage_linearity";
  c.target = "snapshot bytes/node differ by < 10% between n=10k and n=100k";
  c.measured = {{"snapshots", table}, {"relative_difference", diff}};
  c.pass = diff < 0.10;
  return c;
}

// Metric -------------------------------------------------------------------

inline Criterion metric_properties(std::size_t triples = 100000, std::uint64_t seed = 1, std::size_t dim = 32) {
  Rng rng(seed);
  const TemporalMetricParams p{0.25, 5e8};
  const TemporalMetricParams geodesic_only{0.0, 5e8};
  auto near = [&](const std::vector<double>& base, double scale) {
    auto v = base;
    for (auto& x : v) x += scale * rng.normal();
    normalize_to_sphere(v);
    return v;
  };
  std::size_t asymmetric = 0;
  double worst_violation = 0.0;
  double worst_reduction = 0.0;
  for (std::size_t t = 0; t < triples; ++t) {
    // A third of the triples are tight clusters, where angle accuracy matters.
    auto a = rng.unit_vector(dim);
    std::vector<double> b, c;
    switch (t % 3) {
      case 0: b = rng.unit_vector(dim); c = rng.unit_vector(dim); break;
      case 1: b = near(a, 1e-2); c = near(a, 1e-2); break;
      default: b = near(a, 1e-6); c = near(b, 1e-6); break;
    }
    const Timestamp ta = static_cast<Timestamp>(rng.below(1'000'000'000));
    const Timestamp tb = static_cast<Timestamp>(rng.below(1'000'000'000));
    const Timestamp tc = static_cast<Timestamp>(rng.below(1'000'000'000));
    const double ab = temporal_metric(a, ta, b, tb, p);
    const double bc = temporal_metric(b, tb, c, tc, p);
    const double ac = temporal_metric(a, ta, c, tc, p);
    if (ab != temporal_metric(b, tb, a, ta, p)) ++asymmetric;
    if (bc != temporal_metric(c, tc, b, tb, p)) ++asymmetric;
    if (ac != temporal_metric(c, tc, a, ta, p)) ++asymmetric;
    worst_violation = std::max({worst_violation, ac - (ab + bc), ab - (ac + bc), bc - (ab + ac)});
    if (t % 3 == 0) {
      // Independent directions keep acos well conditioned for the reference.
      const double reference = std::acos(std::clamp(dot(a, b), -1.0, 1.0));
      worst_reduction = std::max(worst_reduction, std::abs(temporal_metric(a, ta, b, tb, geodesic_only) - reference));
    }
  }
  Criterion c;
  c.name = "metric_properties";
  c.target = "1e5 triples: symmetry exact; triangle violation <= 1e-9; alpha=0 equals geodesic within 1e-12";
  c.measured = {{"triples", triples},
                {"asymmetric_pairs", asymmetric},
                {"max_triangle_violation", worst_violation},
                {"max_alpha0_deviation", worst_reduction}};
  c.pass = asymmetric == 0 && worst_violation <= 1e-9 && worst_reduction <= 1e-12;
  return c;
}

// Statistical checks ---------------------------------------------------------

struct SeparationResult {
  double auc = 0;
  double epsilon = 0;
  std::size_t adjacent_pairs = 0;
  std::size_t random_pairs = 0;
};

/// Temporal-metric distances of adjacent pairs versus random non-adjacent
/// pairs of the same engine.
inline SeparationResult adjacency_separation(const Engine& engine, std::uint64_t seed,
                                             std::size_t max_pairs = 20000) {
  const auto& graph = engine.graph();
  const auto enc = engine.encodings();
  const auto& metric = engine.index().metric();
  auto distance = [&](NodeIndex a, NodeIndex b) {
    return temporal_metric(enc[a].values, graph.node_at(a).timestamp, enc[b].values, graph.node_at(b).timestamp,
                           metric);
  };
  Rng rng(seed ^ 0xad1ULL);
  const auto edges = graph.edges();
  std::vector<double> adjacent, random;
  for (std::size_t i = 0; i < edges.size() && adjacent.size() < max_pairs; ++i) {
    const auto& e = edges[edges.size() <= max_pairs ? i : rng.below(edges.size())];
    adjacent.push_back(distance(graph.require(e.src), graph.require(e.dst)));
  }
  std::unordered_set<std::uint64_t> linked;
  for (const auto& e : edges) {
    const auto a = graph.require(e.src), b = graph.require(e.dst);
    linked.insert((static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b));
  }
  while (random.size() < adjacent.size()) {
    const auto a = static_cast<NodeIndex>(rng.below(graph.node_count()));
    const auto b = static_cast<NodeIndex>(rng.below(graph.node_count()));
    if (a == b || linked.contains((static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b))) continue;
    random.push_back(distance(a, b));
  }
  return {roc_auc_lower_is_positive(adjacent, random), youden_threshold(adjacent, random), adjacent.size(),
          random.size()};
}

inline Criterion adjacency_auc(std::size_t n = 5000, std::vector<std::uint64_t> seeds = {1, 2, 3},
                               SyntheticSpec* report_into = nullptr) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  bool pass = !seeds.empty();
  for (auto s : seeds) {
    const auto engine = build_engine(generate(SyntheticSpec::for_nodes(n, s)));
    const auto r = adjacency_separation(engine, s);
    runs.push_back({{"seed", s},
                    {"n", engine.graph().node_count()},
                    {"auc", r.auc},
                    {"epsilon", r.epsilon},
                    {"pairs", r.adjacent_pairs}});
    if (report_into && s == seeds.front()) report_into->epsilon_report = r.epsilon;
    pass = pass && r.auc >= 0.8;
  }
  Criterion c;
  c.name = "adjacency_auc";
  c.target = "adjacent vs random pair distance ROC-AUC >= 0.8 on 3 seeded corpora of n=5k";
  c.measured = {{"runs", runs}};
  c.pass = pass;
  return c;
}

inline Criterion diffusion_correlation(std::size_t n = 5000, std::size_t pairs = 10000, std::uint64_t seed = 1) {
  SignatureState state(generate(SyntheticSpec::for_nodes(n, seed)));
  Rng rng(seed ^ 0xc07ULL);
  std::vector<double> sig_cos, sem_cos;
  sig_cos.reserve(pairs);
  sem_cos.reserve(pairs);
  while (sig_cos.size() < pairs) {
    const auto a = static_cast<NodeIndex>(rng.below(state.graph.node_count()));
    const auto b = static_cast<NodeIndex>(rng.below(state.graph.node_count()));
    if (a == b) continue;
    sig_cos.push_back(cosine_similarity(state.table.at(a).values, state.table.at(b).values));
    sem_cos.push_back(cosine_similarity(state.embeddings[a], state.embeddings[b]));
  }
  const double rho = spearman(sig_cos, sem_cos);
  Criterion c;
  c.name = "diffusion_correlation";
  c.target = "Spearman(signature cosine, semantic cosine) >= 0.3 over 1e4 random pairs, default params";
  c.measured = {{"n", state.graph.node_count()}, {"pairs", pairs}, {"spearman", rho}};
  c.pass = rho >= 0.3;
  return c;
}

inline Criterion kind_separability(std::size_t n = 5000, std::vector<std::uint64_t> seeds = {1, 2, 3}) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  bool pass = !seeds.empty();
  for (auto s : seeds) {
    const auto engine = build_engine(generate(SyntheticSpec::for_nodes(n, s)));
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> y;
    for (NodeIndex v = 0; v < engine.graph().node_count(); ++v) {
      x.push_back(engine.encodings()[v].values);
      y.push_back(static_cast<std::size_t>(engine.graph().node_at(v).kind));
    }
    const double acc = linear_classifier_accuracy(x, y, 3, 0.7, s);
    runs.push_back({{"seed", s}, {"n", x.size()}, {"held_out_accuracy", acc}});
    pass = pass && acc >= 0.8;
  }
  Criterion c;
  c.name = "kind_separability";
  c.target = "linear classifier on e(v) predicts node kind with held-out accuracy >= 0.8 on 3 seeds";
  c.measured = {{"runs", runs}};
  c.pass = pass;
  return c;
}

// Encoding -----------------------------------------------------------------

/// Two nodes with identical content, timestamp and neighbour set, linked to
/// the shared neighbour by different relation types.
inline double relation_twin_distance(const EngineConfig& config, RelationType ra, RelationType rb,
                                     std::string_view content) {
  std::vector<Node> nodes{{"hub", NodeKind::paper, "hub paper on manifold retrieval", 1000},
                          {"twin_a", NodeKind::section, std::string(content), 2000},
                          {"twin_b", NodeKind::section, std::string(content), 2000}};
  std::vector<Edge> edges{{"twin_a", "hub", ra}, {"twin_b", "hub", rb}};
  Engine engine(config);
  engine.ingest(nodes, edges);
  const auto& g = engine.graph();
  return base_distance(engine.encodings()[g.require("twin_a")].values, engine.encodings()[g.require("twin_b")].values);
}

inline Criterion encoding_invariants(std::size_t n = 2000, std::uint64_t seed = 1) {
  // (a) unit norm over a corpus, its updates, and adversarial direct inputs.
  auto engine = build_engine(generate(SyntheticSpec::for_nodes(n, seed)));
  Rng rng(seed ^ 0xe4cULL);
  for (std::size_t u = 0; u < 50; ++u) {
    Node node = engine.graph().node_at(static_cast<NodeIndex>(rng.below(engine.graph().node_count())));
    node.content = fresh_content(rng, u);
    engine.update(std::span<const Node>(&node, 1), {});
  }
  std::size_t emitted = 0, unit = 0;
  auto check = [&](std::span<const double> v) {
    ++emitted;
    if (std::abs(l2_norm(v) - 1.0) <= 1e-6) ++unit;
  };
  for (const auto& e : engine.encodings()) check(e.values);
  const auto& model = engine.projection();
  for (std::size_t t = 0; t < 1000; ++t) {
    std::vector<double> sig(model.input_dim), sem(model.input_dim);
    const double scale = t % 4 == 0 ? 1e-200 : (t % 4 == 1 ? 1e150 : 1.0);
    if (t % 10 != 9)
      for (std::size_t i = 0; i < sig.size(); ++i) {
        sig[i] = scale * rng.normal();
        sem[i] = scale * rng.normal();
      }
    const std::array<std::size_t, 3> counts{rng.below(4), rng.below(4), rng.below(4)};
    check(encode_features(model, sig, sem, counts).embedding.values);
  }

  // (b) sigma = 0 gate is the exact midpoint.
  double worst_midpoint = 0.0;
  for (std::size_t t = 0; t < 1000; ++t) {
    std::vector<double> s(64), v(64);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = rng.normal();
      v[i] = rng.normal();
    }
    const auto fused = gate_fuse(s, v, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i)
      worst_midpoint = std::max(worst_midpoint, std::abs(fused[i] - 0.5 * (s[i] + v[i])));
  }

  // (c) relation twins land at distinct points.
  const std::array<std::pair<RelationType, RelationType>, 3> twins{
      {{RelationType::citation, RelationType::association},
       {RelationType::citation, RelationType::inclusion},
       {RelationType::inclusion, RelationType::association}}};
  double min_twin = std::numeric_limits<double>::infinity();
  for (const auto& [ra, rb] : twins)
    for (std::string_view content : {"sparse graph neural operators", "temporal knowledge units", "x"})
      min_twin = std::min(min_twin, relation_twin_distance(bench_config(), ra, rb, content));

  Criterion c;
  c.name = "encoding_invariants";
  c.target = "100% of embeddings unit-norm within 1e-6; sigma=0 gate midpoint within 1e-12; relation twins > 1e-6 apart";
  c.measured = {{"emitted", emitted},
                {"unit_norm", unit},
                {"max_midpoint_error", worst_midpoint},
                {"min_twin_distance", min_twin}};
  c.pass = unit == emitted && worst_midpoint <= 1e-12 && min_twin > 1e-6;
  return c;
}

// Order reduction -----------------------------------------------------------

inline Criterion order_reduction(std::size_t n = 1000, std::size_t query_count = 200, std::uint64_t seed = 1) {
  auto config = bench_config();
  config.index.update_threshold = 100;
  auto engine = build_engine(generate(SyntheticSpec::for_nodes(n, seed)), config);
  const auto full_dim = engine.index().active_dim();
  Rng rng(seed ^ 0x0dd5ULL);
  bool fired = false;
  std::size_t updates = 0;
  while (!fired && updates < 10 * n) {
    Node node = engine.graph().node_at(static_cast<NodeIndex>(rng.below(engine.graph().node_count())));
    node.content = fresh_content(rng, updates++);
    fired = engine.update(std::span<const Node>(&node, 1), {}).reduction;
  }
  const auto& index = engine.index();
  std::size_t unit = 0;
  const auto stored = index.entries();
  for (const auto& e : stored)
    if (e.embedding.size() == index.active_dim() && std::abs(l2_norm(e.embedding) - 1.0) <= 1e-6) ++unit;

  // Oracle: exhaustive search over the current full-dimension encodings.
  std::vector<IndexEntry> full;
  for (NodeIndex v = 0; v < engine.graph().node_count(); ++v)
    full.push_back({engine.graph().node_at(v).id, engine.encodings()[v].values, engine.graph().node_at(v).timestamp});
  double total = 0.0;
  for (std::size_t q = 0; q < query_count; ++q) {
    auto query = full[rng.below(full.size())].embedding;
    for (auto& x : query) x += 0.03 * rng.normal();
    normalize_to_sphere(query);
    const auto want = exhaustive_knn(full, query, std::nullopt, kRecallK, index.metric());
    const auto got = index.knn(index.project(query), std::nullopt, kRecallK, index.cluster_count());
    total += overlap_at_k(got, want);
  }
  const double recall = total / static_cast<double>(query_count);
  Criterion c;
  c.name = "order_reduction";
  c.target = "after forced reduction: stored vectors unit-norm in D' dims; recall@10 vs full-dim oracle >= 0.7 at n=1k";
  c.measured = {{"n", engine.graph().node_count()}, {"updates", updates},       {"fired", fired},
                {"full_dim", full_dim},             {"active_dim", index.active_dim()},
                {"unit_norm", unit},                {"stored", stored.size()}, {"recall_at_10", recall}};
  c.pass = fired && index.active_dim() == index.reduced_dim() && unit == stored.size() && recall >= 0.7;
  return c;
}

// End to end ----------------------------------------------------------------

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!is_blank(line)) lines.push_back(line);
  return lines;
}

/// Reference date used for every canned intent.
inline constexpr std::string_view kCannedReferenceDate = "2025-06-30";

inline Criterion end_to_end_determinism(const std::filesystem::path& corpus_dir,
                                        const std::filesystem::path& intents_file) {
  const auto nodes = read_nodes_jsonl(corpus_dir / "nodes.jsonl");
  const auto edges = read_edges_jsonl(corpus_dir / "edges.jsonl");
  const auto intents = read_lines(intents_file);
  Engine first(bench_config());
  first.ingest(nodes, edges);
  Engine second(bench_config());
  second.ingest(nodes, edges);
  const auto snap_a = first.to_snapshot();
  const auto snap_b = second.to_snapshot();
  const auto reloaded = Engine::from_snapshot(snap_a);
  const bool snapshots_equal = snap_a == snap_b && reloaded.to_snapshot() == snap_a;

  std::size_t identical = 0;
  for (const auto& text : intents) {
    const auto a = to_programmable_format(first.search_text(text, kCannedReferenceDate));
    const auto b = to_programmable_format(second.search_text(text, kCannedReferenceDate));
    const auto c = to_programmable_format(reloaded.search_text(text, kCannedReferenceDate));
    if (a == b && a == c) ++identical;
  }
  Criterion c;
  c.name = "end_to_end_determinism";
  c.target = "ingesting the fixture twice gives byte-identical snapshots; 20 canned intents give identical documents";
  c.measured = {{"snapshot_bytes", snap_a.size()},
                {"snapshots_identical", snapshots_equal},
                {"intents", intents.size()},
                {"identical_documents", identical}};
  c.pass = snapshots_equal && intents.size() >= 20 && identical == intents.size();
  return c;
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteOptions {
  std::size_t n = 0;  // 0: each criterion's own default size
  std::uint64_t seed = 1;
};

struct Report {
  std::string suite;
  nlohmann::ordered_json config;
  std::vector<Criterion> criteria;
  nlohmann::ordered_json environment;

  bool passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["suite"] = suite;
    j["config"] = config;
    j["criteria"] = nlohmann::ordered_json::array();
    for (const auto& c : criteria) j["criteria"].push_back(c.to_json());
    j["environment"] = environment;
    return j;
  }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"update_perf", "recall", "storage", "metric_props", "theorem_checks"};
  return names;
}

inline Report run_suite(const std::string& name, const SuiteOptions& opt = {}) {
  auto size = [&](std::size_t fallback) { return opt.n != 0 ? opt.n : fallback; };
  Report r;
  r.suite = name;
  r.config = {{"n", opt.n}, {"seed", opt.seed}, {"engine", bench_config().to_json()}};
  r.environment = environment();
  if (name == "update_perf") {
    r.criteria.push_back(update_locality(size(10000), 100, opt.seed));
    const auto large = size(100000);
    r.criteria.push_back(update_scaling(std::max<std::size_t>(2, large / 10), large, 5.0, 2000, opt.seed,
                                        {std::max<std::size_t>(2, large / 100)}));
  } else if (name == "recall") {
    const auto fixture = RecallFixture::make(size(10000), 1000, opt.seed);
    r.criteria.push_back(exact_recall(fixture));
    r.criteria.push_back(approx_recall(fixture));
    r.criteria.push_back(order_reduction(size(1000), 200, opt.seed));
  } else if (name == "storage") {
    const auto large = size(100000);
    r.criteria.push_back(storage_linearity(std::max<std::size_t>(1, large / 10), large, opt.seed));
  } else if (name == "metric_props") {
    r.criteria.push_back(metric_properties(size(100000), opt.seed));
    r.criteria.push_back(encoding_invariants(size(2000), opt.seed));
  } else if (name == "theorem_checks") {
    SyntheticSpec reported = SyntheticSpec::for_nodes(size(5000), opt.seed);
    r.criteria.push_back(diffusion_correlation(size(5000), 10000, opt.seed));
    r.criteria.push_back(adjacency_auc(size(5000), {opt.seed, opt.seed + 1, opt.seed + 2}, &reported));
    r.criteria.push_back(kind_separability(size(5000), {opt.seed, opt.seed + 1, opt.seed + 2}));
    r.config["synthetic"] = reported.to_json();
  } else {
    throw Error(ErrorCode::UnknownSuite, name);
  }
  return r;
}

}  // namespace fusegraph::bench
