#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fusegraph/bench.hpp"
#include "fusegraph/graph_io.hpp"
#include "test_support.hpp"

namespace fusegraph::bench {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SyntheticSpec minimal_spec() {
  SyntheticSpec s;
  s.papers = 1;
  s.sections_min = s.sections_max = 1;
  s.units_min = s.units_max = 1;
  return s;
}

TEST(Generator, MinimalHierarchy) {
  const auto c = generate(minimal_spec());
  ASSERT_EQ(c.nodes.size(), 3u);
  ASSERT_EQ(c.edges.size(), 2u);
  EXPECT_EQ(c.nodes[0].kind, NodeKind::paper);
  EXPECT_EQ(c.nodes[1].kind, NodeKind::section);
  EXPECT_EQ(c.nodes[2].kind, NodeKind::knowledge_unit);
  for (const auto& e : c.edges) EXPECT_EQ(e.relation, RelationType::inclusion);
  EXPECT_EQ(c.edges[0], (Edge{"P0", "P0.S0", RelationType::inclusion}));
}

TEST(Generator, SameSeedGivesIdenticalFiles) {
  const auto base = fs::temp_directory_path() / ("fusegraph_gen_" + std::to_string(::getpid()));
  SyntheticSpec spec;
  spec.papers = 40;
  spec.seed = 9;
  write_corpus(generate(spec), base / "a");
  write_corpus(generate(spec), base / "b");
  EXPECT_EQ(slurp(base / "a" / "nodes.jsonl"), slurp(base / "b" / "nodes.jsonl"));
  EXPECT_EQ(slurp(base / "a" / "edges.jsonl"), slurp(base / "b" / "edges.jsonl"));
  spec.seed = 10;
  write_corpus(generate(spec), base / "c");
  EXPECT_NE(slurp(base / "a" / "nodes.jsonl"), slurp(base / "c" / "nodes.jsonl"));
  fs::remove_all(base);
}

TEST(Generator, CitationInDegreeIsHeavyTailed) {
  for (std::uint64_t seed : {1, 2, 3}) {
    SyntheticSpec spec;
    spec.papers = 100;
    spec.seed = seed;
    const auto c = generate(spec);
    std::map<std::string, double> indeg;
    for (const auto& n : c.nodes)
      if (n.kind == NodeKind::paper) indeg[n.id] = 0;
    for (const auto& e : c.edges)
      if (e.relation == RelationType::citation) indeg[e.dst] += 1;
    std::vector<double> d;
    for (const auto& [id, k] : indeg) d.push_back(k);
    const double max = *std::max_element(d.begin(), d.end());
    EXPECT_GE(max, 5.0 * std::max(1.0, median(d))) << seed;
  }
}

TEST(Generator, ProducesAValidGraph) {
  testing::for_all(10, 91, [](Rng& rng, std::size_t) {
    SyntheticSpec spec;
    spec.papers = 5 + rng.below(60);
    spec.seed = rng.next();
    spec.association_prob = rng.uniform();
    const auto c = generate(spec);
    const auto g = build_graph(c.nodes, c.edges);  // throws on any invalid node or edge
    std::size_t papers = 0;
    for (const auto& n : c.nodes) {
      papers += n.kind == NodeKind::paper;
      EXPECT_GE(n.timestamp, spec.time_start);
      EXPECT_LE(n.timestamp, spec.time_start + spec.time_span);
    }
    EXPECT_EQ(papers, spec.papers);
    // Citations point backwards in time.
    for (const auto& e : c.edges)
      if (e.relation == RelationType::citation) {
        EXPECT_LE(g.node(e.dst).timestamp, g.node(e.src).timestamp);
      }
  });
}

TEST(Generator, SizingAndValidation) {
  const auto spec = SyntheticSpec::for_nodes(10000, 1);
  const auto c = generate(spec);
  EXPECT_NEAR(static_cast<double>(c.nodes.size()), 10000.0, 1000.0);
  SyntheticSpec bad;
  bad.papers = 0;
  EXPECT_THROW(generate(bad), Error);
  bad = {};
  bad.core_share = 1.5;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_EQ(vocabulary_word(0), vocabulary_word(0));
  EXPECT_NE(vocabulary_word(0), vocabulary_word(1));
}

TEST(Statistics, MedianAndQuantile) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_EQ(quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.95), 10.0);
  EXPECT_EQ(quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.5), 5.0);
}

TEST(Statistics, RanksAndCorrelation) {
  const std::vector<double> x{10, 20, 20, 40};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{1, 2.5, 2.5, 4}));
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10}, c{5, 4, 3, 2, 1}, sq{1, 4, 9, 16, 25};
  EXPECT_NEAR(pearson(a, b), 1.0, 1e-12);
  EXPECT_NEAR(pearson(a, c), -1.0, 1e-12);
  EXPECT_NEAR(spearman(a, sq), 1.0, 1e-12);
  EXPECT_LT(pearson(a, sq), 1.0);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST(Statistics, AucAndThreshold) {
  EXPECT_EQ(roc_auc_lower_is_positive(std::vector<double>{1, 2}, std::vector<double>{3, 4}), 1.0);
  EXPECT_EQ(roc_auc_lower_is_positive(std::vector<double>{3, 4}, std::vector<double>{1, 2}), 0.0);
  EXPECT_EQ(roc_auc_lower_is_positive(std::vector<double>{1}, std::vector<double>{1}), 0.5);
  const double t = youden_threshold(std::vector<double>{1, 2}, std::vector<double>{3, 4});
  EXPECT_GE(t, 2.0);
  EXPECT_LT(t, 3.0);
  // Brute-force pair counting on random samples.
  testing::for_all(20, 92, [](Rng& rng, std::size_t) {
    std::vector<double> pos, neg;
    for (int i = 0; i < 30; ++i) pos.push_back(std::floor(rng.normal() * 3) );
    for (int i = 0; i < 40; ++i) neg.push_back(std::floor(rng.normal() * 3 + 2));
    double wins = 0;
    for (double p : pos)
      for (double n : neg) wins += p < n ? 1.0 : (p == n ? 0.5 : 0.0);
    EXPECT_NEAR(roc_auc_lower_is_positive(pos, neg), wins / (30.0 * 40.0), 1e-12);
  });
}

TEST(Statistics, LinearClassifierSeparatesSeparableClasses) {
  Rng rng(93);
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> y;
  for (int i = 0; i < 300; ++i) {
    const auto label = static_cast<std::size_t>(i % 3);
    x.push_back({rng.normal() * 0.3 + 3.0 * static_cast<double>(label), rng.normal() * 0.3});
    y.push_back(label);
  }
  EXPECT_GE(linear_classifier_accuracy(x, y, 3, 0.7, 1), 0.97);
}

TEST(Oracles, BfsBallMatchesGraphBall) {
  testing::for_all(10, 94, [](Rng& rng, std::size_t) {
    const auto c = testing::random_corpus(rng, 80, 2.0);
    const auto g = build_graph(c.nodes, c.edges);
    std::vector<NodeIndex> seeds{static_cast<NodeIndex>(rng.below(80)), static_cast<NodeIndex>(rng.below(80))};
    const auto ball = g.ball(seeds, 2);
    std::vector<NodeIndex> want;
    for (const auto& [v, d] : ball) want.push_back(v);
    std::sort(want.begin(), want.end());
    EXPECT_EQ(bfs_ball_oracle(g, seeds, 2), want);
  });
}

TEST(Oracles, OverlapAtK) {
  const std::vector<SearchHit> want{{"a", 0}, {"b", 0}, {"c", 0}, {"d", 0}};
  const std::vector<SearchHit> got{{"d", 0}, {"x", 0}, {"a", 0}, {"y", 0}};
  EXPECT_DOUBLE_EQ(overlap_at_k(got, want), 0.5);
  EXPECT_DOUBLE_EQ(overlap_at_k({}, {}), 1.0);
}

TEST(Suites, SmallRunsProduceReports) {
  const auto report = run_suite("metric_props", {2000, 1});
  EXPECT_EQ(report.suite, "metric_props");
  EXPECT_FALSE(report.criteria.empty());
  const auto j = report.to_json();
  EXPECT_TRUE(j.contains("config"));
  EXPECT_TRUE(j.contains("environment"));
  EXPECT_EQ(j["criteria"].size(), report.criteria.size());
  try {
    run_suite("nonsense");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSuite);
  }
}

TEST(Suites, UpdateLocalityHoldsOnSmallGraph) {
  const auto c = update_locality(1000, 20, 3);
  EXPECT_TRUE(c.pass) << c.measured.dump();
}

}  // namespace
}  // namespace fusegraph::bench
