#include <sstream>

#include <gtest/gtest.h>

#include "fusegraph/graph.hpp"
#include "fusegraph/graph_io.hpp"
#include "test_support.hpp"

namespace fusegraph {
namespace {

using testing::paper;
using testing::path_graph;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::InvalidArgument;
}

TEST(LiteratureGraph, FirstNodeCountsOneUpdate) {
  LiteratureGraph g;
  g.add_node(paper("p1", "text", 1000));
  EXPECT_EQ(g.node_count(), 1u);
  EXPECT_EQ(g.update_count(), 1u);
}

TEST(LiteratureGraph, RejectsDuplicateIds) {
  LiteratureGraph g;
  g.add_node(paper("p1", "text"));
  EXPECT_EQ(code_of([&] { g.add_node(paper("p1", "other")); }), ErrorCode::DuplicateId);
  EXPECT_EQ(g.node_count(), 1u);
}

TEST(LiteratureGraph, RejectsInvalidNodes) {
  LiteratureGraph g;
  EXPECT_EQ(code_of([&] { g.add_node(paper("p1", "")); }), ErrorCode::EmptyContent);
  EXPECT_EQ(code_of([&] { g.add_node(paper("p1", "text", -1)); }), ErrorCode::InvalidTimestamp);
  EXPECT_EQ(code_of([&] { g.add_node(paper("", "text")); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(g.update_count(), 0u);
}

TEST(LiteratureGraph, TimeExtentIsMinAndMax) {
  LiteratureGraph g;
  g.add_node(paper("a", "x", 5));
  g.add_node(paper("b", "x", 9));
  g.add_node(paper("c", "x", 7));
  EXPECT_EQ(g.time_extent(), (TimeExtent{5, 9}));
}

TEST(LiteratureGraph, ReplaceNodeUpdatesTimeExtent) {
  LiteratureGraph g;
  g.add_node(paper("a", "x", 5));
  g.add_node(paper("b", "x", 9));
  g.replace_node(paper("b", "y", 6));
  EXPECT_EQ(g.time_extent(), (TimeExtent{5, 6}));
  EXPECT_EQ(g.node("b").content, "y");
  EXPECT_EQ(code_of([&] { g.replace_node(paper("zz", "y")); }), ErrorCode::UnknownNode);
}

TEST(LiteratureGraph, EdgeAppearsInBothAdjacencyLists) {
  LiteratureGraph g;
  g.add_node(paper("p1", "x"));
  g.add_node(paper("p2", "y"));
  g.add_edge({"p1", "p2", RelationType::citation});
  const auto p1 = g.require("p1");
  const auto p2 = g.require("p2");
  ASSERT_EQ(g.out_edges(p1).size(), 1u);
  EXPECT_EQ(g.out_edges(p1)[0].other, p2);
  ASSERT_EQ(g.in_edges(p2).size(), 1u);
  EXPECT_EQ(g.in_edges(p2)[0].other, p1);
  EXPECT_TRUE(g.has_edge("p1", "p2", RelationType::citation));
  EXPECT_FALSE(g.has_edge("p2", "p1", RelationType::citation));
}

TEST(LiteratureGraph, RejectsInvalidEdges) {
  LiteratureGraph g;
  g.add_node(paper("p1", "x"));
  g.add_node(paper("p2", "y"));
  EXPECT_EQ(code_of([&] { g.add_edge({"p1", "p1", RelationType::inclusion}); }), ErrorCode::SelfLoop);
  EXPECT_EQ(code_of([&] { g.add_edge({"p1", "p3", RelationType::citation}); }), ErrorCode::UnknownEndpoint);
  g.add_edge({"p1", "p2", RelationType::citation});
  EXPECT_EQ(code_of([&] { g.add_edge({"p1", "p2", RelationType::citation}); }), ErrorCode::DuplicateEdge);
  // A different relation between the same pair is a distinct edge.
  g.add_edge({"p1", "p2", RelationType::association});
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(LiteratureGraph, KOrderNeighborsOnPath) {
  const auto g = path_graph({"a", "b", "c"});
  EXPECT_EQ(g.k_order_neighbors("a", 1), (std::vector<Neighbor>{{"b", 1}}));
  EXPECT_EQ(g.k_order_neighbors("a", 2), (std::vector<Neighbor>{{"b", 1}, {"c", 2}}));
  EXPECT_THROW(g.k_order_neighbors("a", 0), Error);
  EXPECT_THROW(g.k_order_neighbors("zz", 1), Error);
}

TEST(LiteratureGraph, KOrderNeighborsIgnoreDirection) {
  const auto g = path_graph({"a", "b", "c"});
  EXPECT_EQ(g.k_order_neighbors("c", 2), (std::vector<Neighbor>{{"b", 1}, {"a", 2}}));
}

TEST(LiteratureGraph, KOrderNeighborsMatchBfsOracle) {
  testing::for_all(20, 11, [](bench::Rng& rng, std::size_t) {
    const auto corpus = testing::random_corpus(rng, 50, 2.5);
    const auto g = build_graph(corpus.nodes, corpus.edges);
    const auto& start = corpus.nodes[rng.below(corpus.nodes.size())].id;
    const int k = 1 + static_cast<int>(rng.below(3));
    auto want = testing::bfs_hops(g, {start}, k);
    want.erase(start);
    const auto got = g.k_order_neighbors(start, k);
    ASSERT_EQ(got.size(), want.size());
    for (const auto& nb : got) EXPECT_EQ(want.at(nb.id), nb.hops) << nb.id;
    for (std::size_t i = 1; i < got.size(); ++i)
      EXPECT_TRUE(got[i - 1].hops < got[i].hops || (got[i - 1].hops == got[i].hops && got[i - 1].id < got[i].id));
  });
}

TEST(LiteratureGraph, Density) {
  LiteratureGraph two;
  two.add_node(paper("a", "x"));
  two.add_node(paper("b", "x"));
  two.add_edge({"a", "b", RelationType::citation});
  EXPECT_DOUBLE_EQ(two.graph_density(), 0.5);

  LiteratureGraph complete;
  for (const char* id : {"a", "b", "c"}) complete.add_node(paper(id, "x"));
  for (const char* s : {"a", "b", "c"})
    for (const char* d : {"a", "b", "c"})
      if (std::string(s) != d) complete.add_edge({s, d, RelationType::citation});
  EXPECT_DOUBLE_EQ(complete.graph_density(), 1.0);

  LiteratureGraph ten;
  for (int i = 0; i < 10; ++i) ten.add_node(paper("n" + std::to_string(i), "x"));
  int added = 0;
  for (int i = 0; i < 10 && added < 18; ++i)
    for (int j = 0; j < 10 && added < 18; ++j)
      if (i != j) {
        ten.add_edge({"n" + std::to_string(i), "n" + std::to_string(j), RelationType::citation});
        ++added;
      }
  EXPECT_DOUBLE_EQ(ten.graph_density(), 0.2);

  LiteratureGraph one;
  one.add_node(paper("a", "x"));
  EXPECT_THROW(one.graph_density(), Error);
}

TEST(LiteratureGraph, UpdateCounter) {
  LiteratureGraph g;
  EXPECT_EQ(g.update_count(), 0u);
  g.add_node(paper("a", "x"));
  g.add_node(paper("b", "x"));
  g.add_edge({"a", "b", RelationType::citation});
  EXPECT_EQ(g.update_count(), 3u);
  g.reset_update_count();
  g.add_edge({"b", "a", RelationType::citation});
  EXPECT_EQ(g.update_count(), 1u);
}

TEST(LiteratureGraph, RelationCountsCoverBothDirections) {
  LiteratureGraph g;
  for (const char* id : {"a", "b", "c"}) g.add_node(paper(id, "x"));
  g.add_edge({"a", "b", RelationType::citation});
  g.add_edge({"c", "a", RelationType::citation});
  g.add_edge({"a", "c", RelationType::inclusion});
  const auto counts = g.incident_relation_counts(g.require("a"));
  EXPECT_EQ(counts, (std::array<std::size_t, 3>{2, 1, 0}));
}

TEST(LiteratureGraph, EdgeCountEqualsSumOfOutDegrees) {
  testing::for_all(20, 12, [](bench::Rng& rng, std::size_t) {
    const auto corpus = testing::random_corpus(rng, 40, 3.0);
    const auto g = build_graph(corpus.nodes, corpus.edges);
    std::size_t out = 0, in = 0;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
      out += g.out_edges(v).size();
      in += g.in_edges(v).size();
    }
    EXPECT_EQ(out, g.edge_count());
    EXPECT_EQ(in, g.edge_count());
    EXPECT_EQ(g.edges(), corpus.edges);
  });
}

// JSONL ---------------------------------------------------------------------

TEST(GraphIo, ReadsFixture) {
  const auto nodes = read_nodes_jsonl(testing::kFixtureDir / "nodes.jsonl");
  const auto edges = read_edges_jsonl(testing::kFixtureDir / "edges.jsonl");
  ASSERT_EQ(nodes.size(), 5u);
  ASSERT_EQ(edges.size(), 4u);
  EXPECT_EQ(nodes[2].id, "P1.S1.U1");
  EXPECT_EQ(nodes[2].kind, NodeKind::knowledge_unit);
  EXPECT_EQ(nodes[3].timestamp, 1609459200);
  EXPECT_EQ(edges[3], (Edge{"P2", "P1", RelationType::citation}));
}

TEST(GraphIo, ParseErrorCarriesLineNumber) {
  std::istringstream in(R"({"id":"a","kind":"paper","content":"x","timestamp":1}

{"id":"b","kind":"paper","content":"x","timestamp":1}
{"id":"c","kind":"paper","content":"x"
)");
  try {
    read_nodes_jsonl(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(GraphIo, RejectsBadFields) {
  auto line_error = [](const std::string& text) -> std::string {
    std::istringstream in(text);
    try {
      read_nodes_jsonl(in);
    } catch (const ParseError& e) {
      return e.detail();
    }
    return "";
  };
  EXPECT_NE(line_error(R"({"id":"a","kind":"poem","content":"x","timestamp":1})"), "");
  EXPECT_NE(line_error(R"({"id":"a","kind":"paper","content":"x","timestamp":"1"})"), "");
  EXPECT_NE(line_error(R"({"id":"a","kind":"paper","content":"x","timestamp":1,"extra":2})"), "");
  EXPECT_NE(line_error(R"({"id":"a","kind":"paper","content":"","timestamp":1})"), "");
  EXPECT_NE(line_error(R"({"id":"a","kind":"paper","content":"x","timestamp":-4})"), "");
  EXPECT_NE(line_error(R"(["a"])"), "");

  std::istringstream edges(R"({"src":"a","dst":"b","relation":"likes"})");
  EXPECT_THROW(read_edges_jsonl(edges), ParseError);
}

TEST(GraphIo, RoundTripsThroughJsonl) {
  testing::for_all(10, 13, [](bench::Rng& rng, std::size_t) {
    auto corpus = testing::random_corpus(rng, 30, 2.0);
    corpus.nodes[0].content = "unicode \xc3\xa9t\xc3\xa9 \"quoted\"\nnewline";
    std::stringstream ns, es;
    write_nodes_jsonl(ns, corpus.nodes);
    write_edges_jsonl(es, corpus.edges);
    EXPECT_EQ(read_nodes_jsonl(ns), corpus.nodes);
    EXPECT_EQ(read_edges_jsonl(es), corpus.edges);
  });
}

}  // namespace
}  // namespace fusegraph
