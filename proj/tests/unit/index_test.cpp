#include <numbers>

#include <gtest/gtest.h>

#include "fusegraph/index.hpp"
#include "test_support.hpp"

namespace fusegraph {
namespace {

std::vector<IndexEntry> random_entries(bench::Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<IndexEntry> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"e" + std::to_string(i), rng.unit_vector(dim), static_cast<Timestamp>(rng.below(1000))});
  return out;
}

ManifoldIndex build(const std::vector<IndexEntry>& entries, IndexConfig cfg = {}, double alpha = 0.25) {
  return ManifoldIndex::build(entries, cfg, TemporalMetricParams{alpha, 1000.0});
}

std::vector<double> axis(std::size_t dim, std::size_t i, double sign = 1.0) {
  std::vector<double> v(dim, 0.0);
  v[i] = sign;
  return v;
}

TEST(BaseDistance, KnownAngles) {
  const auto e0 = axis(4, 0), e1 = axis(4, 1), neg = axis(4, 0, -1.0);
  EXPECT_EQ(base_distance(e0, e0), 0.0);
  EXPECT_NEAR(base_distance(e0, e1), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(base_distance(e0, neg), std::numbers::pi, 1e-15);
  EXPECT_THROW(base_distance(e0, axis(3, 0)), Error);
}

TEST(BaseDistance, AgreesWithAcosAwayFromTheEnds) {
  testing::for_all(500, 51, [](bench::Rng& rng, std::size_t) {
    const auto a = rng.unit_vector(16);
    const auto b = rng.unit_vector(16);
    EXPECT_NEAR(base_distance(a, b), testing::acos_angle(a, b), 1e-12);
  });
}

TEST(BaseDistance, AccurateForNearlyParallelVectors) {
  // acos(1 - x^2/2) cannot resolve angles near 1e-9; the half-angle form can.
  std::vector<double> a{1.0, 0.0}, b{std::cos(1e-9), std::sin(1e-9)};
  EXPECT_NEAR(base_distance(a, b), 1e-9, 1e-20);
}

TEST(TemporalMetric, Examples) {
  TemporalMetricParams p{0.25, 100.0};
  const auto a = axis(4, 0);
  EXPECT_EQ(temporal_metric(a, 5, a, 5, p), 0.0);
  EXPECT_DOUBLE_EQ(temporal_metric(a, 0, a, 50, p), 0.125);
  EXPECT_DOUBLE_EQ(temporal_metric(a, 0, a, 5000, p), 0.25);
  TemporalMetricParams zero{0.0, 100.0};
  testing::for_all(100, 52, [&](bench::Rng& rng, std::size_t) {
    const auto x = rng.unit_vector(8);
    const auto y = rng.unit_vector(8);
    const auto tx = static_cast<Timestamp>(rng.below(300));
    const auto ty = static_cast<Timestamp>(rng.below(300));
    EXPECT_EQ(temporal_metric(x, tx, y, ty, zero), base_distance(x, y));
    const double want = testing::acos_angle(x, y) + 0.25 * std::min(1.0, std::abs(double(tx - ty)) / 100.0);
    EXPECT_NEAR(temporal_metric(x, tx, y, ty, p), want, 1e-12);
  });
}

TEST(TemporalMetric, SymmetricAndTriangle) {
  TemporalMetricParams p{0.5, 200.0};
  testing::for_all(2000, 53, [&](bench::Rng& rng, std::size_t) {
    const auto x = rng.unit_vector(6), y = rng.unit_vector(6), z = rng.unit_vector(6);
    const Timestamp tx = rng.below(500), ty = rng.below(500), tz = rng.below(500);
    const double xy = temporal_metric(x, tx, y, ty, p);
    EXPECT_EQ(xy, temporal_metric(y, ty, x, tx, p));
    EXPECT_LE(temporal_metric(x, tx, z, tz, p), xy + temporal_metric(y, ty, z, tz, p) + 1e-9);
  });
}

TEST(IndexBuild, SingletonCorpus) {
  const std::vector<IndexEntry> one{{"only", axis(4, 2), 7}};
  const auto idx = build(one);
  EXPECT_EQ(idx.cluster_count(), 1u);
  const auto hits = idx.knn(axis(4, 0), std::nullopt, 5);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, "only");
}

TEST(IndexBuild, TwoSeparatedPairsSplitIntoTwoClusters) {
  auto near = [](double sign, double tilt) {
    std::vector<double> v{sign * std::cos(tilt), std::sin(tilt), 0.0};
    return v;
  };
  const std::vector<IndexEntry> entries{
      {"a1", near(1, 0.05), 0}, {"a2", near(1, -0.05), 0}, {"b1", near(-1, 0.05), 0}, {"b2", near(-1, -0.05), 0}};
  IndexConfig cfg;
  cfg.cluster_count = 2;
  const auto idx = build(entries, cfg);
  auto postings = idx.postings();
  for (auto& p : postings) std::sort(p.begin(), p.end());
  std::sort(postings.begin(), postings.end());
  EXPECT_EQ(postings, (std::vector<std::vector<std::string>>{{"a1", "a2"}, {"b1", "b2"}}));
}

TEST(IndexBuild, DefaultSizing) {
  bench::Rng rng(54);
  const auto idx = build(random_entries(rng, 1000, 8));
  EXPECT_EQ(idx.cluster_count(), 32u);
  EXPECT_EQ(idx.probe_count(), 4u);
  EXPECT_EQ(idx.size(), 1000u);
  EXPECT_EQ(idx.reduced_dim(), 4u);
}

TEST(IndexBuild, MembersSitAtTheirNearestCentroid) {
  bench::Rng rng(55);
  const auto entries = random_entries(rng, 1000, 8);
  const auto idx = build(entries);
  std::map<std::string, std::vector<double>> vec;
  for (const auto& e : entries) vec[e.id] = e.embedding;
  const auto postings = idx.postings();
  std::size_t misplaced = 0;
  for (std::size_t c = 0; c < postings.size(); ++c)
    for (const auto& id : postings[c]) {
      const double own = base_distance(vec[id], idx.centroid(c));
      for (std::size_t o = 0; o < postings.size(); ++o)
        if (base_distance(vec[id], idx.centroid(o)) < own - 1e-12) {
          ++misplaced;
          break;
        }
    }
  // Lloyd iterations stop at a tolerance, so allow a sliver of boundary points.
  EXPECT_LE(misplaced, 10u);
  for (std::size_t c = 0; c < idx.cluster_count(); ++c) EXPECT_NEAR(l2_norm(idx.centroid(c)), 1.0, 1e-9);
}

TEST(IndexBuild, RejectsBadInput) {
  EXPECT_THROW(build({}), Error);
  const std::vector<IndexEntry> mixed{{"a", axis(4, 0), 0}, {"b", axis(3, 0), 0}};
  EXPECT_THROW(build(mixed), Error);
  ManifoldIndex unbuilt;
  EXPECT_THROW(unbuilt.knn(axis(4, 0), std::nullopt, 1), Error);
}

TEST(Knn, ExactSelfMatch) {
  bench::Rng rng(56);
  const auto entries = random_entries(rng, 300, 8);
  const auto idx = build(entries);
  for (std::size_t i = 0; i < 300; i += 37) {
    const auto hits = idx.knn(entries[i].embedding, entries[i].timestamp, 1, idx.cluster_count());
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].id, entries[i].id);
    EXPECT_EQ(hits[0].distance, 0.0);
  }
}

TEST(Knn, FullProbeEqualsBruteForce) {
  testing::for_all(10, 57, [](bench::Rng& rng, std::size_t) {
    const auto entries = random_entries(rng, 400, 8);
    const auto idx = build(entries);
    TemporalMetricParams metric{0.25, 1000.0};
    for (int q = 0; q < 20; ++q) {
      const auto query = rng.unit_vector(8);
      const std::optional<Timestamp> t =
          rng.chance(0.5) ? std::optional<Timestamp>(rng.below(1000)) : std::nullopt;
      const auto k = 1 + rng.below(15);
      EXPECT_EQ(idx.knn(query, t, k, idx.cluster_count()), bench::exhaustive_knn(entries, query, t, k, metric));
    }
  });
}

TEST(Knn, AlwaysFindsKWhenAvailable) {
  // Few probes on a skewed index still return k hits.
  bench::Rng rng(58);
  auto entries = random_entries(rng, 200, 8);
  const auto idx = build(entries);
  for (int q = 0; q < 50; ++q) EXPECT_EQ(idx.knn(rng.unit_vector(8), std::nullopt, 40, 1).size(), 40u);
  EXPECT_TRUE(idx.knn(rng.unit_vector(8), std::nullopt, 0).empty());
  EXPECT_EQ(idx.knn(rng.unit_vector(8), std::nullopt, 500).size(), 200u);
  EXPECT_THROW(idx.knn(rng.unit_vector(5), std::nullopt, 1), Error);
}

TEST(Insert, InsertedNodeIsFound) {
  bench::Rng rng(59);
  auto idx = build(random_entries(rng, 100, 8));
  const auto v = rng.unit_vector(8);
  idx.insert("new", v, 3);
  const auto hits = idx.knn(v, 3, 1, idx.cluster_count());
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], (SearchHit{"new", 0.0}));
  EXPECT_THROW(idx.insert("new", v, 3), Error);
  EXPECT_THROW(idx.insert("bad", std::vector<double>(3, 0.5), 3), Error);
}

TEST(Insert, CountsUpdates) {
  bench::Rng rng(60);
  auto idx = build(random_entries(rng, 50, 8));
  EXPECT_EQ(idx.updates_since_build(), 0u);
  for (int i = 0; i < 100; ++i) idx.insert("x" + std::to_string(i), rng.unit_vector(8), i);
  EXPECT_EQ(idx.updates_since_build(), 100u);
  idx.upsert("x0", rng.unit_vector(8), 0);
  EXPECT_EQ(idx.updates_since_build(), 101u);
  EXPECT_EQ(idx.size(), 150u);
}

TEST(Insert, InterleavedWithQueriesMatchesBruteForce) {
  testing::for_all(5, 61, [](bench::Rng& rng, std::size_t) {
    auto entries = random_entries(rng, 100, 6);
    auto idx = build(entries);
    TemporalMetricParams metric{0.25, 1000.0};
    for (int step = 0; step < 200; ++step) {
      if (rng.chance(0.5)) {
        IndexEntry e{"i" + std::to_string(step), rng.unit_vector(6), static_cast<Timestamp>(rng.below(1000))};
        idx.insert(e.id, e.embedding, e.timestamp);
        entries.push_back(e);
      } else if (rng.chance(0.3)) {
        auto& e = entries[rng.below(entries.size())];
        e.embedding = rng.unit_vector(6);
        idx.upsert(e.id, e.embedding, e.timestamp);
      } else {
        const auto q = rng.unit_vector(6);
        ASSERT_EQ(idx.knn(q, std::nullopt, 10, idx.cluster_count()),
                  bench::exhaustive_knn(entries, q, std::nullopt, 10, metric));
      }
    }
  });
}

TEST(OrderReduction, NoTriggerKeepsDimensions) {
  bench::Rng rng(62);
  auto idx = build(random_entries(rng, 100, 8));
  LiteratureGraph sparse;
  EXPECT_FALSE(idx.maybe_reduce_order(sparse));
  EXPECT_EQ(idx.active_dim(), 8u);
}

TEST(OrderReduction, ThresholdKeepsHighestVarianceCoordinates) {
  bench::Rng rng(63);
  // Coordinates 1 and 4 vary the most; 0 is nearly constant.
  std::vector<IndexEntry> entries;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v{5.0, 2.0 * rng.normal(), 0.3 * rng.normal(), 0.2 * rng.normal(), 2.0 * rng.normal(),
                          0.1 * rng.normal()};
    normalize_to_sphere(v);
    entries.push_back({"e" + std::to_string(i), v, 0});
  }
  IndexConfig cfg;
  cfg.update_threshold = 10;
  cfg.reduced_dim = 4;
  auto idx = build(entries, cfg);
  LiteratureGraph g;
  for (int i = 0; i < 10; ++i) idx.upsert(entries[i].id, entries[i].embedding, 0);
  EXPECT_FALSE(idx.maybe_reduce_order(g));
  idx.upsert(entries[10].id, entries[10].embedding, 0);
  EXPECT_TRUE(idx.maybe_reduce_order(g));
  EXPECT_EQ(idx.active_dim(), 4u);
  auto kept = idx.active_dims();
  std::sort(kept.begin(), kept.end());
  EXPECT_TRUE(std::find(kept.begin(), kept.end(), 1u) != kept.end());
  EXPECT_TRUE(std::find(kept.begin(), kept.end(), 4u) != kept.end());
  for (const auto& e : idx.entries()) {
    ASSERT_EQ(e.embedding.size(), 4u);
    EXPECT_NEAR(l2_norm(e.embedding), 1.0, 1e-6);
  }
  // Idempotent until thresholds retrigger; already at D'.
  EXPECT_FALSE(idx.maybe_reduce_order(g));
  EXPECT_EQ(idx.reductions(), 1u);
  EXPECT_EQ(idx.project(entries[0].embedding).size(), 4u);
}

TEST(OrderReduction, DensityTrigger) {
  bench::Rng rng(64);
  IndexConfig cfg;
  cfg.density_min_nodes = 3;
  auto idx = build(random_entries(rng, 20, 8), cfg);
  LiteratureGraph g;
  for (const char* id : {"a", "b", "c"}) g.add_node(testing::paper(id, "x"));
  g.add_edge({"a", "b", RelationType::citation});
  EXPECT_TRUE(idx.maybe_reduce_order(g));
  EXPECT_EQ(idx.active_dim(), 4u);
}

TEST(IndexSerialization, RoundTrips) {
  bench::Rng rng(65);
  auto idx = build(random_entries(rng, 120, 8));
  idx.insert("extra", rng.unit_vector(8), 4);
  BinaryWriter w;
  idx.serialize(w);
  const auto bytes = w.take();
  BinaryReader r(bytes);
  const auto back = ManifoldIndex::deserialize(r);
  BinaryWriter w2;
  back.serialize(w2);
  EXPECT_EQ(w2.take(), bytes);
  const auto q = rng.unit_vector(8);
  EXPECT_EQ(back.knn(q, std::nullopt, 7), idx.knn(q, std::nullopt, 7));
}

TEST(IndexConfig, Validation) {
  IndexConfig c;
  c.update_threshold = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.density_threshold = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.reduced_dim = 3;
  EXPECT_THROW(c.validate(), Error);
}

}  // namespace
}  // namespace fusegraph
