#include <atomic>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"

#include "fusegraph/embedder.hpp"
#include "test_support.hpp"

namespace fusegraph {
namespace {

/// Independent hand-rolled feature hash: same tokens, same FNV-1a
/// constants, summed into buckets without the library's helpers.
std::vector<double> hashed_bag(const std::vector<std::string>& tokens, std::size_t dim) {
  auto fnv = [](const std::string& s, std::uint64_t h) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  };
  std::vector<double> v(dim, 0.0);
  for (const auto& t : tokens) {
    const auto bucket = fnv(t, 0xcbf29ce484222325ULL) % dim;
    v[bucket] += (fnv(t, 0x84222325cbf29ce4ULL) >> 63) ? -1.0 : 1.0;
  }
  double n = 0.0;
  for (double x : v) n += x * x;
  for (double& x : v) x /= std::sqrt(n);
  return v;
}

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Graph-based  K-Means, v2!"),
            (std::vector<std::string>{"graph", "based", "k", "means", "v2"}));
  EXPECT_EQ(tokenize("caf\xc3\xa9 au lait"), (std::vector<std::string>{"caf\xc3\xa9", "au", "lait"}));
  EXPECT_TRUE(tokenize(" ,;: ").empty());
}

TEST(HashingEmbedder, IsDeterministic) {
  HashingEmbedder e;
  const auto a = e.embed("graph");
  const auto b = e.embed("graph");
  EXPECT_EQ(a, b);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 1.0);
}

TEST(HashingEmbedder, FrozenBucketForGraph) {
  // One token puts +-1 in a single bucket; these values are part of the
  // embedding format and must not drift.
  HashingEmbedder e;
  const auto v = e.embed("graph");
  std::size_t nonzero = 0, bucket = 0;
  for (std::size_t i = 0; i < v.dim(); ++i)
    if (v.values[i] != 0.0) {
      ++nonzero;
      bucket = i;
    }
  EXPECT_EQ(nonzero, 1u);
  EXPECT_EQ(bucket, hashing::fnv1a("graph", hashing::kBucketBasis) % 64);
  EXPECT_EQ(hashing::fnv1a("graph", hashing::kBucketBasis), 0x32ec982977fe5287ULL);
  EXPECT_EQ(bucket, 7u);
  EXPECT_EQ(v.values[bucket], -1.0);
}

TEST(HashingEmbedder, RejectsEmptyText) {
  HashingEmbedder e;
  EXPECT_THROW(e.embed(""), Error);
  EXPECT_THROW(e.embed("   \n"), Error);
  EXPECT_THROW(e.embed("?!"), Error);
  EXPECT_THROW(HashingEmbedder(4), Error);
}

TEST(HashingEmbedder, BagOfTokensMatchesHandHash) {
  HashingEmbedder e;
  EXPECT_EQ(e.embed("alpha beta"), e.embed("beta alpha"));
  EXPECT_EQ(e.embed("alpha beta").values, hashed_bag({"alpha", "beta"}, 64));
  testing::for_all(50, 21, [&](bench::Rng& rng, std::size_t) {
    std::vector<std::string> tokens;
    std::string text;
    const auto n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) {
      tokens.push_back(bench::vocabulary_word(rng.below(300)));
      text += tokens.back() + (rng.chance(0.5) ? " " : ", ");
    }
    const auto got = e.embed(text).values;
    const auto want = hashed_bag(tokens, 64);
    // The hand oracle has no cancellation fallback; skip that rare case.
    if (std::isnan(want[0])) return;
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
  });
}

TEST(HashingEmbedder, EveryVectorIsUnitNorm) {
  testing::for_all(100, 22, [](bench::Rng& rng, std::size_t) {
    const std::size_t dim = 8 + rng.below(120);
    HashingEmbedder e(dim);
    std::string text;
    for (std::size_t i = 0, n = 1 + rng.below(30); i < n; ++i) text += bench::vocabulary_word(rng.below(5000)) + " ";
    const auto v = e.embed(text);
    ASSERT_EQ(v.dim(), dim);
    EXPECT_NEAR(l2_norm(v.values), 1.0, 1e-12);
  });
}

TEST(CosineSimilarity, BasicCases) {
  std::vector<double> e0(8, 0.0), e1(8, 0.0);
  e0[0] = 1.0;
  e1[1] = 1.0;
  EXPECT_DOUBLE_EQ(cosine_similarity(e0, e0), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(e0, e1), 0.0);
  EXPECT_THROW(cosine_similarity(e0, std::vector<double>(7, 0.0)), Error);
}

TEST(CosineSimilarity, MatchesDotProductOracle) {
  testing::for_all(200, 23, [](bench::Rng& rng, std::size_t) {
    const auto a = rng.unit_vector(8);
    const auto b = rng.unit_vector(8);
    double dot = 0.0;
    for (int i = 0; i < 8; ++i) dot += a[i] * b[i];
    EXPECT_NEAR(cosine_similarity(a, b), dot, 1e-12);
  });
}

TEST(BatchEmbed, PreservesOrder) {
  HashingEmbedder e;
  const std::vector<std::string> one{"graph"};
  EXPECT_EQ(e.batch_embed(one).front(), e.embed("graph"));
  const std::vector<std::string> three{"first text", "second words", "third item"};
  const auto out = e.batch_embed(three);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out[i], e.embed(three[i]));
}

// Remote provider against an in-process fake of the /embed contract ---------

/// Serves POST /embed by mirroring the builtin embedder, with switchable
/// failure modes.
class FakeEmbedServer {
 public:
  enum class Mode { mirror, wrong_dim, not_normalized, http_error, garbage, short_batch };

  explicit FakeEmbedServer(std::size_t dim = 64, std::size_t max_batch = 32) : builtin_(dim), max_batch_(max_batch) {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      const auto body = nlohmann::json::parse(req.body);
      const auto texts = body.at("texts").get<std::vector<std::string>>();
      largest_batch_ = std::max(largest_batch_.load(), texts.size());
      if (texts.size() > max_batch_) {
        res.status = 413;
        return;
      }
      if (mode_ == Mode::http_error) {
        res.status = 500;
        return;
      }
      if (mode_ == Mode::garbage) {
        res.set_content("not json", "application/json");
        return;
      }
      nlohmann::json out;
      out["dim"] = mode_ == Mode::wrong_dim ? builtin_.dim() + 1 : builtin_.dim();
      out["vectors"] = nlohmann::json::array();
      for (const auto& t : texts) {
        auto v = builtin_.embed(t).values;
        if (mode_ == Mode::not_normalized)
          for (double& x : v) x *= 2.0;
        out["vectors"].push_back(v);
      }
      if (mode_ == Mode::short_batch) out["vectors"].erase(out["vectors"].size() - 1);
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEmbedServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  void set_mode(Mode m) { mode_ = m; }
  std::size_t requests() const { return requests_; }
  std::size_t largest_batch() const { return largest_batch_; }

 private:
  HashingEmbedder builtin_;
  std::size_t max_batch_;
  std::atomic<Mode> mode_{Mode::mirror};
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> largest_batch_{0};
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(RemoteEmbedder, ChunkedBatchEqualsBuiltin) {
  FakeEmbedServer server;
  RemoteEmbedder remote(server.endpoint(), 64, 32);
  HashingEmbedder builtin;
  std::vector<std::string> texts;
  for (int i = 0; i < 100; ++i) texts.push_back("text number " + std::to_string(i) + " " + bench::vocabulary_word(i));
  const auto got = remote.batch_embed(texts);
  ASSERT_EQ(got.size(), texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(got[i], builtin.embed(texts[i])) << i;
  EXPECT_EQ(server.requests(), 4u);
  EXPECT_EQ(server.largest_batch(), 32u);
  EXPECT_EQ(remote.embed("graph"), builtin.embed("graph"));
}

TEST(RemoteEmbedder, OversizedBatchIsRejectedByServer) {
  FakeEmbedServer server(64, 32);
  RemoteEmbedder unchunked(server.endpoint(), 64, 33);
  std::vector<std::string> texts(33, "word");
  try {
    unchunked.batch_embed(texts);
    FAIL() << "expected RemoteUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RemoteUnavailable);
    EXPECT_NE(e.detail().find("413"), std::string::npos);
  }
}

TEST(RemoteEmbedder, ReportsContractViolations) {
  FakeEmbedServer server;
  RemoteEmbedder remote(server.endpoint(), 64);
  auto code = [&] {
    try {
      remote.embed("graph");
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  server.set_mode(FakeEmbedServer::Mode::wrong_dim);
  EXPECT_EQ(code(), ErrorCode::DimensionMismatch);
  server.set_mode(FakeEmbedServer::Mode::not_normalized);
  EXPECT_EQ(code(), ErrorCode::RemoteUnavailable);
  server.set_mode(FakeEmbedServer::Mode::http_error);
  EXPECT_EQ(code(), ErrorCode::RemoteUnavailable);
  server.set_mode(FakeEmbedServer::Mode::garbage);
  EXPECT_EQ(code(), ErrorCode::RemoteUnavailable);
  server.set_mode(FakeEmbedServer::Mode::short_batch);
  EXPECT_EQ(code(), ErrorCode::RemoteUnavailable);
}

TEST(RemoteEmbedder, UnreachableEndpointIsRemoteUnavailable) {
  const int port = testing::closed_port();
  RemoteEmbedder remote("http://127.0.0.1:" + std::to_string(port), 64);
  try {
    remote.embed("graph");
    FAIL() << "expected RemoteUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RemoteUnavailable);
  }
  EXPECT_THROW(remote.embed(" "), Error);
}

TEST(RemoteEmbedder, EngineIngestsThroughRemoteProvider) {
  FakeEmbedServer server;
  auto config = testing::test_config();
  config.embedder.provider = ProviderKind::remote;
  config.embedder.remote_endpoint = server.endpoint();
  Engine remote(config);
  remote.ingest_files(testing::kFixtureDir / "nodes.jsonl", testing::kFixtureDir / "edges.jsonl");
  const auto local = testing::fixture_engine();
  for (NodeIndex v = 0; v < 5; ++v) EXPECT_EQ(remote.encodings()[v].values, local.encodings()[v].values);
}

TEST(MakeProvider, ValidatesConfig) {
  EmbedderConfig c;
  c.provider = ProviderKind::remote;
  EXPECT_THROW(make_provider(c), Error);
  c.remote_endpoint = "http://127.0.0.1:1";
  EXPECT_EQ(make_provider(c)->dim(), 64u);
  EmbedderConfig builtin;
  builtin.dim = 16;
  EXPECT_EQ(make_provider(builtin)->embed("graph").dim(), 16u);
}

}  // namespace
}  // namespace fusegraph
