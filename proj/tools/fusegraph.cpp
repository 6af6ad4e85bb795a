// fusegraph: command-line front end for ingesting a literature graph,
// applying incremental updates, searching, benchmarking and serving.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "fusegraph/bench.hpp"
#include "fusegraph/config.hpp"
#include "fusegraph/engine.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph_io.hpp"
#include "fusegraph/retrieval.hpp"
#include "fusegraph/service.hpp"

namespace fs = std::filesystem;
using namespace fusegraph;

namespace {

struct Common {
  std::string config_flag;
  std::string snapshot_flag;

  EngineConfig config() const {
    if (auto path = resolve_config_path(config_flag)) return EngineConfig::load(*path);
    return EngineConfig{};
  }

  fs::path snapshot(const EngineConfig& c) const {
    return snapshot_flag.empty() ? fs::path(c.snapshot_path) : fs::path(snapshot_flag);
  }
};

/// The snapshot carries its own config; a config file given alongside it
/// only has to agree on the fields that shape stored state.
Engine load_engine(const Common& common) {
  const auto cfg = common.config();
  return Engine::load(common.snapshot(cfg));
}

void print(const nlohmann::ordered_json& j) { std::cout << j.dump() << '\n'; }

int cmd_ingest(const Common& common, const std::string& nodes, const std::string& edges) {
  const auto cfg = common.config();
  Engine engine(cfg);
  const auto summary = engine.ingest_files(nodes, edges);
  engine.save(common.snapshot(cfg));
  print(summary.to_json());
  return 0;
}

int cmd_update(const Common& common, const std::string& nodes_path, const std::string& edges_path) {
  if (nodes_path.empty() && edges_path.empty())
    throw Error(ErrorCode::InvalidArgument, "update needs --nodes and/or --edges");
  auto engine = load_engine(common);
  const auto nodes = nodes_path.empty() ? std::vector<Node>{} : read_nodes_jsonl(fs::path(nodes_path));
  const auto edges = edges_path.empty() ? std::vector<Edge>{} : read_edges_jsonl(fs::path(edges_path));
  const auto summary = engine.update(nodes, edges);
  engine.save(common.snapshot(engine.config()));
  print(summary.to_json());
  return 0;
}

int cmd_build_index(const Common& common) {
  auto engine = load_engine(common);
  engine.rebuild_index();
  engine.save(common.snapshot(engine.config()));
  const auto& idx = engine.index();
  print({{"indexed", idx.size()}, {"clusters", idx.cluster_count()}, {"active_dim", idx.active_dim()},
         {"probe_count", idx.probe_count()}});
  return 0;
}

struct SearchArgs {
  std::string query;
  std::string granularity;
  std::string relation;
  std::optional<int> k;
  std::string ref_date;
  bool intent_only = false;
};

int cmd_search(const Common& common, const SearchArgs& args) {
  const auto engine = load_engine(common);
  const auto ref = args.ref_date.empty() ? today_utc() : args.ref_date;
  auto outcome = engine.parse_intent(args.query, ref);
  if (outcome.warning) std::cerr << "warning: " << *outcome.warning << '\n';
  auto& intent = outcome.intent;
  if (!args.granularity.empty()) {
    if (args.granularity == "all") intent.granularity.reset();
    else if (auto g = parse_node_kind(args.granularity)) intent.granularity = *g;
    else throw Error(ErrorCode::InvalidArgument, "unknown granularity " + args.granularity);
  }
  if (!args.relation.empty()) {
    auto r = parse_relation(args.relation);
    if (!r) throw Error(ErrorCode::InvalidArgument, "unknown relation " + args.relation);
    intent.relation_type = *r;
  }
  if (args.k) intent.k = *args.k;
  if (args.intent_only) {
    print(to_json(intent));
    return 0;
  }
  std::cout << to_programmable_format(engine.search(intent)) << '\n';
  return 0;
}

int cmd_bench(const std::string& suite, std::size_t n, std::uint64_t seed, const std::string& out) {
  std::vector<std::string> suites;
  if (suite == "all") suites = bench::suite_names();
  else suites.push_back(suite);
  bool ok = true;
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (const auto& name : suites) {
    const auto report = bench::run_suite(name, {n, seed});
    for (const auto& c : report.criteria)
      std::cerr << (c.pass ? "PASS " : "FAIL ") << report.suite << '/' << c.name << '\n';
    ok = ok && report.passed();
    all.push_back(report.to_json());
  }
  const auto doc = suites.size() == 1 ? all.front() : all;
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    f << doc.dump(2) << '\n';
  }
  return ok ? 0 : 1;
}

int cmd_generate(std::size_t n, std::size_t papers, std::uint64_t seed, const std::string& out) {
  auto spec = bench::SyntheticSpec::for_nodes(n, seed);
  if (papers != 0) spec.papers = papers;
  const auto corpus = bench::generate(spec);
  bench::write_corpus(corpus, out);
  print({{"nodes", corpus.nodes.size()}, {"edges", corpus.edges.size()}, {"out", out}});
  return 0;
}

std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--addr must be host:port");
  try {
    return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad port in " + addr);
  }
}

int cmd_serve(const Common& common, const std::string& addr, const std::string& ref_date, bool persist) {
  // Block termination signals before any thread starts; a dedicated thread
  // waits for them and shuts the server down.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto engine = load_engine(common);
  ServiceOptions options;
  options.reference_date = ref_date;
  if (persist) options.persist_path = common.snapshot(engine.config()).string();
  Service service(std::move(engine), options);
  const auto [host, port] = split_addr(addr);
  const int bound = service.bind(host, port);
  std::cerr << "fusegraph listening on " << host << ':' << bound << '\n';

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.serve();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fusegraph - graph/vector fusion retrieval over literature graphs"};
  app.require_subcommand(1);
  app.fallthrough();  // global options are accepted after the subcommand too
  Common common;
  app.add_option("--config", common.config_flag, "Config file (default: $FUSEGRAPH_CONFIG)");
  app.add_option("--snapshot", common.snapshot_flag, "Snapshot path (default: config snapshot_path)");

  std::string nodes, edges;
  auto* ingest = app.add_subcommand("ingest", "Build every layer from JSONL files and write a snapshot");
  ingest->add_option("--nodes", nodes, "Nodes JSONL")->required();
  ingest->add_option("--edges", edges, "Edges JSONL")->required();

  std::string up_nodes, up_edges;
  auto* update = app.add_subcommand("update", "Apply new or changed nodes and edges to the snapshot");
  update->add_option("--nodes", up_nodes, "Nodes JSONL");
  update->add_option("--edges", up_edges, "Edges JSONL");

  auto* build = app.add_subcommand("build-index", "Re-cluster the index from current encodings");

  SearchArgs sargs;
  auto* search = app.add_subcommand("search", "Parse a natural-language query and search");
  search->add_option("--query", sargs.query, "Query text")->required();
  search->add_option("--granularity", sargs.granularity, "paper | section | knowledge_unit | all");
  search->add_option("--relation", sargs.relation, "citation | inclusion | association");
  search->add_option("--k", sargs.k, "Number of results");
  search->add_option("--ref-date", sargs.ref_date, "Reference date YYYY-MM-DD (default: today, UTC)");
  search->add_flag("--intent-only", sargs.intent_only, "Print the parsed intent and stop");

  std::string suite = "all", bench_out;
  std::size_t bench_n = 0;
  std::uint64_t bench_seed = 1;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite and print its report");
  bench_cmd->add_option("--suite", suite, "update_perf | recall | storage | metric_props | theorem_checks | all");
  bench_cmd->add_option("--n", bench_n, "Corpus size (default: per-criterion size)");
  bench_cmd->add_option("--seed", bench_seed, "Seed");
  bench_cmd->add_option("--out", bench_out, "Write the report here instead of stdout");

  std::size_t gen_n = 1000, gen_papers = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic corpus as nodes.jsonl/edges.jsonl");
  generate->add_option("--n", gen_n, "Approximate node count");
  generate->add_option("--papers", gen_papers, "Exact paper count (overrides --n)");
  generate->add_option("--seed", gen_seed, "Seed");
  generate->add_option("--out", gen_out, "Output directory")->required();

  std::string addr = "127.0.0.1:8080", serve_ref;
  bool persist = false;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API over a snapshot");
  serve->add_option("--addr", addr, "host:port");
  serve->add_option("--ref-date", serve_ref, "Reference date for text queries (default: today, UTC)");
  serve->add_flag("--persist", persist, "Write the snapshot after every mutation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(common, nodes, edges);
    if (*update) return cmd_update(common, up_nodes, up_edges);
    if (*build) return cmd_build_index(common);
    if (*search) return cmd_search(common, sargs);
    if (*bench_cmd) return cmd_bench(suite, bench_n, bench_seed, bench_out);
    if (*generate) return cmd_generate(gen_n, gen_papers, gen_seed, gen_out);
    if (*serve) return cmd_serve(common, addr, serve_ref, persist);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
