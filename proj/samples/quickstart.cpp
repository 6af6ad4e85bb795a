// Builds an engine over a small corpus, runs a natural-language query and
// applies an incremental update.
//
//   quickstart [nodes.jsonl edges.jsonl]

#include <iostream>
#include <string>
#include <vector>

#include "fusegraph/engine.hpp"

int main(int argc, char** argv) {
  using namespace fusegraph;
  const std::string nodes = argc > 2 ? argv[1] : FUSEGRAPH_FIXTURE_DIR "/nodes.jsonl";
  const std::string edges = argc > 2 ? argv[2] : FUSEGRAPH_FIXTURE_DIR "/edges.jsonl";

  try {
    Engine engine;
    const auto summary = engine.ingest_files(nodes, edges);
    std::cout << "ingested " << summary.to_json().dump() << '\n';

    const auto result = engine.search_text("papers since 2019 about manifold indexing", "2024-01-01");
    for (const auto& e : result.entries)
      std::cout << "  " << e.id << " (" << to_string(e.kind) << ") score=" << e.score << '\n';

    const std::vector<Node> added{{"P3", NodeKind::paper, "Temporal metrics for time-aware ranking", 1640995200}};
    const std::vector<Edge> links{{"P3", "P2", RelationType::citation}};
    std::cout << "update " << engine.update(added, links).to_json().dump() << '\n';

    std::cout << to_programmable_format(engine.search_text("time-aware ranking", "2024-01-01")) << '\n';
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
