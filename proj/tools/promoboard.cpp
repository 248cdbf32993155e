// Command-line entry point: corpus ingestion and the API server.
#include <httplib.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "promoboard/association_graph.hpp"
#include "promoboard/corpus.hpp"
#include "promoboard/error.hpp"
#include "promoboard/providers.hpp"
#include "promoboard/server.hpp"
#include "promoboard/util.hpp"

namespace fs = std::filesystem;
using namespace promoboard;
using nlohmann::json;

namespace {

providers::ProviderConfig provider_config(const std::string& mode, std::uint64_t seed) {
  auto config = providers::ProviderConfig::from_env(mode == "live" ? providers::Mode::live : providers::Mode::mock,
                                                    [](const std::string& name) -> std::optional<std::string> {
                                                      if (const char* v = std::getenv(name.c_str())) return v;
                                                      return std::nullopt;
                                                    });
  config.mock_seed = seed;
  config.validate();
  return config;
}

std::ifstream open_input(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, std::string("cannot open ") + what + " '" + path.string() + "'");
  return in;
}

graph::AssociationGraph load_graph(const fs::path& associations, const std::optional<fs::path>& lexicon) {
  auto in = open_input(associations, "associations file");
  const auto rows = graph::parse_association_csv(in);
  auto g = graph::AssociationGraph::ingest(rows);
  if (lexicon) {
    auto lex = open_input(*lexicon, "lexicon file");
    g.set_lexicon(graph::parse_lexicon_csv(lex));
  }
  return g;
}

// Relative record uris are rewritten against the output directory so the
// index stays usable wherever it is served from.
corpus::CorpusIndex relocate(const corpus::CorpusIndex& index, const fs::path& from, const fs::path& to) {
  corpus::CorpusIndex out;
  out.id_counter = index.id_counter;
  for (const auto& [id, record] : index.records()) {
    auto copy = record;
    if (!copy.uri.starts_with("blob:") && fs::path(copy.uri).is_relative() && !copy.uri.starts_with("http")) {
      copy.uri = fs::relative(fs::absolute(from / copy.uri), fs::absolute(to)).generic_string();
    }
    out.add(std::move(copy));
  }
  return out;
}

int run_ingest(const fs::path& manifest, const fs::path& associations, const std::optional<fs::path>& lexicon,
               std::optional<fs::path> out_dir, const std::string& mode, std::uint64_t seed) {
  const auto graph = load_graph(associations, lexicon);
  auto in = open_input(manifest, "manifest");
  const auto rows = corpus::parse_manifest(in);

  const fs::path base_dir = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  if (!out_dir) out_dir = base_dir;
  fs::create_directories(*out_dir);
  const fs::path index_path = *out_dir / "corpus-index.json";
  const fs::path graph_path = *out_dir / "association-graph.json";

  corpus::CorpusIndex existing;
  if (fs::exists(index_path)) existing = corpus::index_from_json(json::parse(to_string(read_file(index_path.string()))));

  auto suite = providers::make_suite(provider_config(mode, seed));
  const auto report = corpus::ingest_manifest(rows, base_dir, graph, suite, std::move(existing));
  for (const auto& s : report.skipped) {
    std::cerr << "warning: line " << s.line << " (" << s.id << "): skipped, " << s.reason << "\n";
  }
  const auto index = relocate(report.index, base_dir, *out_dir);

  write_file(index_path.string(), corpus::index_to_json(index).dump());
  write_file(graph_path.string(), graph.to_json().dump());

  std::cout << "records: " << index.size() << "\n"
            << "keywords: " << index.keyword_index().size() << "\n"
            << "object tags: " << index.object_index().size() << "\n"
            << "annotated: " << report.annotated << ", resumed: " << report.resumed
            << ", skipped: " << report.skipped.size() << "\n"
            << "graph: " << graph.node_count() << " words, " << graph.edge_count() << " edges\n"
            << "wrote " << index_path.string() << " and " << graph_path.string() << "\n";
  return 0;
}

httplib::Server* g_server = nullptr;

int run_serve(const fs::path& index_path, const fs::path& graph_path, const std::string& host, int port,
              const fs::path& data_dir, const std::string& mode, std::uint64_t seed, std::size_t max_in_flight) {
  const auto graph = graph::AssociationGraph::from_json(json::parse(to_string(read_file(graph_path.string()))));
  auto index = corpus::index_from_json(json::parse(to_string(read_file(index_path.string()))));

  fs::create_directories(data_dir);
  auto blobs = std::make_shared<corpus::BlobStore>(data_dir / "blobs");
  const fs::path base_dir = index_path.parent_path().empty() ? fs::path(".") : index_path.parent_path();
  corpus::Corpus corpus(std::move(index), blobs, base_dir, seed);
  corpus.replay_append_log(data_dir / "records.jsonl");
  corpus.set_append_log(data_dir / "records.jsonl");

  auto config = provider_config(mode, seed);
  auto suite = providers::make_suite(config);
  if (max_in_flight > 0) suite = providers::limit_in_flight(std::move(suite), max_in_flight);

  Services services{graph, corpus, suite};
  server::ApiOptions options;
  options.studio.rng_seed = seed;
  options.canvas_dir = data_dir / "canvases";
  server::Api api(services, options);

  httplib::Server http;
  http.set_read_timeout(std::chrono::seconds(30));
  http.set_write_timeout(std::chrono::seconds(30));
  api.install(http);

  if (port == 0) {
    port = http.bind_to_any_port(host);
  } else if (!http.bind_to_port(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  if (port < 0) {
    std::cerr << "error: cannot bind " << host << "\n";
    return 1;
  }
  g_server = &http;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  std::cout << "listening on " << host << ":" << port << " (" << corpus.size() << " images, " << mode
            << " providers)" << std::endl;
  http.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promoboard: promotional post design studio"};
  app.require_subcommand(1);

  std::string mode = "mock";
  std::uint64_t seed = 0;

  auto* ingest = app.add_subcommand("ingest", "Annotate an image manifest and snapshot the association graph");
  fs::path manifest, associations;
  std::optional<fs::path> lexicon, out_dir;
  ingest->add_option("--manifest", manifest, "JSON Lines image manifest")->required();
  ingest->add_option("--associations", associations, "cue,response,count CSV")->required();
  ingest->add_option("--lexicon", lexicon, "word,concreteness,imageability CSV");
  ingest->add_option("--out", out_dir, "Output directory (default: the manifest's directory)");
  ingest->add_option("--providers", mode, "Provider mode")->check(CLI::IsMember({"mock", "live"}));
  ingest->add_option("--seed", seed, "Mock provider seed");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  fs::path index_path, graph_path, data_dir = "promoboard-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_in_flight = 4;
  serve->add_option("--index", index_path, "corpus-index.json written by ingest")->required();
  serve->add_option("--graph", graph_path, "association-graph.json written by ingest")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--data-dir", data_dir, "Blobs, appended records and canvas documents");
  serve->add_option("--providers", mode, "Provider mode")->check(CLI::IsMember({"mock", "live"}));
  serve->add_option("--seed", seed, "Mock provider and sampling seed");
  serve->add_option("--max-in-flight", max_in_flight, "Concurrent provider calls (0 = unbounded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return run_ingest(manifest, associations, lexicon, out_dir, mode, seed);
    return run_serve(index_path, graph_path, host, port, data_dir, mode, seed, max_in_flight);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
