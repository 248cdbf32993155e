#include "support.hpp"

#include <cstdlib>
#include <set>

#include "oracles.hpp"
#include "promoboard/color.hpp"
#include "promoboard/context_explorer.hpp"
#include "promoboard/error.hpp"
#include "promoboard/studio.hpp"
#include "promoboard/util.hpp"

namespace pbtest {

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "promoboard-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path, ec);
}

std::vector<graph::AssociationRow> rows_of(const std::vector<Association>& edges) {
  std::vector<graph::AssociationRow> rows;
  for (const auto& [cue, response, count] : edges) rows.push_back({cue, response, count, rows.size() + 2});
  return rows;
}

graph::AssociationGraph graph_of(const std::vector<Association>& edges) {
  const auto rows = rows_of(edges);
  return graph::AssociationGraph::ingest(rows);
}

std::vector<std::uint8_t> solid_png(image::Rgb color, std::uint32_t w, std::uint32_t h, const image::Metadata& metadata) {
  return image::encode_png(image::Raster(w, h, color), metadata);
}

image::Raster noise_raster(std::uint64_t seed, std::uint32_t w, std::uint32_t h) {
  std::mt19937_64 rng(seed);
  image::Raster r(w, h);
  for (auto& v : r.rgb) v = static_cast<std::uint8_t>(rng() & 0xFF);
  return r;
}

std::string RecordingChat::complete(const std::string& prompt) {
  {
    std::lock_guard lock(mutex_);
    prompts_.push_back(prompt);
  }
  return inner_->complete(prompt);
}

std::vector<std::string> RecordingChat::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

std::vector<std::uint8_t> RecordingImageGen::generate(const std::string& prompt) {
  {
    std::lock_guard lock(mutex_);
    prompts_.push_back(prompt);
  }
  return inner_->generate(prompt);
}

std::vector<std::string> RecordingImageGen::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

std::vector<providers::Label> RecordingClassify::classify(const std::string& text,
                                                          const std::vector<std::string>& labels) {
  texts.push_back(text);
  return inner_.classify(text, labels);
}

std::string ScriptedChat::complete(const std::string&) {
  const auto i = std::min(calls, replies_.size() - 1);
  ++calls;
  return replies_[i];
}

std::vector<std::uint8_t> FailingImageGen::generate(const std::string&) {
  throw providers::ProviderError(providers::Capability::image_gen, providers::FailureKind::timeout, "deadline exceeded");
}

std::unique_ptr<Fixture> make_fixture(const std::vector<Association>& edges, const std::vector<ToyImage>& images,
                                      std::uint64_t seed, std::uint32_t image_size) {
  auto f = std::make_unique<Fixture>();
  f->graph = graph_of(edges);
  f->blobs = std::make_shared<corpus::BlobStore>();

  corpus::CorpusIndex index;
  for (const auto& toy : images) {
    std::string objects;
    for (const auto& o : toy.objects) objects += (objects.empty() ? "" : ",") + o;
    image::Metadata meta{{"Objects", objects}};
    if (!toy.keywords.empty()) meta["Description"] = "image of " + toy.keywords.front();
    const auto png = solid_png(toy.color, image_size, image_size, meta);
    corpus::ImageRecord r;
    r.id = toy.id;
    r.uri = "blob:" + f->blobs->put(png);
    r.keywords = toy.keywords;
    for (const auto& k : toy.keywords) {
      if (!f->graph.contains(k)) r.out_of_vocabulary.push_back(k);
    }
    r.objects = toy.objects;
    corpus::annotate_pixels(r, image::decode(png));
    index.add(std::move(r));
  }
  f->corpus = std::make_unique<corpus::Corpus>(std::move(index), f->blobs, fs::path{}, seed);

  auto config = providers::ProviderConfig::uniform(providers::Mode::mock);
  config.mock_seed = seed;
  config.mock_image_size = 32;
  f->suite = providers::make_suite(config);
  f->chat = std::make_shared<RecordingChat>(f->suite.chat);
  f->image_gen = std::make_shared<RecordingImageGen>(f->suite.image_gen);
  f->suite.chat = f->chat;
  f->suite.image_gen = f->image_gen;
  f->services = std::make_unique<Services>(Services{f->graph, *f->corpus, f->suite});
  return f;
}

const std::vector<Association> kToyAssociations = {
    {"juice", "orange", 5}, {"juice", "fruit", 3},  {"orange", "fruit", 2}, {"fruit", "breakfast", 1},
    {"health", "juice", 2}, {"health", "salad", 3}, {"sea", "water", 4},    {"coffee", "breakfast", 2},
    {"coffee", "cafe", 3},  {"salad", "bowl", 1},
};

const std::vector<ToyImage> kToyImages = {
    {"juice1", {240, 140, 20}, {"juice", "orange"}, {"bottle", "cup"}},
    {"juice2", {250, 200, 40}, {"juice"}, {"bottle"}},
    {"juice3", {200, 30, 30}, {"juice", "health"}, {"cup"}},
    {"fruit1", {40, 180, 40}, {"fruit"}, {"apple", "bowl"}},
    {"salad1", {60, 200, 80}, {"salad", "health"}, {"bowl"}},
    {"sea1", {20, 40, 200}, {"sea", "water"}, {}},
    {"coffee1", {90, 60, 40}, {"coffee", "cafe"}, {"cup"}},
    {"bfast1", {230, 220, 200}, {"breakfast"}, {"cup", "table"}},
};

std::unique_ptr<Fixture> toy_fixture(std::uint64_t seed) { return make_fixture(kToyAssociations, kToyImages, seed); }

SyntheticWorld synthetic_world(std::uint64_t seed, std::size_t images, std::size_t words) {
  std::mt19937_64 rng(seed);
  const auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  const auto word = [](std::size_t i) { return "w" + std::to_string(100 + i); };

  SyntheticWorld world;
  for (std::size_t i = 0; i < words; ++i) {
    const auto out = pick(4);
    for (std::size_t e = 0; e < out; ++e) {
      world.rows.push_back({word(i), word(pick(words)), static_cast<std::int64_t>(1 + pick(9)), world.rows.size() + 2});
    }
  }
  world.graph = graph::AssociationGraph::ingest(world.rows);

  std::vector<image::Rgb> used;
  for (std::size_t i = 0; i < images; ++i) {
    corpus::ImageRecord r;
    r.id = "img" + std::to_string(1000 + i);
    r.uri = "blob:none";
    const auto nk = 1 + pick(3);
    for (std::size_t k = 0; k < nk; ++k) {
      // A few keywords sit outside the graph vocabulary.
      const std::string w = pick(20) == 0 ? "oov" + std::to_string(pick(3)) : word(pick(words));
      if (!r.has_keyword(w)) r.keywords.push_back(w);
    }
    for (const auto& k : r.keywords) {
      if (!world.graph.contains(k)) r.out_of_vocabulary.push_back(k);
    }
    const auto no = pick(4);
    for (std::size_t o = 0; o < no; ++o) {
      const std::string tag = "o" + std::to_string(pick(8));
      if (!r.has_object(tag)) r.objects.push_back(tag);
    }
    if (!used.empty() && pick(10) == 0) {
      r.dominant = used[pick(used.size())];
    } else {
      r.dominant = {static_cast<std::uint8_t>(pick(256)), static_cast<std::uint8_t>(pick(256)),
                    static_cast<std::uint8_t>(pick(256))};
      used.push_back(r.dominant);
    }
    r.palette = {{r.dominant, 1}};
    r.width = r.height = 1;
    world.index.add(std::move(r));
  }
  return world;
}

std::optional<std::string> check_priority_rule(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto coin = [&rng] { return rng() % 2 == 0; };
  const auto random_color = [&rng] {
    return image::Rgb{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
  };
  const std::vector<Association> edges = {
      {"alpha", "gamma", 2}, {"beta", "delta", 1}, {"gamma", "delta", 3}, {"delta", "gamma", 1}, {"beta", "alpha", 1}};
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};

  std::vector<ToyImage> images{{"seed", random_color(), {"alpha"}, {"cup"}}};
  const std::size_t n = 10 + rng() % 21;
  for (std::size_t i = 0; i < n; ++i) {
    ToyImage img{"i" + std::to_string(100 + i), random_color(), {}, {}};
    // The first two guarantee a both-keyword and a context-only image.
    if (i == 0) img.keywords = {"alpha", "beta"};
    if (i == 1) img.keywords = {"beta"};
    if (i > 1) {
      for (const auto& w : words) {
        if (coin()) img.keywords.push_back(w);
      }
      if (img.keywords.empty()) img.keywords.push_back(words[rng() % words.size()]);
    }
    if (coin()) img.objects.push_back("cup");
    if (coin()) img.objects.push_back("bowl");
    images.push_back(img);
  }
  auto f = make_fixture(edges, images, seed, 4);

  const image::Rgb context_color = random_color();
  const auto context_png = solid_png(context_color, 4, 4, {{"Description", "image of beta"}, {"Objects", "cup"}});
  const auto result = explore::explore_images_with_image(f->svc(), "seed", context_png);
  const auto& rec = result.recommendation;

  const auto index = f->corpus->snapshot();
  const auto& s = index.at("seed");
  const auto context_dominant = oracle::median_cut(image::decode(context_png), 10).front().color;
  image::Rgb target{};
  double best = 1e9;
  for (const auto& named : color::basic_color_names()) {
    const double d = oracle::delta_e(context_dominant, named.rgb);
    if (d < best) {
      best = d;
      target = named.rgb;
    }
  }

  using Key = std::tuple<int, double, std::string>;
  const auto top4 = [](std::vector<Key> keys) {
    std::sort(keys.begin(), keys.end());
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < keys.size() && i < 4; ++i) ids.push_back(std::get<2>(keys[i]));
    return ids;
  };
  const auto has = [](const corpus::ImageRecord& r, const std::string& k) {
    return std::find(r.keywords.begin(), r.keywords.end(), k) != r.keywords.end();
  };
  std::vector<Key> semantic, colour, object;
  const auto adjacency = oracle::normalize(rows_of(edges));
  for (const auto& [id, r] : index.records()) {
    if (id == "seed") continue;
    if (has(r, "beta")) semantic.emplace_back(has(r, "alpha") ? 0 : 1, oracle::delta_e(r.dominant, s.dominant), id);
    if (std::find(r.objects.begin(), r.objects.end(), "cup") != r.objects.end()) {
      object.emplace_back(has(r, "beta") ? 0 : 1, oracle::delta_e(r.dominant, context_dominant), id);
    }
  }
  for (const auto& id : oracle::concept_ids(index, adjacency, {"alpha", "beta"})) {
    if (id == "seed") continue;
    const auto& r = index.at(id);
    colour.emplace_back(has(r, "beta") ? 0 : 1, oracle::delta_e(r.dominant, target), id);
  }

  const auto describe = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& x : v) out += x + " ";
    return out;
  };
  if (result.keywords.semantic != "beta") return "semantic keyword was " + result.keywords.semantic.value_or("none");
  if (result.keywords.seed_semantic != "alpha") return std::string("seed keyword was not alpha");
  if (result.keywords.object != "cup") return std::string("object keyword was not cup");
  if (rec.semantic != top4(semantic)) return "semantic row " + describe(rec.semantic) + "!= " + describe(top4(semantic));
  if (rec.color != top4(colour)) return "colour row " + describe(rec.color) + "!= " + describe(top4(colour));
  if (rec.object != top4(object)) return "object row " + describe(rec.object) + "!= " + describe(top4(object));
  // The guaranteed both-keyword image must lead the semantic row.
  if (rec.semantic.empty() || !has(index.at(rec.semantic.front()), "alpha")) {
    return std::string("a both-keyword image did not come first");
  }
  return std::nullopt;
}

namespace {

std::optional<std::string> integrity_problem(const canvas::Canvas& c) {
  std::set<std::string> ids;
  for (const auto& b : c.blocks()) {
    if (!ids.insert(b.id).second) return "duplicate block " + b.id;
  }
  for (const auto& t : c.tombstones()) {
    if (ids.count(t.block_id)) return "tombstoned block still present: " + t.block_id;
  }
  std::set<std::string> edge_ids;
  for (const auto& e : c.edges()) {
    if (!edge_ids.insert(e.id).second) return "duplicate edge " + e.id;
    if (!ids.count(e.from) || !ids.count(e.to)) return "dangling edge " + e.id;
    if (e.from == e.to) return "self loop " + e.id;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> check_canvas_sequence(Fixture& fixture, std::uint64_t seed, std::size_t steps) {
  using canvas::BlockKind;
  using canvas::EdgeKind;
  std::mt19937_64 rng(seed);
  const auto below = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  studio::Studio studio(fixture.svc(), {seed, 4});
  canvas::Canvas c("c" + std::to_string(seed));

  static const char* kTexts[] = {"fresh juice", "healthy salad", "sea breeze", "morning coffee", "fruit bowl"};
  static const char* kActions[] = {"explore", "fuse", "compose"};
  const auto image_ids = [&fixture] {
    return fixture.corpus->read([](const corpus::CorpusIndex& index) {
      std::vector<std::string> ids;
      for (const auto& [id, r] : index.records()) {
        if (r.source == corpus::RecordSource::manifest) ids.push_back(id);
      }
      return ids;
    });
  }();
  const auto random_block = [&]() -> std::string {
    if (c.blocks().empty() || below(10) == 0) return "b999";
    return c.blocks()[below(c.blocks().size())].id;
  };

  for (std::size_t step = 0; step < steps; ++step) {
    const std::string before = canvas::save(c);
    const auto revision = c.revision();
    const auto edges_before = c.edges().size();
    std::optional<EdgeKind> expected_kind;
    std::string what;
    bool ok = true;
    try {
      switch (below(10)) {
        case 0:
          what = "create";
          if (below(2)) {
            studio.create_block(c, canvas::TextPayload{kTexts[below(5)], {}});
          } else {
            studio.create_block(c, canvas::ImagePayload{image_ids[below(image_ids.size())], {}});
          }
          break;
        case 1:
        case 2: {
          what = "generate";
          expected_kind = EdgeKind::exploration;
          const auto kind = static_cast<studio::GenerateWhat>(below(3));
          studio::GenerateOptions options;
          if (kind == studio::GenerateWhat::post && below(3) == 0) options.partner = random_block();
          studio.generate_from(c, random_block(), kind, options);
          break;
        }
        case 3:
        case 4: {
          what = "link";
          expected_kind = EdgeKind::customization;
          std::optional<std::string> action;
          if (below(3) == 0) action = kActions[below(3)];
          studio.link(c, random_block(), random_block(), action);
          break;
        }
        case 5: {
          what = "pick";
          expected_kind = EdgeKind::exploration;
          const auto source = random_block();
          studio::PickSpec spec;
          if (const auto* b = c.find(source)) {
            if (const auto* r = std::get_if<canvas::SearchResults>(&b->payload); r && !r->ids.empty()) {
              spec.image_id = r->ids[below(r->ids.size())];
            } else if (const auto* r = std::get_if<recommend::ImageRecommendation>(&b->payload);
                       r && !r->color.empty()) {
              spec.image_id = r->color[below(r->color.size())];
            }
          }
          if (!spec.image_id) {
            spec.dimension = static_cast<captions::Dimension>(below(3));
            spec.index = below(4);
          }
          studio.pick(c, source, spec);
          break;
        }
        case 6:
          what = "move";
          c.move_block(random_block(), {double(below(2000)), double(below(2000))});
          break;
        case 7:
          what = "remove";
          if (below(2) && !c.edges().empty()) {
            c.remove_edge(c.edges()[below(c.edges().size())].id);
          } else {
            c.remove_block(random_block());
          }
          break;
        case 8:
          what = "layout";
          c.auto_layout();
          break;
        case 9:
          what = "regenerate";
          expected_kind = EdgeKind::exploration;
          studio.regenerate(c, random_block());
          break;
      }
    } catch (const Error&) {
      ok = false;
    }
    const std::string where = "step " + std::to_string(step) + " (" + what + "): ";
    if (!ok) {
      if (canvas::save(c) != before) return where + "failed action changed the canvas";
      continue;
    }
    if (c.revision() <= revision) return where + "revision did not grow";
    if (expected_kind) {
      if (c.edges().size() <= edges_before) return where + "no edge recorded";
      for (std::size_t i = edges_before; i < c.edges().size(); ++i) {
        if (c.edges()[i].kind != *expected_kind) return where + "wrong edge kind";
      }
    }
    if (auto problem = integrity_problem(c)) return where + *problem;
    const auto loaded = canvas::load(canvas::save(c));
    if (!(loaded.canvas == c)) return where + "save/load round trip differs";
  }
  return std::nullopt;
}

std::string caption_fixture(std::size_t product, std::size_t activity, std::size_t advertisement) {
  std::string out = "Here are your captions!\n\n";
  const auto block = [&out](const char* header, std::size_t n, const char* stem) {
    out += std::string("### ") + header + "\n";
    for (std::size_t i = 0; i < n; ++i) {
      out += std::to_string(i + 1) + ". " + stem + " *fresh* pick " + std::to_string(i + 1) + " \xF0\x9F\x8D\x8A\n";
    }
    out += "\n";
  };
  block("Product", product, "Squeeze the day with our");
  block("Activity", activity, "Join the");
  block("Advertisement", advertisement, "Don't miss the");
  return out;
}

}  // namespace pbtest
