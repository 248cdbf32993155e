#include "promoboard/canvas.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "promoboard/error.hpp"
#include "promoboard/util.hpp"

namespace promoboard::canvas {

using nlohmann::json;

namespace {

constexpr double kColumnGap = 80;
constexpr double kRowGap = 32;
constexpr double kTreeGap = 64;

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::optional<PostTemplate> post_template_from_string(std::string_view s) {
  if (s == "caption_below") return PostTemplate::caption_below;
  if (s == "caption_overlay") return PostTemplate::caption_overlay;
  return std::nullopt;
}

std::optional<EdgeKind> edge_kind_from_string(std::string_view s) {
  if (s == "exploration") return EdgeKind::exploration;
  if (s == "customization") return EdgeKind::customization;
  return std::nullopt;
}

// Schema-checked field access; errors name the JSON path.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) violation("expected an object");
  }

  [[noreturn]] void violation(const std::string& what, std::string_view key = {}) const {
    const std::string at = key.empty() ? path_ : path_ + "." + std::string(key);
    fail(ErrorCode::bad_request, "schema violation at " + at + ": " + what);
  }

  const json& field(std::string_view key) const {
    auto it = node_.find(key);
    if (it == node_.end()) violation("missing field", key);
    return *it;
  }
  std::string path(std::string_view key) const { return path_ + "." + std::string(key); }

  std::string string(std::string_view key) const {
    const json& v = field(key);
    if (!v.is_string()) violation("expected a string", key);
    return v.get<std::string>();
  }
  std::optional<std::string> optional_string(std::string_view key) const {
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) violation("expected a string or null", key);
    return it->get<std::string>();
  }
  std::uint64_t unsigned_int(std::string_view key) const {
    const json& v = field(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      violation("expected a non-negative integer", key);
    }
    return v.get<std::uint64_t>();
  }
  double number(std::string_view key) const {
    const json& v = field(key);
    if (!v.is_number()) violation("expected a number", key);
    return v.get<double>();
  }
  bool boolean(std::string_view key, bool fallback) const {
    auto it = node_.find(key);
    if (it == node_.end()) return fallback;
    if (!it->is_boolean()) violation("expected a boolean", key);
    return it->get<bool>();
  }
  std::vector<std::string> strings(std::string_view key, bool required = true) const {
    auto it = node_.find(key);
    if (it == node_.end()) {
      if (required) violation("missing field", key);
      return {};
    }
    if (!it->is_array()) violation("expected an array of strings", key);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_string()) violation("expected a string", std::string(key) + "[" + std::to_string(i) + "]");
      out.push_back((*it)[i].get<std::string>());
    }
    return out;
  }
  const json& array(std::string_view key) const {
    const json& v = field(key);
    if (!v.is_array()) violation("expected an array", key);
    return v;
  }
  Reader object(std::string_view key) const { return Reader(field(key), path(key)); }

  /// Members of this object not in `known`.
  json unknown(std::initializer_list<std::string_view> known) const {
    json extra = json::object();
    for (const auto& [k, v] : node_.items()) {
      if (std::find(known.begin(), known.end(), k) == known.end()) extra[k] = v;
    }
    return extra;
  }

 private:
  const json& node_;
  std::string path_;
};

Payload payload_from_reader(BlockKind kind, const Reader& r) {
  switch (kind) {
    case BlockKind::text: return TextPayload{r.string("text"), r.strings("history", false)};
    case BlockKind::image: return ImagePayload{r.string("image_id"), r.strings("history", false)};
    case BlockKind::post: {
      PostComposition post{r.optional_string("image"), r.optional_string("caption"), PostTemplate::caption_below};
      if (auto t = r.optional_string("template")) {
        const auto parsed = post_template_from_string(*t);
        if (!parsed) r.violation("unknown post template '" + *t + "'", "template");
        post.layout = *parsed;
      }
      return post;
    }
    case BlockKind::search_results:
      return SearchResults{r.string("topic"), r.strings("ids"), r.boolean("out_of_vocabulary", false)};
    case BlockKind::image_rec: {
      recommend::ImageRecommendation rec;
      rec.seed = r.string("seed");
      rec.semantic = r.strings("semantic");
      rec.color = r.strings("color");
      rec.object = r.strings("object");
      rec.chosen_keyword = r.optional_string("chosen_keyword");
      return rec;
    }
    case BlockKind::caption_rec: {
      CaptionRecommendation rec;
      rec.seed_text = r.string("seed_text");
      const Reader set = r.object("captions");
      for (auto d : captions::kDimensions) rec.captions[d] = set.strings(captions::to_string(d));
      return rec;
    }
  }
  r.violation("unknown block kind");
}

}  // namespace

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::text: return "text";
    case BlockKind::image: return "image";
    case BlockKind::post: return "post";
    case BlockKind::search_results: return "search_results";
    case BlockKind::image_rec: return "image_rec";
    case BlockKind::caption_rec: return "caption_rec";
  }
  return "text";
}

std::optional<BlockKind> block_kind_from_string(std::string_view name) {
  for (auto k : {BlockKind::text, BlockKind::image, BlockKind::post, BlockKind::search_results, BlockKind::image_rec,
                 BlockKind::caption_rec}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(EdgeKind kind) {
  return kind == EdgeKind::exploration ? "exploration" : "customization";
}

std::string_view to_string(PostTemplate t) {
  return t == PostTemplate::caption_below ? "caption_below" : "caption_overlay";
}

Size block_size(BlockKind kind) {
  switch (kind) {
    case BlockKind::text: return {240, 96};
    case BlockKind::image: return {240, 240};
    case BlockKind::post: return {270, 338};
    case BlockKind::search_results: return {540, 160};
    case BlockKind::image_rec: return {540, 440};
    case BlockKind::caption_rec: return {540, 420};
  }
  return {240, 96};
}

BlockKind kind_of(const Payload& payload) {
  return std::visit(Overloaded{
                        [](const TextPayload&) { return BlockKind::text; },
                        [](const ImagePayload&) { return BlockKind::image; },
                        [](const PostComposition&) { return BlockKind::post; },
                        [](const SearchResults&) { return BlockKind::search_results; },
                        [](const recommend::ImageRecommendation&) { return BlockKind::image_rec; },
                        [](const CaptionRecommendation&) { return BlockKind::caption_rec; },
                    },
                    payload);
}

void validate_payload(const Payload& payload) {
  std::visit(Overloaded{
                 [](const TextPayload& p) { require(!trim(p.text).empty(), "text block needs non-empty text"); },
                 [](const ImagePayload& p) { require(!p.image_id.empty(), "image block needs an image id"); },
                 [](const PostComposition&) {},
                 [](const SearchResults&) {},
                 [](const recommend::ImageRecommendation& p) {
                   require(!p.seed.empty(), "image recommendation block needs a seed image");
                 },
                 [](const CaptionRecommendation& p) {
                   require(p.captions.well_formed(), "caption recommendation block needs a 3x3 caption set");
                 },
             },
             payload);
}

bool overlaps(const Block& a, const Block& b) {
  const Size sa = block_size(a.kind);
  const Size sb = block_size(b.kind);
  return a.position.x < b.position.x + sb.width && b.position.x < a.position.x + sa.width &&
         a.position.y < b.position.y + sb.height && b.position.y < a.position.y + sa.height;
}

// ---------------------------------------------------------------------------
// Canvas mutations

const Block* Canvas::find(std::string_view id) const {
  for (const auto& b : blocks_) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const Block& Canvas::block(std::string_view id) const {
  if (const auto* b = find(id)) return *b;
  fail(ErrorCode::not_found, "unknown block '" + std::string(id) + "'");
}

Block& Canvas::mutable_block(std::string_view id) { return const_cast<Block&>(block(id)); }

Position Canvas::free_slot(Position start, BlockKind kind) const {
  Block probe;
  probe.kind = kind;
  probe.position = start;
  for (bool moved = true; moved;) {
    moved = false;
    for (const auto& other : blocks_) {
      if (overlaps(probe, other)) {
        probe.position.y = other.position.y + block_size(other.kind).height + kRowGap;
        moved = true;
      }
    }
  }
  return probe.position;
}

std::string Canvas::create_block(Payload payload, const std::optional<std::string>& near) {
  validate_payload(payload);
  const BlockKind kind = kind_of(payload);
  Position start{0, 0};
  if (near) {
    const Block& anchor = block(*near);
    start = {anchor.position.x + block_size(anchor.kind).width + kColumnGap, anchor.position.y};
  }
  Block b;
  b.id = "b" + std::to_string(next_block_++);
  b.kind = kind;
  b.payload = std::move(payload);
  b.position = free_slot(start, kind);
  b.created_at = ++revision_;
  blocks_.push_back(std::move(b));
  return blocks_.back().id;
}

void Canvas::update_payload(std::string_view id, Payload payload) {
  Block& b = mutable_block(id);
  validate_payload(payload);
  require(kind_of(payload) == b.kind, "payload kind does not match block kind");
  b.payload = std::move(payload);
  ++revision_;
}

void Canvas::move_block(std::string_view id, Position position) {
  mutable_block(id).position = position;
  ++revision_;
}

std::string Canvas::add_edge(std::string_view from, std::string_view to, EdgeKind kind) {
  block(from);
  block(to);
  require(from != to, "an edge cannot connect a block to itself");
  edges_.push_back({"e" + std::to_string(next_edge_++), std::string(from), std::string(to), kind, json::object()});
  ++revision_;
  return edges_.back().id;
}

void Canvas::remove_block(std::string_view id) {
  const Block& b = block(id);
  tombstones_.push_back({b.id, b.kind, revision_ + 1});
  std::erase_if(edges_, [&](const Edge& e) { return e.from == id || e.to == id; });
  std::erase_if(blocks_, [&](const Block& x) { return x.id == id; });
  ++revision_;
}

void Canvas::remove_edge(std::string_view id) {
  const auto removed = std::erase_if(edges_, [&](const Edge& e) { return e.id == id; });
  if (removed == 0) fail(ErrorCode::not_found, "unknown edge '" + std::string(id) + "'");
  ++revision_;
}

void Canvas::auto_layout() {
  std::map<std::string, std::size_t, std::less<>> slot;
  for (std::size_t i = 0; i < blocks_.size(); ++i) slot[blocks_[i].id] = i;
  const std::size_t n = blocks_.size();

  std::vector<std::vector<std::size_t>> out(n);
  std::vector<bool> has_in(n, false), touched(n, false);
  for (const auto& e : edges_) {
    if (e.kind != EdgeKind::exploration) continue;
    const auto f = slot.at(e.from);
    const auto t = slot.at(e.to);
    out[f].push_back(t);
    has_in[t] = true;
    touched[f] = touched[t] = true;
  }

  // Spanning forest over exploration edges, blocks in creation order.
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<int> depth(n, -1);
  std::vector<std::size_t> roots;
  const auto grow = [&](std::size_t root) {
    roots.push_back(root);
    depth[root] = 0;
    std::vector<std::size_t> frontier{root};
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const auto u = frontier[head];
      for (auto v : out[u]) {
        if (depth[v] >= 0) continue;
        depth[v] = depth[u] + 1;
        children[u].push_back(v);
        frontier.push_back(v);
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (touched[i] && !has_in[i] && depth[i] < 0) grow(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (touched[i] && depth[i] < 0) grow(i);  // pure cycles
  }

  // Left gutter for blocks without exploration edges.
  double gutter_width = 0;
  double gutter_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (touched[i]) continue;
    const Size s = block_size(blocks_[i].kind);
    blocks_[i].position = {0, gutter_y};
    gutter_y += s.height + kRowGap;
    gutter_width = std::max(gutter_width, s.width);
  }

  int max_depth = -1;
  for (auto d : depth) max_depth = std::max(max_depth, d);
  std::vector<double> column_x(static_cast<std::size_t>(max_depth + 1), 0);
  {
    std::vector<double> column_width(column_x.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (depth[i] >= 0) column_width[depth[i]] = std::max(column_width[depth[i]], block_size(blocks_[i].kind).width);
    }
    double x = gutter_width > 0 ? gutter_width + kColumnGap : 0;
    for (std::size_t d = 0; d < column_x.size(); ++d) {
      column_x[d] = x;
      x += column_width[d] + kColumnGap;
    }
  }

  std::vector<double> extent(n, 0);
  std::function<double(std::size_t)> measure = [&](std::size_t u) {
    double stacked = 0;
    for (std::size_t k = 0; k < children[u].size(); ++k) stacked += measure(children[u][k]) + (k ? kRowGap : 0);
    return extent[u] = std::max(block_size(blocks_[u].kind).height, stacked);
  };
  std::function<void(std::size_t, double)> place = [&](std::size_t u, double top) {
    blocks_[u].position = {column_x[depth[u]], top};
    double child_top = top;
    for (auto v : children[u]) {
      place(v, child_top);
      child_top += extent[v] + kRowGap;
    }
  };
  double top = 0;
  for (auto r : roots) {
    measure(r);
    place(r, top);
    top += extent[r] + kTreeGap;
  }
  ++revision_;
}

// ---------------------------------------------------------------------------
// Persistence

Payload payload_from_json(BlockKind kind, const json& doc, const std::string& path) {
  return payload_from_reader(kind, Reader(doc, path));
}

json payload_to_json(const Payload& payload) {
  return std::visit(Overloaded{
                        [](const TextPayload& p) { return json{{"text", p.text}, {"history", p.history}}; },
                        [](const ImagePayload& p) { return json{{"image_id", p.image_id}, {"history", p.history}}; },
                        [](const PostComposition& p) {
                          return json{{"image", p.image ? json(*p.image) : json(nullptr)},
                                      {"caption", p.caption ? json(*p.caption) : json(nullptr)},
                                      {"template", to_string(p.layout)}};
                        },
                        [](const SearchResults& p) {
                          return json{{"topic", p.topic}, {"ids", p.ids}, {"out_of_vocabulary", p.out_of_vocabulary}};
                        },
                        [](const recommend::ImageRecommendation& p) { return recommend::to_json(p); },
                        [](const CaptionRecommendation& p) {
                          return json{{"seed_text", p.seed_text}, {"captions", captions::to_json(p.captions)}};
                        },
                    },
                    payload);
}

json to_json_value(const Canvas& c) {
  json blocks = json::array();
  for (const auto& b : c.blocks_) {
    json doc = b.extra;
    doc["id"] = b.id;
    doc["kind"] = to_string(b.kind);
    doc["payload"] = payload_to_json(b.payload);
    doc["position"] = {{"x", b.position.x}, {"y", b.position.y}};
    doc["created_at"] = b.created_at;
    blocks.push_back(std::move(doc));
  }
  json edges = json::array();
  for (const auto& e : c.edges_) {
    json doc = e.extra;
    doc["id"] = e.id;
    doc["from"] = e.from;
    doc["to"] = e.to;
    doc["kind"] = to_string(e.kind);
    edges.push_back(std::move(doc));
  }
  json tombstones = json::array();
  for (const auto& t : c.tombstones_) {
    tombstones.push_back({{"block_id", t.block_id}, {"kind", to_string(t.kind)}, {"revision", t.revision}});
  }
  json doc = c.extra;
  doc["id"] = c.id_;
  doc["revision"] = c.revision_;
  doc["next_block"] = c.next_block_;
  doc["next_edge"] = c.next_edge_;
  doc["blocks"] = std::move(blocks);
  doc["edges"] = std::move(edges);
  doc["tombstones"] = std::move(tombstones);
  return doc;
}

Canvas canvas_from_json_value(const json& node) {
  const Reader r(node, "canvas");
  Canvas c(r.string("id"));
  c.revision_ = r.unsigned_int("revision");
  c.next_block_ = r.unsigned_int("next_block");
  c.next_edge_ = r.unsigned_int("next_edge");
  c.extra = r.unknown({"id", "revision", "next_block", "next_edge", "blocks", "edges", "tombstones"});

  std::set<std::string> ids;
  const json& blocks = r.array("blocks");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Reader br(blocks[i], "canvas.blocks[" + std::to_string(i) + "]");
    Block b;
    b.id = br.string("id");
    if (!ids.insert(b.id).second) br.violation("duplicate block id '" + b.id + "'", "id");
    const auto kind = block_kind_from_string(br.string("kind"));
    if (!kind) br.violation("unknown block kind", "kind");
    b.kind = *kind;
    b.payload = payload_from_reader(b.kind, br.object("payload"));
    const Reader pos = br.object("position");
    b.position = {pos.number("x"), pos.number("y")};
    b.created_at = br.unsigned_int("created_at");
    b.extra = br.unknown({"id", "kind", "payload", "position", "created_at"});
    c.blocks_.push_back(std::move(b));
  }

  const json& edges = r.array("edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Reader er(edges[i], "canvas.edges[" + std::to_string(i) + "]");
    Edge e;
    e.id = er.string("id");
    e.from = er.string("from");
    e.to = er.string("to");
    if (!ids.count(e.from)) er.violation("edge source is not a block", "from");
    if (!ids.count(e.to)) er.violation("edge target is not a block", "to");
    if (e.from == e.to) er.violation("self-loop", "to");
    const auto kind = edge_kind_from_string(er.string("kind"));
    if (!kind) er.violation("unknown edge kind", "kind");
    e.kind = *kind;
    e.extra = er.unknown({"id", "from", "to", "kind"});
    c.edges_.push_back(std::move(e));
  }

  if (node.contains("tombstones")) {
    const json& tombstones = r.array("tombstones");
    for (std::size_t i = 0; i < tombstones.size(); ++i) {
      const Reader tr(tombstones[i], "canvas.tombstones[" + std::to_string(i) + "]");
      const auto kind = block_kind_from_string(tr.string("kind"));
      if (!kind) tr.violation("unknown block kind", "kind");
      c.tombstones_.push_back({tr.string("block_id"), *kind, tr.unsigned_int("revision")});
    }
  }
  return c;
}

std::string save(const Canvas& canvas, const json& document_extra) {
  json doc = document_extra.is_object() ? document_extra : json::object();
  doc["format_version"] = kCanvasFormatVersion;
  doc["canvas"] = to_json_value(canvas);
  return doc.dump();
}

LoadedDocument load(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::bad_request, std::string("schema violation at document: not valid JSON (") + e.what() + ")");
  }
  const Reader r(doc, "document");
  const json& version = r.field("format_version");
  if (!version.is_number_integer() || version.get<int>() != kCanvasFormatVersion) {
    fail(ErrorCode::bad_request, "unsupported canvas format_version " + version.dump() + " (expected " +
                                     std::to_string(kCanvasFormatVersion) + ")");
  }
  LoadedDocument loaded;
  loaded.canvas = canvas_from_json_value(r.field("canvas"));
  loaded.extra = r.unknown({"format_version", "canvas"});
  return loaded;
}

}  // namespace promoboard::canvas
