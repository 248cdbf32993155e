#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "promoboard/captions.hpp"
#include "promoboard/recommender.hpp"

namespace promoboard::canvas {

enum class BlockKind { text, image, post, search_results, image_rec, caption_rec };
enum class EdgeKind { exploration, customization };
enum class PostTemplate { caption_below, caption_overlay };

std::string_view to_string(BlockKind kind);
std::optional<BlockKind> block_kind_from_string(std::string_view name);
std::string_view to_string(EdgeKind kind);
std::string_view to_string(PostTemplate t);

struct Position {
  double x = 0;
  double y = 0;
  bool operator==(const Position&) const = default;
};

struct Size {
  double width = 0;
  double height = 0;
};

/// Footprint of a block on the canvas; fixed per kind.
Size block_size(BlockKind kind);

struct TextPayload {
  std::string text;
  /// Earlier texts this block held before customizations replaced them.
  std::vector<std::string> history;
  bool operator==(const TextPayload&) const = default;
};

struct ImagePayload {
  std::string image_id;
  std::vector<std::string> history;
  bool operator==(const ImagePayload&) const = default;
};

struct PostComposition {
  std::optional<std::string> image;
  std::optional<std::string> caption;
  PostTemplate layout = PostTemplate::caption_below;

  bool renderable() const { return image.has_value() || caption.has_value(); }
  bool operator==(const PostComposition&) const = default;
};

struct SearchResults {
  std::string topic;
  std::vector<std::string> ids;
  bool out_of_vocabulary = false;
  bool operator==(const SearchResults&) const = default;
};

struct CaptionRecommendation {
  std::string seed_text;
  captions::CaptionSet captions;
  bool operator==(const CaptionRecommendation&) const = default;
};

using Payload = std::variant<TextPayload, ImagePayload, PostComposition, SearchResults,
                             recommend::ImageRecommendation, CaptionRecommendation>;

BlockKind kind_of(const Payload& payload);

struct Block {
  std::string id;
  BlockKind kind = BlockKind::text;
  Payload payload;
  Position position;
  /// Revision at which the block was created (a logical clock).
  std::uint64_t created_at = 0;
  /// Fields this version does not understand, kept for round-trips.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const Block&) const = default;
};

struct Edge {
  std::string id;
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::exploration;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const Edge&) const = default;
};

/// Deleted blocks stay listed so the exploration path remains auditable.
struct Tombstone {
  std::string block_id;
  BlockKind kind = BlockKind::text;
  std::uint64_t revision = 0;
  bool operator==(const Tombstone&) const = default;
};

/// The mind-map document. Every mutation bumps `revision`.
class Canvas {
 public:
  Canvas() = default;
  explicit Canvas(std::string id) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }
  std::uint64_t revision() const { return revision_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Tombstone>& tombstones() const { return tombstones_; }

  const Block* find(std::string_view id) const;
  /// Throws Error(not_found).
  const Block& block(std::string_view id) const;

  /// Adds a block. With `near`, it is placed right of that block and pushed
  /// down until it overlaps nothing. Invalid payloads throw Error(bad_request).
  std::string create_block(Payload payload, const std::optional<std::string>& near = std::nullopt);
  /// Replaces a block's payload; the kind must stay the same.
  void update_payload(std::string_view id, Payload payload);
  void move_block(std::string_view id, Position position);
  /// Endpoints must exist and differ.
  std::string add_edge(std::string_view from, std::string_view to, EdgeKind kind);
  /// Removes the block and its incident edges in one step.
  void remove_block(std::string_view id);
  void remove_edge(std::string_view id);

  /// Left-to-right layered tree over exploration edges; blocks with no
  /// exploration edge stack in a left gutter. No two blocks overlap.
  void auto_layout();

  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const Canvas&) const = default;

 private:
  friend nlohmann::json to_json_value(const Canvas&);
  friend Canvas canvas_from_json_value(const nlohmann::json&);

  Block& mutable_block(std::string_view id);
  Position free_slot(Position start, BlockKind kind) const;

  std::string id_;
  std::uint64_t revision_ = 0;
  std::uint64_t next_block_ = 1;
  std::uint64_t next_edge_ = 1;
  std::vector<Block> blocks_;
  std::vector<Edge> edges_;
  std::vector<Tombstone> tombstones_;
};

bool overlaps(const Block& a, const Block& b);

void validate_payload(const Payload& payload);

inline constexpr int kCanvasFormatVersion = 1;

/// Canonical JSON document `{"format_version", "canvas", ...}`.
std::string save(const Canvas& canvas, const nlohmann::json& document_extra = nlohmann::json::object());

struct LoadedDocument {
  Canvas canvas;
  nlohmann::json extra;
};

/// Throws Error(bad_request) on invalid JSON, version mismatch, or schema
/// violations; the message names the offending path.
LoadedDocument load(std::string_view bytes);

nlohmann::json to_json_value(const Canvas& canvas);
Canvas canvas_from_json_value(const nlohmann::json& doc);
nlohmann::json payload_to_json(const Payload& payload);
/// Schema errors name `path`.
Payload payload_from_json(BlockKind kind, const nlohmann::json& doc, const std::string& path = "payload");

}  // namespace promoboard::canvas
