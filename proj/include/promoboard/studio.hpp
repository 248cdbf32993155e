#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "promoboard/canvas.hpp"
#include "promoboard/fusion.hpp"
#include "promoboard/services.hpp"

namespace promoboard::studio {

enum class GenerateWhat { images, captions, post };
std::optional<GenerateWhat> generate_what_from_string(std::string_view name);

struct StudioOptions {
  std::uint64_t rng_seed = 0;
  /// Images per search-results block.
  std::size_t search_results = 8;
};

struct GenerateOptions {
  /// Semantic keyword picked from the keyword panel ("More Images").
  std::optional<std::string> keyword;
  std::size_t offset = 0;
  /// Second block for a direct post composition (one image, one text).
  std::optional<std::string> partner;
};

/// Block and edge touched by a canvas action.
struct Outcome {
  std::string block;
  std::vector<std::string> edges;
};

/// Which item of a result block to pull out as its own block.
struct PickSpec {
  std::optional<std::string> image_id;
  std::optional<captions::Dimension> dimension;
  std::size_t index = 0;
};

/// Canvas actions on top of the pipelines. Every method either completes the
/// whole mutation or leaves the canvas untouched.
class Studio {
 public:
  Studio(Services services, StudioOptions options = {}) : services_(services), options_(options) {}

  /// Rejects payloads that name images missing from the corpus.
  std::string create_block(canvas::Canvas& canvas, canvas::Payload payload,
                           const std::optional<std::string>& near = std::nullopt);

  /// Drag-to-link. `action` ("explore", "fuse", "compose") must agree with
  /// the dispatch table when given. The target is updated in place and a
  /// customization edge from `from` to `to` is added.
  Outcome link(canvas::Canvas& canvas, const std::string& from, const std::string& to,
               const std::optional<std::string>& action = std::nullopt);

  /// New block derived from `source`, joined by an exploration edge.
  Outcome generate_from(canvas::Canvas& canvas, const std::string& source, GenerateWhat what,
                        const GenerateOptions& options = {});

  /// Lifts one image or caption out of a result block.
  Outcome pick(canvas::Canvas& canvas, const std::string& source, const PickSpec& spec);

  Outcome regenerate(canvas::Canvas& canvas, const std::string& image_block);
  Outcome mask_edit(canvas::Canvas& canvas, const std::string& image_block, const fusion::MaskSpec& spec);

  /// PNG of a post block.
  std::vector<std::uint8_t> export_post(const canvas::Canvas& canvas, const std::string& post_block);

  Services& services() { return services_; }
  const StudioOptions& options() const { return options_; }

 private:
  Outcome derive(canvas::Canvas& canvas, const std::string& source, canvas::Payload payload);
  void check_images(const canvas::Payload& payload) const;

  Services services_;
  StudioOptions options_;
};

inline constexpr std::uint32_t kPostWidth = 1080;
inline constexpr std::uint32_t kPostHeight = 1350;

/// Renders a composition onto a white 1080x1350 card. Asterisk markers and
/// glyphs outside printable ASCII are dropped from the rendered caption.
std::vector<std::uint8_t> render_post(const corpus::Corpus& corpus, const canvas::PostComposition& post);

/// Caption text as drawn on the card.
std::string printable_caption(std::string_view caption);

}  // namespace promoboard::studio
