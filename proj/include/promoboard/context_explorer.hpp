#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "promoboard/captions.hpp"
#include "promoboard/recommender.hpp"
#include "promoboard/services.hpp"

namespace promoboard::explore {

/// Label vocabularies the classifier picks exploration keywords from.
struct KeywordLists {
  std::vector<std::string> semantic;
  std::vector<std::string> color;
  std::vector<std::string> object;
};

KeywordLists keyword_lists(const corpus::CorpusIndex& index, const graph::AssociationGraph& graph);

struct ExtractedKeywords {
  std::optional<std::string> semantic;
  std::optional<std::string> color;
  std::optional<std::string> object;
  /// Seed image's own semantic keyword (image-context task only).
  std::optional<std::string> seed_semantic;
  std::string description;
  /// Contextual prompt (text-context task only).
  std::optional<std::string> contextual_prompt;
};

struct ImageExploration {
  recommend::ImageRecommendation recommendation;
  ExtractedKeywords keywords;
};

/// A context image is either a corpus record or raw uploaded bytes.
using ImageRef = std::variant<std::string, std::vector<std::uint8_t>>;

/// Text context over a seed image: the seed's description joined with the
/// context forms the contextual prompt, which is classified once per
/// dimension to pick the semantic, colour and object keywords.
ImageExploration explore_images_with_text(Services& services, const std::string& seed_image,
                                          const std::string& text_context);

captions::CaptionSet explore_captions_with_text(Services& services, const std::string& seed_text,
                                                const std::string& text_context);

/// Image context over a seed image. Semantic results carrying both the seed
/// keyword and the context keyword come first; colour and object results
/// carrying the context keyword come first. Within a priority group results
/// are ordered by delta E, then id.
ImageExploration explore_images_with_image(Services& services, const std::string& seed_image,
                                           const ImageRef& context_image);

captions::CaptionSet explore_captions_with_image(Services& services, const std::string& seed_text,
                                                 const ImageRef& context_image);

}  // namespace promoboard::explore
