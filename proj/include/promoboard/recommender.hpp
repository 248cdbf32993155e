#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "promoboard/association_graph.hpp"
#include "promoboard/captions.hpp"
#include "promoboard/corpus.hpp"
#include "promoboard/providers.hpp"

namespace promoboard::recommend {

inline constexpr std::size_t kRowSize = 4;

struct ImageRecommendation {
  std::string seed;
  std::vector<std::string> semantic;
  std::vector<std::string> color;
  std::vector<std::string> object;
  std::optional<std::string> chosen_keyword;

  bool operator==(const ImageRecommendation&) const = default;
};

nlohmann::json to_json(const ImageRecommendation& rec);
ImageRecommendation image_recommendation_from_json(const nlohmann::json& doc);

struct SearchResult {
  std::vector<std::string> ids;
  /// No topic token is an indexed keyword.
  bool out_of_vocabulary = false;
  /// The classifier label used when the topic had no direct hit.
  std::optional<std::string> classified_as;
};

/// Images for a free-text topic. Topic tokens hit the keyword index directly
/// and pull in their two-hop concepts, ranked by path strength then id. With
/// no direct hit the topic is classified against the semantic vocabulary and
/// the top label's postings are returned.
SearchResult search_images(const corpus::CorpusIndex& index, const graph::AssociationGraph& graph,
                           providers::ClassifyProvider& classifier, std::string_view topic, std::size_t n,
                           std::size_t offset = 0);

/// Imageable concepts of the seed's keywords merged by max path strength;
/// equal strengths put fewer hops first, then words in order.
std::vector<graph::ScoredWord> related_keyword_panel(const corpus::CorpusIndex& index,
                                                     const graph::AssociationGraph& graph, std::string_view seed,
                                                     std::size_t k, graph::Thresholds thresholds = {});

/// Union of keyword postings over the two-hop concepts of `keywords`.
corpus::IdSet concept_candidates(const corpus::CorpusIndex& index, const graph::AssociationGraph& graph,
                                 const std::vector<std::string>& keywords);

/// Uniform sample without replacement from the images carrying `keyword`
/// (seed excluded). The sample is the prefix of a seeded shuffle, so
/// `offset` pages through it consistently.
std::vector<std::string> recommend_semantic(const corpus::CorpusIndex& index, std::string_view seed,
                                            std::string_view keyword, std::uint64_t rng_seed,
                                            std::size_t offset = 0, std::size_t limit = kRowSize);

/// Concept-restricted candidates ranked by delta E to the seed's dominant colour.
std::vector<std::string> recommend_color(const corpus::CorpusIndex& index, const graph::AssociationGraph& graph,
                                         std::string_view seed, std::size_t offset = 0,
                                         std::size_t limit = kRowSize);

/// Concept-restricted candidates sharing an object tag with the seed, ranked
/// by shared tag count, then delta E, then id.
std::vector<std::string> recommend_object(const corpus::CorpusIndex& index, const graph::AssociationGraph& graph,
                                          std::string_view seed, std::size_t offset = 0,
                                          std::size_t limit = kRowSize);

/// All three dimensions. Without a chosen keyword the best panel keyword
/// that has other images is used.
ImageRecommendation recommend_images(const corpus::CorpusIndex& index, const graph::AssociationGraph& graph,
                                     std::string_view seed, std::optional<std::string> chosen_keyword,
                                     std::uint64_t rng_seed, graph::Thresholds thresholds = {},
                                     std::size_t offset = 0);

/// Sends `prompt` and parses the reply; one retry on a malformed reply, then
/// Error(parse_failure) carrying the raw text.
captions::CaptionSet request_captions(providers::ChatProvider& chat, const std::string& prompt);

captions::CaptionSet recommend_captions(providers::ChatProvider& chat, std::string_view topic);

}  // namespace promoboard::recommend
