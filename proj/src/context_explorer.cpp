#include "promoboard/context_explorer.hpp"

#include <algorithm>
#include <tuple>

#include "promoboard/color.hpp"
#include "promoboard/error.hpp"
#include "promoboard/prompts.hpp"
#include "promoboard/util.hpp"

namespace promoboard::explore {

using corpus::CorpusIndex;
using corpus::ImageRecord;

namespace {

struct ResolvedImage {
  std::vector<std::uint8_t> bytes;
  std::vector<std::string> keywords;
  std::optional<std::string> caption;
  color::RgbColor dominant;
};

ResolvedImage resolve(Services& s, const ImageRef& ref) {
  if (const auto* id = std::get_if<std::string>(&ref)) {
    const ImageRecord record = s.corpus.record(*id);
    return {s.corpus.image_bytes(record), record.keywords, record.caption, record.dominant};
  }
  const auto& bytes = std::get<std::vector<std::uint8_t>>(ref);
  const auto raster = image::decode(bytes);
  return {bytes, {}, std::nullopt, color::dominant_color(image::downscale(raster, s.annotation.max_edge))};
}

std::string describe(Services& s, const ResolvedImage& image) {
  if (image.caption) return *image.caption;
  return s.providers.caption->caption({image.bytes, image.keywords});
}

std::string top_label(Services& s, const std::string& text, const std::vector<std::string>& labels,
                      std::string_view dimension) {
  if (labels.empty()) fail(ErrorCode::bad_request, std::string(dimension) + " keyword list is empty");
  const auto ranked = s.providers.classify->classify(text, labels);
  if (ranked.empty()) {
    fail(ErrorCode::provider_failure, "classifier returned no " + std::string(dimension) + " keyword");
  }
  return ranked.front().label;
}

// Ranks `pool` (seed removed) by (priority group, distance, id) and keeps a row.
template <typename Priority, typename Distance>
std::vector<std::string> rank_row(const CorpusIndex& index, const corpus::IdSet& pool, std::string_view seed,
                                  Priority priority, Distance distance) {
  std::vector<std::tuple<int, double, std::string>> ranked;
  for (const auto& id : pool) {
    if (id == seed) continue;
    const auto& r = index.at(id);
    ranked.emplace_back(priority(r), distance(r), id);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < recommend::kRowSize; ++i) out.push_back(std::get<2>(ranked[i]));
  return out;
}

}  // namespace

KeywordLists keyword_lists(const CorpusIndex& index, const graph::AssociationGraph& graph) {
  KeywordLists lists;
  lists.semantic = index.semantic_vocabulary(graph);
  for (const auto& named : color::basic_color_names()) lists.color.emplace_back(named.name);
  lists.object = index.object_vocabulary();
  return lists;
}

ImageExploration explore_images_with_text(Services& s, const std::string& seed_image, const std::string& text_context) {
  require(!trim(text_context).empty(), "text context must not be empty");
  const ImageRecord seed = s.corpus.record(seed_image);

  ImageExploration out;
  out.keywords.description = corpus::describe(s.corpus, s.providers, seed);
  const std::string prompt = prompts::image_under_text_context(out.keywords.description, text_context);
  out.keywords.contextual_prompt = prompt;

  const auto lists = s.corpus.read([&](const CorpusIndex& index) { return keyword_lists(index, s.graph); });
  const std::string semantic = top_label(s, prompt, lists.semantic, "semantic");
  const std::string color_name = top_label(s, prompt, lists.color, "color");
  const std::string object = top_label(s, prompt, lists.object, "object");
  out.keywords.semantic = semantic;
  out.keywords.color = color_name;
  out.keywords.object = object;

  const color::RgbColor target = color::find_color_name(color_name)->rgb;
  out.recommendation = s.corpus.read([&](const CorpusIndex& index) {
    recommend::ImageRecommendation rec;
    rec.seed = seed.id;
    rec.chosen_keyword = semantic;
    const auto none = [](const ImageRecord&) { return 0; };
    const auto near_seed = [&](const ImageRecord& r) { return color::delta_e(r.dominant, seed.dominant); };
    rec.semantic = rank_row(index, index.with_keyword(semantic), seed.id, none, near_seed);
    rec.color = rank_row(index, recommend::concept_candidates(index, s.graph, seed.keywords), seed.id, none,
                         [&](const ImageRecord& r) { return color::delta_e(r.dominant, target); });
    rec.object = rank_row(index, index.with_object(object), seed.id, none, near_seed);
    return rec;
  });
  return out;
}

captions::CaptionSet explore_captions_with_text(Services& s, const std::string& seed_text,
                                                const std::string& text_context) {
  require(!trim(seed_text).empty(), "seed text must not be empty");
  require(!trim(text_context).empty(), "text context must not be empty");
  return recommend::request_captions(*s.providers.chat, prompts::captions_with_text_context(seed_text, text_context));
}

ImageExploration explore_images_with_image(Services& s, const std::string& seed_image, const ImageRef& context_image) {
  const ImageRecord seed = s.corpus.record(seed_image);
  const ResolvedImage context = resolve(s, context_image);

  ImageExploration out;
  const auto detected = s.providers.detect->detect({context.bytes, context.keywords});
  if (!detected.empty()) out.keywords.object = to_lower(detected.front());
  out.keywords.color = std::string(color::nearest_color_name(context.dominant));
  out.keywords.description = describe(s, context);

  const auto lists = s.corpus.read([&](const CorpusIndex& index) { return keyword_lists(index, s.graph); });
  if (!lists.semantic.empty()) out.keywords.semantic = top_label(s, out.keywords.description, lists.semantic, "semantic");
  for (const auto& k : seed.keywords) {
    if (std::binary_search(lists.semantic.begin(), lists.semantic.end(), k)) {
      out.keywords.seed_semantic = k;
      break;
    }
  }
  if (!out.keywords.seed_semantic && !seed.keywords.empty()) out.keywords.seed_semantic = seed.keywords.front();

  const auto& ws = out.keywords.semantic;
  const auto& wb = out.keywords.seed_semantic;
  const color::RgbColor target = color::find_color_name(*out.keywords.color)->rgb;
  out.recommendation = s.corpus.read([&](const CorpusIndex& index) {
    recommend::ImageRecommendation rec;
    rec.seed = seed.id;
    rec.chosen_keyword = ws;
    const auto carries_context = [&](const ImageRecord& r) { return ws && r.has_keyword(*ws) ? 0 : 1; };
    if (ws) {
      rec.semantic = rank_row(
          index, index.with_keyword(*ws), seed.id,
          [&](const ImageRecord& r) { return wb && r.has_keyword(*wb) ? 0 : 1; },
          [&](const ImageRecord& r) { return color::delta_e(r.dominant, seed.dominant); });
    }
    auto concept_keywords = seed.keywords;
    if (ws) concept_keywords.push_back(*ws);
    rec.color = rank_row(index, recommend::concept_candidates(index, s.graph, concept_keywords), seed.id,
                         carries_context, [&](const ImageRecord& r) { return color::delta_e(r.dominant, target); });
    if (out.keywords.object) {
      rec.object = rank_row(index, index.with_object(*out.keywords.object), seed.id, carries_context,
                            [&](const ImageRecord& r) { return color::delta_e(r.dominant, context.dominant); });
    }
    return rec;
  });
  return out;
}

captions::CaptionSet explore_captions_with_image(Services& s, const std::string& seed_text,
                                                 const ImageRef& context_image) {
  require(!trim(seed_text).empty(), "seed text must not be empty");
  const ResolvedImage context = resolve(s, context_image);
  const std::string description = describe(s, context);
  return recommend::request_captions(*s.providers.chat, prompts::captions_with_image_context(seed_text, description));
}

}  // namespace promoboard::explore
