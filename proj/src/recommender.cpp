#include "promoboard/recommender.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>

#include "promoboard/error.hpp"
#include "promoboard/prompts.hpp"
#include "promoboard/util.hpp"

namespace promoboard::recommend {

using corpus::CorpusIndex;
using nlohmann::json;

namespace {

std::vector<std::string> page(std::vector<std::string> ranked, std::size_t offset, std::size_t limit) {
  if (offset >= ranked.size()) return {};
  const auto end = std::min(ranked.size(), offset + limit);
  return {std::make_move_iterator(ranked.begin() + static_cast<std::ptrdiff_t>(offset)),
          std::make_move_iterator(ranked.begin() + static_cast<std::ptrdiff_t>(end))};
}

}  // namespace

json to_json(const ImageRecommendation& rec) {
  json doc{{"seed", rec.seed}, {"semantic", rec.semantic}, {"color", rec.color}, {"object", rec.object}};
  doc["chosen_keyword"] = rec.chosen_keyword ? json(*rec.chosen_keyword) : json(nullptr);
  return doc;
}

ImageRecommendation image_recommendation_from_json(const json& doc) {
  ImageRecommendation rec;
  rec.seed = doc.at("seed").get<std::string>();
  rec.semantic = doc.at("semantic").get<std::vector<std::string>>();
  rec.color = doc.at("color").get<std::vector<std::string>>();
  rec.object = doc.at("object").get<std::vector<std::string>>();
  if (doc.contains("chosen_keyword") && !doc.at("chosen_keyword").is_null()) {
    rec.chosen_keyword = doc.at("chosen_keyword").get<std::string>();
  }
  return rec;
}

SearchResult search_images(const CorpusIndex& index, const graph::AssociationGraph& graph,
                           providers::ClassifyProvider& classifier, std::string_view topic, std::size_t n,
                           std::size_t offset) {
  const auto tokens = tokenize(topic);
  require(!tokens.empty(), "topic must contain at least one word");

  SearchResult result;
  const bool direct_hit = std::any_of(tokens.begin(), tokens.end(),
                                      [&](const auto& t) { return !index.with_keyword(t).empty(); });
  if (!direct_hit) {
    result.out_of_vocabulary = true;
    const auto labels = index.semantic_vocabulary(graph);
    if (labels.empty()) return result;
    const auto ranked = classifier.classify(std::string(topic), labels);
    if (ranked.empty()) return result;
    result.classified_as = ranked.front().label;
    const auto& ids = index.with_keyword(ranked.front().label);
    result.ids = page({ids.begin(), ids.end()}, offset, n);
    return result;
  }

  std::map<std::string, double> score;
  const auto credit = [&](const std::string& keyword, double strength) {
    for (const auto& id : index.with_keyword(keyword)) {
      auto [it, inserted] = score.try_emplace(id, strength);
      if (!inserted) it->second = std::max(it->second, strength);
    }
  };
  for (const auto& token : tokens) {
    credit(token, 1.0);
    for (const auto& member : graph.within_two_hops(token).members) credit(member.word, member.strength);
  }
  std::vector<std::pair<std::string, double>> ranked(score.begin(), score.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> ids;
  ids.reserve(ranked.size());
  for (auto& [id, s] : ranked) ids.push_back(id);
  result.ids = page(std::move(ids), offset, n);
  return result;
}

std::vector<graph::ScoredWord> related_keyword_panel(const CorpusIndex& index, const graph::AssociationGraph& graph,
                                                     std::string_view seed, std::size_t k,
                                                     graph::Thresholds thresholds) {
  require(k >= 1, "k must be at least 1");
  const auto& record = index.at(seed);
  // word -> (strength, hop); equal strengths rank nearer words first.
  std::map<std::string, std::pair<double, int>> merged;
  for (const auto& keyword : record.keywords) {
    const auto concepts = graph.within_two_hops(keyword);
    if (concepts.members.empty()) continue;
    for (const auto& scored : graph.imageable_concepts(keyword, concepts.members.size(), thresholds)) {
      const int hop = concepts.find(scored.word)->hop;
      auto [it, inserted] = merged.try_emplace(scored.word, scored.strength, hop);
      if (!inserted) it->second = {std::max(it->second.first, scored.strength), std::min(it->second.second, hop)};
    }
  }
  std::vector<std::pair<graph::ScoredWord, int>> order;
  for (auto& [word, best] : merged) order.push_back({{word, best.first}, best.second});
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first.strength != b.first.strength) return a.first.strength > b.first.strength;
    return a.second < b.second;
  });
  std::vector<graph::ScoredWord> ranked;
  for (auto& [scored, hop] : order) ranked.push_back(std::move(scored));
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

corpus::IdSet concept_candidates(const CorpusIndex& index, const graph::AssociationGraph& graph,
                                 const std::vector<std::string>& keywords) {
  corpus::IdSet out;
  for (const auto& keyword : keywords) {
    auto concepts = graph.within_two_hops(keyword);
    if (!concepts.found) concepts.members.push_back({keyword, 0, 1.0});
    const auto ids = corpus::candidates_in_concepts(index, concepts);
    out.insert(ids.begin(), ids.end());
  }
  return out;
}

std::vector<std::string> recommend_semantic(const CorpusIndex& index, std::string_view seed, std::string_view keyword,
                                            std::uint64_t rng_seed, std::size_t offset, std::size_t limit) {
  std::vector<std::string> pool;
  for (const auto& id : index.with_keyword(keyword)) {
    if (id != seed) pool.push_back(id);
  }
  const std::size_t take = std::min(pool.size(), offset + limit);
  StableRng rng(rng_seed);
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return page(std::move(pool), offset, limit);
}

std::vector<std::string> recommend_color(const CorpusIndex& index, const graph::AssociationGraph& graph,
                                         std::string_view seed, std::size_t offset, std::size_t limit) {
  const auto& record = index.at(seed);
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& id : concept_candidates(index, graph, record.keywords)) {
    if (id == seed) continue;
    ranked.emplace_back(color::delta_e(index.at(id).dominant, record.dominant), id);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> ids;
  for (auto& [d, id] : ranked) ids.push_back(std::move(id));
  return page(std::move(ids), offset, limit);
}

std::vector<std::string> recommend_object(const CorpusIndex& index, const graph::AssociationGraph& graph,
                                          std::string_view seed, std::size_t offset, std::size_t limit) {
  const auto& record = index.at(seed);
  if (record.objects.empty()) return {};
  struct Candidate {
    std::size_t shared;
    double distance;
    std::string id;
  };
  std::vector<Candidate> ranked;
  for (const auto& id : concept_candidates(index, graph, record.keywords)) {
    if (id == seed) continue;
    const auto& other = index.at(id);
    const auto shared = static_cast<std::size_t>(std::count_if(
        record.objects.begin(), record.objects.end(), [&](const auto& tag) { return other.has_object(tag); }));
    if (shared == 0) continue;
    ranked.push_back({shared, color::delta_e(other.dominant, record.dominant), id});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.shared != b.shared) return a.shared > b.shared;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  std::vector<std::string> ids;
  for (auto& c : ranked) ids.push_back(std::move(c.id));
  return page(std::move(ids), offset, limit);
}

ImageRecommendation recommend_images(const CorpusIndex& index, const graph::AssociationGraph& graph,
                                     std::string_view seed, std::optional<std::string> chosen_keyword,
                                     std::uint64_t rng_seed, graph::Thresholds thresholds, std::size_t offset) {
  const auto& record = index.at(seed);
  if (!chosen_keyword) {
    for (const auto& scored : related_keyword_panel(index, graph, seed, graph.node_count() + record.keywords.size(),
                                                    thresholds)) {
      const auto& ids = index.with_keyword(scored.word);
      if (ids.size() > (ids.count(std::string(seed)) ? 1u : 0u)) {
        chosen_keyword = scored.word;
        break;
      }
    }
  }
  ImageRecommendation rec;
  rec.seed = std::string(seed);
  rec.chosen_keyword = chosen_keyword;
  if (chosen_keyword) rec.semantic = recommend_semantic(index, seed, *chosen_keyword, rng_seed, offset);
  rec.color = recommend_color(index, graph, seed, offset);
  rec.object = recommend_object(index, graph, seed, offset);
  return rec;
}

captions::CaptionSet request_captions(providers::ChatProvider& chat, const std::string& prompt) {
  std::string raw;
  for (int attempt = 0; attempt < 2; ++attempt) {
    raw = chat.complete(prompt);
    try {
      return captions::parse_caption_response(raw);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::parse_failure || attempt == 1) {
        fail(ErrorCode::parse_failure, std::string(e.what()) + "\nraw response:\n" + raw);
      }
    }
  }
  fail(ErrorCode::parse_failure, "unreachable");
}

captions::CaptionSet recommend_captions(providers::ChatProvider& chat, std::string_view topic) {
  require(!trim(topic).empty(), "topic must not be empty");
  return request_captions(chat, prompts::captions_for_topic(topic));
}

}  // namespace promoboard::recommend
