#include "promoboard/association_graph.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>

#include "promoboard/error.hpp"
#include "promoboard/util.hpp"

namespace promoboard::graph {

namespace {

std::string row_label(const AssociationRow& row, std::size_t position) {
  return row.line != 0 ? "line " + std::to_string(row.line) : "row " + std::to_string(position + 1);
}

std::vector<std::string> read_csv_with_header(std::istream& in, std::string_view expected,
                                              std::size_t& line_no, std::string& line) {
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    std::vector<std::string> names;
    for (auto& f : fields) names.push_back(to_lower(trim(f)));
    std::string joined;
    for (std::size_t i = 0; i < names.size(); ++i) joined += (i ? "," : "") + names[i];
    if (joined != expected) {
      fail(ErrorCode::bad_request, "line " + std::to_string(line_no) + ": expected header '" +
                                       std::string(expected) + "', got '" + trim(line) + "'");
    }
    return names;
  }
  fail(ErrorCode::bad_request, "missing header '" + std::string(expected) + "'");
}

double parse_unit_score(const std::string& text, std::size_t line_no, const char* what) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    fail(ErrorCode::bad_request, "line " + std::to_string(line_no) + ": " + what + " is not a number");
  }
  return value;
}

}  // namespace

const ConceptMember* ConceptSet::find(std::string_view word) const {
  for (const auto& m : members) {
    if (m.word == word) return &m;
  }
  return nullptr;
}

std::vector<AssociationRow> parse_association_csv(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  read_csv_with_header(in, "cue,response,count", line_no, line);
  std::vector<AssociationRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 3) {
      fail(ErrorCode::bad_request, where + ": expected 3 fields, got " + std::to_string(fields.size()));
    }
    AssociationRow row{trim(fields[0]), trim(fields[1]), 0, line_no};
    const std::string count = trim(fields[2]);
    const auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), row.count);
    if (ec != std::errc() || ptr != count.data() + count.size()) {
      fail(ErrorCode::bad_request, where + ": count '" + count + "' is not an integer");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::unordered_map<std::string, LexiconEntry> parse_lexicon_csv(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  read_csv_with_header(in, "word,concreteness,imageability", line_no, line);
  std::unordered_map<std::string, LexiconEntry> lexicon;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      fail(ErrorCode::bad_request, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::string word = to_lower(trim(fields[0]));
    if (word.empty()) fail(ErrorCode::bad_request, "line " + std::to_string(line_no) + ": empty word");
    lexicon[word] = {parse_unit_score(fields[1], line_no, "concreteness"),
                     parse_unit_score(fields[2], line_no, "imageability")};
  }
  return lexicon;
}

AssociationGraph AssociationGraph::ingest(std::span<const AssociationRow> rows,
                                          EdgeDirection direction) {
  // (cue, response) -> summed count; std::map keeps the build order-independent.
  std::map<std::string, std::map<std::string, std::int64_t>> counts;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string cue = to_lower(trim(row.cue));
    const std::string response = to_lower(trim(row.response));
    if (cue.empty()) fail(ErrorCode::bad_request, row_label(row, i) + ": missing cue");
    if (response.empty()) fail(ErrorCode::bad_request, row_label(row, i) + ": missing response");
    if (row.count <= 0) {
      fail(ErrorCode::bad_request,
           row_label(row, i) + ": count must be positive, got " + std::to_string(row.count));
    }
    counts[cue][response] += row.count;
  }

  AssociationGraph g;
  g.cue_count_ = counts.size();
  for (const auto& [cue, responses] : counts) {
    std::int64_t total = 0;
    for (const auto& [response, count] : responses) total += count;
    const auto cue_index = g.intern(cue);
    for (const auto& [response, count] : responses) {
      const auto response_index = g.intern(response);
      const double strength = static_cast<double>(count) / static_cast<double>(total);
      if (direction == EdgeDirection::cue_to_response) {
        g.adjacency_[cue_index].push_back({response_index, strength});
      } else {
        g.adjacency_[response_index].push_back({cue_index, strength});
      }
    }
  }
  for (auto& edges : g.adjacency_) {
    std::sort(edges.begin(), edges.end(), [&g](const Edge& a, const Edge& b) {
      return g.words_[a.target] < g.words_[b.target];
    });
  }
  return g;
}

std::uint32_t AssociationGraph::intern(const std::string& word) {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  const auto index = static_cast<std::uint32_t>(words_.size());
  words_.push_back(word);
  index_.emplace(word, index);
  adjacency_.emplace_back();
  return index;
}

void AssociationGraph::set_lexicon(std::unordered_map<std::string, LexiconEntry> lexicon) {
  for (const auto& [word, entry] : lexicon) {
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(entry.concreteness) || !in_unit(entry.imageability)) {
      fail(ErrorCode::bad_request, "lexicon scores for '" + word + "' must lie in [0,1]");
    }
  }
  lexicon_ = std::move(lexicon);
}

std::size_t AssociationGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& edges : adjacency_) n += edges.size();
  return n;
}

std::optional<std::uint32_t> AssociationGraph::index_of(std::string_view word) const {
  if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
  return std::nullopt;
}

bool AssociationGraph::contains(std::string_view word) const { return index_of(word).has_value(); }

std::span<const AssociationGraph::Edge> AssociationGraph::out_edges(std::string_view word) const {
  if (auto i = index_of(word)) return adjacency_[*i];
  return {};
}

std::optional<LexiconEntry> AssociationGraph::lexicon_entry(std::string_view word) const {
  if (auto it = lexicon_.find(std::string(word)); it != lexicon_.end()) return it->second;
  return std::nullopt;
}

ConceptSet AssociationGraph::within_two_hops(std::string_view word) const {
  ConceptSet set;
  set.origin = std::string(word);
  const auto origin = index_of(word);
  if (!origin) return set;
  set.found = true;

  struct Best {
    int hop;
    double strength;
  };
  std::unordered_map<std::uint32_t, Best> best;
  const auto relax = [&best](std::uint32_t node, int hop, double strength) {
    auto [it, inserted] = best.try_emplace(node, Best{hop, strength});
    if (!inserted) {
      it->second.hop = std::min(it->second.hop, hop);
      it->second.strength = std::max(it->second.strength, strength);
    }
  };
  relax(*origin, 0, 1.0);
  for (const Edge& first : adjacency_[*origin]) {
    relax(first.target, 1, first.strength);
    for (const Edge& second : adjacency_[first.target]) {
      relax(second.target, 2, first.strength * second.strength);
    }
  }

  set.members.reserve(best.size());
  for (const auto& [node, b] : best) set.members.push_back({words_[node], b.hop, b.strength});
  std::sort(set.members.begin(), set.members.end(), [](const auto& a, const auto& b) {
    if (a.hop != b.hop) return a.hop < b.hop;
    if (a.strength != b.strength) return a.strength > b.strength;
    return a.word < b.word;
  });
  return set;
}

bool AssociationGraph::passes(std::string_view word, Thresholds thresholds) const {
  if (lexicon_.empty()) return true;
  const auto entry = lexicon_entry(word);
  return entry && entry->concreteness >= thresholds.concreteness &&
         entry->imageability >= thresholds.imageability;
}

std::vector<ScoredWord> AssociationGraph::imageable_concepts(std::string_view word, std::size_t k,
                                                             Thresholds thresholds) const {
  require(k >= 1, "k must be at least 1");
  std::vector<ScoredWord> ranked;
  for (const auto& m : within_two_hops(word).members) {
    if (passes(m.word, thresholds)) ranked.push_back({m.word, m.strength});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredWord& a, const ScoredWord& b) {
    if (a.strength != b.strength) return a.strength > b.strength;
    return a.word < b.word;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

nlohmann::json AssociationGraph::to_json() const {
  std::vector<std::uint32_t> order(words_.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [this](auto a, auto b) { return words_[a] < words_[b]; });

  nlohmann::json edges = nlohmann::json::array();
  for (auto source : order) {
    for (const Edge& e : adjacency_[source]) {
      edges.push_back({words_[source], words_[e.target], e.strength});
    }
  }
  nlohmann::json lexicon = nlohmann::json::object();
  for (const auto& [word, entry] : lexicon_) {
    lexicon[word] = {entry.concreteness, entry.imageability};
  }
  nlohmann::json isolated = nlohmann::json::array();
  for (auto i : order) {
    if (adjacency_[i].empty()) isolated.push_back(words_[i]);
  }
  return {{"format_version", 1},
          {"cue_count", cue_count_},
          {"edges", std::move(edges)},
          {"nodes_without_out_edges", std::move(isolated)},
          {"lexicon", std::move(lexicon)}};
}

AssociationGraph AssociationGraph::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format_version", 0) != 1) {
    fail(ErrorCode::bad_request, "association graph snapshot: unsupported format_version");
  }
  AssociationGraph g;
  try {
    g.cue_count_ = doc.at("cue_count").get<std::size_t>();
    for (const auto& e : doc.at("edges")) {
      const auto source = g.intern(e.at(0).get<std::string>());
      const auto target = g.intern(e.at(1).get<std::string>());
      g.adjacency_[source].push_back({target, e.at(2).get<double>()});
    }
    for (const auto& w : doc.at("nodes_without_out_edges")) g.intern(w.get<std::string>());
    std::unordered_map<std::string, LexiconEntry> lexicon;
    for (const auto& [word, scores] : doc.at("lexicon").items()) {
      lexicon[word] = {scores.at(0).get<double>(), scores.at(1).get<double>()};
    }
    g.set_lexicon(std::move(lexicon));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::bad_request, std::string("association graph snapshot: ") + e.what());
  }
  for (auto& edges : g.adjacency_) {
    std::sort(edges.begin(), edges.end(), [&g](const Edge& a, const Edge& b) {
      return g.words_[a.target] < g.words_[b.target];
    });
  }
  return g;
}

}  // namespace promoboard::graph
