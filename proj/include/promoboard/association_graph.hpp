#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace promoboard::graph {

/// One raw row of a free-association file. `line` is the 1-based source line
/// (0 when rows are built in memory) and is only used for diagnostics.
struct AssociationRow {
  std::string cue;
  std::string response;
  std::int64_t count = 0;
  std::size_t line = 0;
};

/// Which way the stored edge points relative to the (cue, response) pair.
enum class EdgeDirection { cue_to_response, response_to_cue };

struct LexiconEntry {
  double concreteness = 0.0;
  double imageability = 0.0;
};

struct Thresholds {
  double concreteness = 0.4;
  double imageability = 0.4;
};

struct ConceptMember {
  std::string word;
  int hop = 0;
  double strength = 0.0;

  bool operator==(const ConceptMember&) const = default;
};

/// Words reachable from `origin` within two directed hops. When the origin is
/// out of vocabulary `found` is false and `members` is empty.
struct ConceptSet {
  std::string origin;
  bool found = false;
  /// Sorted by hop, then strength descending, then word.
  std::vector<ConceptMember> members;

  const ConceptMember* find(std::string_view word) const;
};

struct ScoredWord {
  std::string word;
  double strength = 0.0;

  bool operator==(const ScoredWord&) const = default;
};

/// Parses `cue,response,count` CSV (header required). Malformed rows throw
/// Error(bad_request) naming the line.
std::vector<AssociationRow> parse_association_csv(std::istream& in);

/// Parses `word,concreteness,imageability` CSV (header required).
std::unordered_map<std::string, LexiconEntry> parse_lexicon_csv(std::istream& in);

/// Directed weighted word-association graph. Immutable once built, so any
/// number of threads may query it.
class AssociationGraph {
 public:
  struct Edge {
    std::uint32_t target;
    double strength;
  };

  AssociationGraph() = default;

  /// Builds the graph from raw counts. Duplicate (cue, response) rows are
  /// summed and strengths are normalized per cue.
  static AssociationGraph ingest(std::span<const AssociationRow> rows,
                                 EdgeDirection direction = EdgeDirection::cue_to_response);

  /// Replaces the lexicon. Scores outside [0,1] throw Error(bad_request).
  void set_lexicon(std::unordered_map<std::string, LexiconEntry> lexicon);

  std::size_t node_count() const { return words_.size(); }
  std::size_t edge_count() const;
  std::size_t cue_count() const { return cue_count_; }
  bool contains(std::string_view word) const;
  const std::vector<std::string>& words() const { return words_; }
  /// Outgoing edges of `word`, sorted by target word. Empty for unknown words.
  std::span<const Edge> out_edges(std::string_view word) const;
  const std::string& word(std::uint32_t index) const { return words_[index]; }
  std::optional<LexiconEntry> lexicon_entry(std::string_view word) const;
  bool has_lexicon() const { return !lexicon_.empty(); }

  ConceptSet within_two_hops(std::string_view word) const;

  /// Two-hop members passing both lexicon thresholds, ranked by path
  /// strength (desc) then word, truncated to k. When no lexicon is loaded the
  /// filter is vacuous; otherwise words missing from the lexicon are dropped.
  std::vector<ScoredWord> imageable_concepts(std::string_view word, std::size_t k,
                                             Thresholds thresholds = {}) const;

  bool passes(std::string_view word, Thresholds thresholds) const;

  nlohmann::json to_json() const;
  static AssociationGraph from_json(const nlohmann::json& doc);

 private:
  std::optional<std::uint32_t> index_of(std::string_view word) const;
  std::uint32_t intern(const std::string& word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::vector<Edge>> adjacency_;
  std::unordered_map<std::string, LexiconEntry> lexicon_;
  std::size_t cue_count_ = 0;
};

}  // namespace promoboard::graph
