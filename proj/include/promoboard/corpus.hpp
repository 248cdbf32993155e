#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "promoboard/association_graph.hpp"
#include "promoboard/color.hpp"
#include "promoboard/providers.hpp"

namespace promoboard::corpus {

enum class RecordSource { manifest, upload, generated };

struct ImageRecord {
  std::string id;
  /// Filesystem path (relative paths resolve against the corpus base
  /// directory) or `blob:<sha256>` for content-addressed storage.
  std::string uri;
  /// Ordered as supplied; the first keyword is the record's top keyword.
  std::vector<std::string> keywords;
  /// Keywords absent from the association graph.
  std::vector<std::string> out_of_vocabulary;
  /// Object tags, most probable first.
  std::vector<std::string> objects;
  color::RgbColor dominant;
  color::Palette palette;
  /// Cached machine description of the image.
  std::optional<std::string> caption;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  RecordSource source = RecordSource::manifest;

  bool has_keyword(std::string_view keyword) const;
  bool has_object(std::string_view tag) const;
  bool operator==(const ImageRecord&) const = default;
};

using IdSet = std::set<std::string>;

/// Records plus the keyword and object inverted indexes over them.
class CorpusIndex {
 public:
  /// Throws Error(conflict) when the id already exists.
  void add(ImageRecord record);
  const ImageRecord* find(std::string_view id) const;
  /// Throws Error(not_found).
  const ImageRecord& at(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  std::size_t size() const { return records_.size(); }

  const IdSet& with_keyword(std::string_view keyword) const;
  const IdSet& with_object(std::string_view tag) const;

  const std::map<std::string, ImageRecord, std::less<>>& records() const { return records_; }
  const std::map<std::string, IdSet, std::less<>>& keyword_index() const { return by_keyword_; }
  const std::map<std::string, IdSet, std::less<>>& object_index() const { return by_object_; }

  /// Recomputes both inverted indexes from the records.
  void rebuild_indexes();

  /// Indexed keywords that are association-graph words (the semantic label list).
  std::vector<std::string> semantic_vocabulary(const graph::AssociationGraph& graph) const;
  /// All indexed object tags.
  std::vector<std::string> object_vocabulary() const;

  std::uint64_t id_counter = 0;

 private:
  void index_record(const ImageRecord& record);

  std::map<std::string, ImageRecord, std::less<>> records_;
  std::map<std::string, IdSet, std::less<>> by_keyword_;
  std::map<std::string, IdSet, std::less<>> by_object_;
};

/// Union of keyword postings over every concept member.
IdSet candidates_in_concepts(const CorpusIndex& index, const graph::ConceptSet& concepts);

/// Content-addressed blob storage, on disk or in memory.
class BlobStore {
 public:
  /// In-memory store.
  BlobStore() = default;
  explicit BlobStore(std::filesystem::path directory);

  std::string put(std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> get(const std::string& hash) const;
  bool contains(const std::string& hash) const;

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::uint8_t>> memory_;
};

// --- Serialization -------------------------------------------------------

inline constexpr int kIndexFormatVersion = 1;

nlohmann::json record_to_json(const ImageRecord& record);
ImageRecord record_from_json(const nlohmann::json& doc);
nlohmann::json index_to_json(const CorpusIndex& index);
/// Throws Error(bad_request) on version mismatch or schema violations.
CorpusIndex index_from_json(const nlohmann::json& doc);

// --- Manifest ingestion ---------------------------------------------------

struct ManifestRow {
  std::size_t line = 0;
  std::string id;
  std::string uri;
  std::vector<std::string> keywords;
  std::optional<std::vector<std::string>> objects;
};

/// Parses JSON Lines `{"id","uri","keywords":[...],"objects":[...]?}`.
/// Malformed lines throw Error(bad_request) naming the line; a repeated id
/// throws Error(conflict) naming the id.
std::vector<ManifestRow> parse_manifest(std::istream& in);

struct SkippedRow {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct AnnotationOptions {
  std::uint32_t max_edge = color::kMaxAnalysisEdge;
  std::size_t upload_keywords = 3;
  double min_confidence = 0.2;
};

struct IngestReport {
  CorpusIndex index;
  std::size_t annotated = 0;
  std::size_t resumed = 0;
  std::size_t detector_calls = 0;
  std::vector<SkippedRow> skipped;
};

/// Annotates every manifest row not already present in `existing`.
/// Pre-supplied objects bypass the detector. Undecodable or unreadable
/// images are skipped and reported.
IngestReport ingest_manifest(std::span<const ManifestRow> rows, const std::filesystem::path& base_dir,
                             const graph::AssociationGraph& graph, providers::ProviderSuite& suite,
                             CorpusIndex existing = {}, const AnnotationOptions& options = {});

/// Dominant colour, palette and dimensions from decoded pixels.
void annotate_pixels(ImageRecord& record, const image::Raster& raster, const AnnotationOptions& options = {});

/// Thread-safe corpus: many concurrent readers, one writer at a time.
class Corpus {
 public:
  Corpus(CorpusIndex index, std::shared_ptr<BlobStore> blobs, std::filesystem::path base_dir = {},
         std::uint64_t id_seed = 0);

  /// Runs `f(const CorpusIndex&)` under a shared lock.
  template <typename F>
  decltype(auto) read(F&& f) const {
    std::shared_lock lock(mutex_);
    return f(static_cast<const CorpusIndex&>(index_));
  }

  ImageRecord record(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::size_t size() const;

  /// Appends a record under the writer lock (and to the append log, if set).
  void add(ImageRecord record);

  /// Encoded bytes of a record's image.
  std::vector<std::uint8_t> image_bytes(const ImageRecord& record) const;
  std::vector<std::uint8_t> image_bytes(std::string_view id) const { return image_bytes(record(id)); }

  /// Fresh id: content-hash prefix plus a seeded suffix, never reused.
  std::string next_id(const std::string& content_hash);

  BlobStore& blobs() { return *blobs_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  /// Newly added records are appended as JSON lines to `path`.
  void set_append_log(std::filesystem::path path);
  /// Replays an append log written by a previous session.
  void replay_append_log(const std::filesystem::path& path);

  CorpusIndex snapshot() const;

 private:
  mutable std::shared_mutex mutex_;
  CorpusIndex index_;
  std::shared_ptr<BlobStore> blobs_;
  std::filesystem::path base_dir_;
  std::uint64_t id_seed_;
  std::optional<std::filesystem::path> append_log_;
};

/// Decode, caption, classify against the semantic vocabulary (top-N above
/// the confidence floor), detect objects, and add the record with a fresh
/// id. `inherited_keywords` are appended after the classifier's labels.
/// Nothing is added when any step fails.
ImageRecord annotate_and_add(Corpus& corpus, const graph::AssociationGraph& graph,
                             providers::ProviderSuite& suite, std::span<const std::uint8_t> bytes,
                             RecordSource source, const std::vector<std::string>& inherited_keywords = {},
                             const AnnotationOptions& options = {});

inline ImageRecord annotate_uploaded_image(Corpus& corpus, const graph::AssociationGraph& graph,
                                           providers::ProviderSuite& suite, std::span<const std::uint8_t> bytes,
                                           const AnnotationOptions& options = {}) {
  return annotate_and_add(corpus, graph, suite, bytes, RecordSource::upload, {}, options);
}

/// The record's cached caption, or one from the caption provider.
std::string describe(const Corpus& corpus, providers::ProviderSuite& suite, const ImageRecord& record);

}  // namespace promoboard::corpus
