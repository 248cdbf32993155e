#include "promoboard/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>

#include "promoboard/error.hpp"
#include "promoboard/util.hpp"

namespace promoboard::corpus {

using nlohmann::json;

namespace {

const IdSet& empty_ids() {
  static const IdSet kEmpty;
  return kEmpty;
}

std::string_view to_string(RecordSource source) {
  switch (source) {
    case RecordSource::manifest: return "manifest";
    case RecordSource::upload: return "upload";
    case RecordSource::generated: return "generated";
  }
  return "manifest";
}

RecordSource source_from_string(std::string_view s) {
  if (s == "upload") return RecordSource::upload;
  if (s == "generated") return RecordSource::generated;
  if (s == "manifest") return RecordSource::manifest;
  fail(ErrorCode::bad_request, "unknown record source '" + std::string(s) + "'");
}

void push_unique(std::vector<std::string>& out, std::string value) {
  if (!value.empty() && std::find(out.begin(), out.end(), value) == out.end()) out.push_back(std::move(value));
}

std::vector<std::string> normalized_tokens(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& r : raw) push_unique(out, to_lower(trim(r)));
  return out;
}

void flag_out_of_vocabulary(ImageRecord& record, const graph::AssociationGraph& graph) {
  record.out_of_vocabulary.clear();
  for (const auto& k : record.keywords) {
    if (!graph.contains(k)) record.out_of_vocabulary.push_back(k);
  }
}

}  // namespace

bool ImageRecord::has_keyword(std::string_view keyword) const {
  return std::find(keywords.begin(), keywords.end(), keyword) != keywords.end();
}

bool ImageRecord::has_object(std::string_view tag) const {
  return std::find(objects.begin(), objects.end(), tag) != objects.end();
}

// ---------------------------------------------------------------------------
// CorpusIndex

void CorpusIndex::add(ImageRecord record) {
  if (records_.count(record.id)) fail(ErrorCode::conflict, "duplicate image id '" + record.id + "'");
  const auto [it, inserted] = records_.emplace(record.id, std::move(record));
  index_record(it->second);
}

void CorpusIndex::index_record(const ImageRecord& record) {
  for (const auto& k : record.keywords) by_keyword_[k].insert(record.id);
  for (const auto& o : record.objects) by_object_[o].insert(record.id);
}

const ImageRecord* CorpusIndex::find(std::string_view id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

const ImageRecord& CorpusIndex::at(std::string_view id) const {
  if (const auto* r = find(id)) return *r;
  fail(ErrorCode::not_found, "unknown image id '" + std::string(id) + "'");
}

const IdSet& CorpusIndex::with_keyword(std::string_view keyword) const {
  auto it = by_keyword_.find(keyword);
  return it == by_keyword_.end() ? empty_ids() : it->second;
}

const IdSet& CorpusIndex::with_object(std::string_view tag) const {
  auto it = by_object_.find(tag);
  return it == by_object_.end() ? empty_ids() : it->second;
}

void CorpusIndex::rebuild_indexes() {
  by_keyword_.clear();
  by_object_.clear();
  for (const auto& [id, record] : records_) index_record(record);
}

std::vector<std::string> CorpusIndex::semantic_vocabulary(const graph::AssociationGraph& graph) const {
  std::vector<std::string> out;
  for (const auto& [keyword, ids] : by_keyword_) {
    if (graph.contains(keyword)) out.push_back(keyword);
  }
  return out;
}

std::vector<std::string> CorpusIndex::object_vocabulary() const {
  std::vector<std::string> out;
  for (const auto& [tag, ids] : by_object_) out.push_back(tag);
  return out;
}

IdSet candidates_in_concepts(const CorpusIndex& index, const graph::ConceptSet& concepts) {
  IdSet out;
  for (const auto& member : concepts.members) {
    const auto& ids = index.with_keyword(member.word);
    out.insert(ids.begin(), ids.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// BlobStore

BlobStore::BlobStore(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

std::string BlobStore::put(std::span<const std::uint8_t> bytes) {
  const std::string hash = sha256_hex(bytes);
  std::lock_guard lock(mutex_);
  if (directory_) {
    const auto path = *directory_ / hash;
    if (!std::filesystem::exists(path)) {
      const auto tmp = *directory_ / (hash + ".tmp");
      write_file(tmp.string(), bytes);
      std::filesystem::rename(tmp, path);
    }
  } else {
    memory_.try_emplace(hash, bytes.begin(), bytes.end());
  }
  return hash;
}

std::vector<std::uint8_t> BlobStore::get(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  if (directory_) {
    const auto path = *directory_ / hash;
    if (!std::filesystem::exists(path)) fail(ErrorCode::not_found, "missing blob " + hash);
    return read_file(path.string());
  }
  auto it = memory_.find(hash);
  if (it == memory_.end()) fail(ErrorCode::not_found, "missing blob " + hash);
  return it->second;
}

bool BlobStore::contains(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  return directory_ ? std::filesystem::exists(*directory_ / hash) : memory_.count(hash) > 0;
}

// ---------------------------------------------------------------------------
// Serialization

json record_to_json(const ImageRecord& r) {
  json palette = json::array();
  for (const auto& e : r.palette) palette.push_back({e.color.r, e.color.g, e.color.b, e.population});
  json doc{{"id", r.id},
           {"uri", r.uri},
           {"keywords", r.keywords},
           {"out_of_vocabulary", r.out_of_vocabulary},
           {"objects", r.objects},
           {"dominant", {r.dominant.r, r.dominant.g, r.dominant.b}},
           {"palette", std::move(palette)},
           {"width", r.width},
           {"height", r.height},
           {"source", to_string(r.source)}};
  if (r.caption) doc["caption"] = *r.caption;
  return doc;
}

ImageRecord record_from_json(const json& doc) {
  try {
    ImageRecord r;
    r.id = doc.at("id").get<std::string>();
    r.uri = doc.at("uri").get<std::string>();
    r.keywords = doc.at("keywords").get<std::vector<std::string>>();
    r.out_of_vocabulary = doc.value("out_of_vocabulary", std::vector<std::string>{});
    r.objects = doc.value("objects", std::vector<std::string>{});
    const auto d = doc.at("dominant");
    r.dominant = {d.at(0).get<std::uint8_t>(), d.at(1).get<std::uint8_t>(), d.at(2).get<std::uint8_t>()};
    for (const auto& e : doc.at("palette")) {
      r.palette.push_back({{e.at(0).get<std::uint8_t>(), e.at(1).get<std::uint8_t>(), e.at(2).get<std::uint8_t>()},
                           e.at(3).get<std::uint32_t>()});
    }
    r.width = doc.value("width", 0u);
    r.height = doc.value("height", 0u);
    r.source = source_from_string(doc.value("source", std::string("manifest")));
    if (doc.contains("caption")) r.caption = doc.at("caption").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::bad_request, std::string("image record: ") + e.what());
  }
}

json index_to_json(const CorpusIndex& index) {
  json records = json::array();
  for (const auto& [id, record] : index.records()) records.push_back(record_to_json(record));
  return {{"format_version", kIndexFormatVersion}, {"id_counter", index.id_counter}, {"records", std::move(records)}};
}

CorpusIndex index_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("format_version")) fail(ErrorCode::bad_request, "corpus index: missing format_version");
  if (doc.at("format_version") != kIndexFormatVersion) {
    fail(ErrorCode::bad_request, "corpus index: unsupported format_version " + doc.at("format_version").dump());
  }
  CorpusIndex index;
  index.id_counter = doc.value("id_counter", std::uint64_t{0});
  if (!doc.contains("records") || !doc.at("records").is_array()) fail(ErrorCode::bad_request, "corpus index: records must be an array");
  for (const auto& r : doc.at("records")) index.add(record_from_json(r));
  return index;
}

// ---------------------------------------------------------------------------
// Manifest ingestion

std::vector<ManifestRow> parse_manifest(std::istream& in) {
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      fail(ErrorCode::bad_request, where + ": not valid JSON");
    }
    ManifestRow row;
    row.line = line_no;
    try {
      row.id = trim(doc.at("id").get<std::string>());
      row.uri = trim(doc.at("uri").get<std::string>());
      row.keywords = normalized_tokens(doc.at("keywords").get<std::vector<std::string>>());
      if (doc.contains("objects") && !doc.at("objects").is_null()) {
        row.objects = normalized_tokens(doc.at("objects").get<std::vector<std::string>>());
      }
    } catch (const json::exception&) {
      fail(ErrorCode::bad_request, where + ": expected string id, string uri, keyword array and optional object array");
    }
    if (row.id.empty()) fail(ErrorCode::bad_request, where + ": empty id");
    if (row.uri.empty()) fail(ErrorCode::bad_request, where + ": empty uri");
    if (row.keywords.empty()) fail(ErrorCode::bad_request, where + ": at least one keyword is required");
    if (!seen.insert(row.id).second) fail(ErrorCode::conflict, where + ": duplicate image id '" + row.id + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

void annotate_pixels(ImageRecord& record, const image::Raster& raster, const AnnotationOptions& options) {
  record.width = raster.width;
  record.height = raster.height;
  const auto small = image::downscale(raster, options.max_edge);
  record.palette = color::quantize_palette(small, color::kDefaultPaletteSize);
  record.dominant = record.palette.front().color;
}

IngestReport ingest_manifest(std::span<const ManifestRow> rows, const std::filesystem::path& base_dir,
                             const graph::AssociationGraph& graph, providers::ProviderSuite& suite,
                             CorpusIndex existing, const AnnotationOptions& options) {
  IngestReport report;
  report.index = std::move(existing);
  std::set<std::string> seen;
  for (const auto& row : rows) {
    if (!seen.insert(row.id).second) {
      fail(ErrorCode::conflict, "manifest line " + std::to_string(row.line) + ": duplicate image id '" + row.id + "'");
    }
    if (report.index.contains(row.id)) {
      ++report.resumed;
      continue;
    }
    if (row.uri.starts_with("http://") || row.uri.starts_with("https://")) {
      report.skipped.push_back({row.line, row.id, "remote URIs are not fetched; download the image first"});
      continue;
    }
    std::vector<std::uint8_t> bytes;
    image::Raster raster;
    std::filesystem::path path(row.uri);
    if (path.is_relative()) path = base_dir / path;
    try {
      bytes = read_file(path.string());
      raster = image::decode(bytes);
    } catch (const Error& e) {
      report.skipped.push_back({row.line, row.id, e.what()});
      continue;
    }

    ImageRecord record;
    record.id = row.id;
    record.uri = row.uri;
    record.keywords = normalized_tokens(row.keywords);
    flag_out_of_vocabulary(record, graph);
    if (row.objects) {
      record.objects = *row.objects;
    } else {
      record.objects = normalized_tokens(suite.detect->detect({bytes, record.keywords}));
      ++report.detector_calls;
    }
    annotate_pixels(record, raster, options);
    record.source = RecordSource::manifest;
    report.index.add(std::move(record));
    ++report.annotated;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(CorpusIndex index, std::shared_ptr<BlobStore> blobs, std::filesystem::path base_dir,
               std::uint64_t id_seed)
    : index_(std::move(index)), blobs_(std::move(blobs)), base_dir_(std::move(base_dir)), id_seed_(id_seed) {
  if (!blobs_) blobs_ = std::make_shared<BlobStore>();
}

ImageRecord Corpus::record(std::string_view id) const {
  std::shared_lock lock(mutex_);
  return index_.at(id);
}

bool Corpus::contains(std::string_view id) const {
  std::shared_lock lock(mutex_);
  return index_.contains(id);
}

std::size_t Corpus::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

void Corpus::add(ImageRecord record) {
  std::unique_lock lock(mutex_);
  const json line = record_to_json(record);
  index_.add(std::move(record));
  if (append_log_) {
    std::ofstream out(*append_log_, std::ios::app);
    out << line.dump() << '\n';
  }
}

std::vector<std::uint8_t> Corpus::image_bytes(const ImageRecord& record) const {
  if (record.uri.starts_with("blob:")) return blobs_->get(record.uri.substr(5));
  std::filesystem::path path(record.uri);
  if (path.is_relative()) path = base_dir_ / path;
  return read_file(path.string());
}

std::string Corpus::next_id(const std::string& content_hash) {
  std::unique_lock lock(mutex_);
  for (;;) {
    std::uint64_t state = id_seed_ ^ (0xA5A5A5A5ULL + index_.id_counter++);
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "%06llx", static_cast<unsigned long long>(splitmix64(state) & 0xFFFFFF));
    std::string id = content_hash.substr(0, 12) + "-" + suffix;
    if (!index_.contains(id)) return id;
  }
}

void Corpus::set_append_log(std::filesystem::path path) {
  std::unique_lock lock(mutex_);
  append_log_ = std::move(path);
}

void Corpus::replay_append_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  std::unique_lock lock(mutex_);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto record = record_from_json(json::parse(line));
    if (!index_.contains(record.id)) {
      index_.add(std::move(record));
      ++index_.id_counter;
    }
  }
}

CorpusIndex Corpus::snapshot() const {
  std::shared_lock lock(mutex_);
  return index_;
}

ImageRecord annotate_and_add(Corpus& corpus, const graph::AssociationGraph& graph, providers::ProviderSuite& suite,
                             std::span<const std::uint8_t> bytes, RecordSource source,
                             const std::vector<std::string>& inherited_keywords, const AnnotationOptions& options) {
  const image::Raster raster = image::decode(bytes);
  const std::vector<std::uint8_t> owned(bytes.begin(), bytes.end());

  ImageRecord record;
  record.caption = suite.caption->caption({owned, {}});
  const auto labels = corpus.read([&](const CorpusIndex& index) { return index.semantic_vocabulary(graph); });
  if (!labels.empty()) {
    for (const auto& label : suite.classify->classify(*record.caption, labels)) {
      if (record.keywords.size() >= options.upload_keywords) break;
      if (label.confidence >= options.min_confidence) push_unique(record.keywords, label.label);
    }
  }
  for (const auto& k : inherited_keywords) push_unique(record.keywords, k);
  flag_out_of_vocabulary(record, graph);
  record.objects = normalized_tokens(suite.detect->detect({owned, record.keywords}));
  annotate_pixels(record, raster, options);
  record.source = source;

  const std::string hash = corpus.blobs().put(bytes);
  record.uri = "blob:" + hash;
  record.id = corpus.next_id(hash);
  corpus.add(record);
  return record;
}

std::string describe(const Corpus& corpus, providers::ProviderSuite& suite, const ImageRecord& record) {
  if (record.caption) return *record.caption;
  return suite.caption->caption({corpus.image_bytes(record), record.keywords});
}

}  // namespace promoboard::corpus
