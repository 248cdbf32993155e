#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "promoboard/association_graph.hpp"
#include "promoboard/corpus.hpp"
#include "promoboard/image.hpp"
#include "promoboard/providers.hpp"
#include "promoboard/services.hpp"

namespace pbtest {

namespace fs = std::filesystem;
using namespace promoboard;

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  fs::path path;
};

using Association = std::tuple<std::string, std::string, std::int64_t>;

std::vector<graph::AssociationRow> rows_of(const std::vector<Association>& edges);
graph::AssociationGraph graph_of(const std::vector<Association>& edges);

std::vector<std::uint8_t> solid_png(image::Rgb color, std::uint32_t w = 16, std::uint32_t h = 16,
                                    const image::Metadata& metadata = {});
image::Raster noise_raster(std::uint64_t seed, std::uint32_t w, std::uint32_t h);

struct ToyImage {
  std::string id;
  image::Rgb color;
  std::vector<std::string> keywords;
  std::vector<std::string> objects;
};

/// Records every prompt before delegating.
class RecordingChat : public providers::ChatProvider {
 public:
  explicit RecordingChat(std::shared_ptr<providers::ChatProvider> inner) : inner_(std::move(inner)) {}
  std::string complete(const std::string& prompt) override;
  std::vector<std::string> prompts() const;

 private:
  std::shared_ptr<providers::ChatProvider> inner_;
  mutable std::mutex mutex_;
  std::vector<std::string> prompts_;
};

class RecordingImageGen : public providers::ImageGenProvider {
 public:
  explicit RecordingImageGen(std::shared_ptr<providers::ImageGenProvider> inner) : inner_(std::move(inner)) {}
  std::vector<std::uint8_t> generate(const std::string& prompt) override;
  std::vector<std::string> prompts() const;

 private:
  std::shared_ptr<providers::ImageGenProvider> inner_;
  mutable std::mutex mutex_;
  std::vector<std::string> prompts_;
};

class RecordingClassify : public providers::ClassifyProvider {
 public:
  std::vector<providers::Label> classify(const std::string& text, const std::vector<std::string>& labels) override;
  std::vector<std::string> texts;

 private:
  providers::MockClassify inner_;
};

/// Replies with canned responses in order (the last one repeats).
class ScriptedChat : public providers::ChatProvider {
 public:
  explicit ScriptedChat(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const std::string& prompt) override;
  std::size_t calls = 0;

 private:
  std::vector<std::string> replies_;
};

class FailingImageGen : public providers::ImageGenProvider {
 public:
  std::vector<std::uint8_t> generate(const std::string& prompt) override;
};

/// A small corpus of solid-colour PNG blobs. Each image carries a
/// `Description` chunk ("image of <first keyword>") and an `Objects` chunk,
/// so the mock caption and detect providers answer from them.
struct Fixture {
  graph::AssociationGraph graph;
  std::shared_ptr<corpus::BlobStore> blobs;
  std::unique_ptr<corpus::Corpus> corpus;
  providers::ProviderSuite suite;
  std::shared_ptr<RecordingChat> chat;
  std::shared_ptr<RecordingImageGen> image_gen;
  std::unique_ptr<Services> services;

  Services& svc() { return *services; }
  corpus::ImageRecord record(const std::string& id) const { return corpus->record(id); }
};

std::unique_ptr<Fixture> make_fixture(const std::vector<Association>& edges, const std::vector<ToyImage>& images,
                                      std::uint64_t seed = 0, std::uint32_t image_size = 16);

/// juice/orange/fruit/health/... graph with eight tagged images.
std::unique_ptr<Fixture> toy_fixture(std::uint64_t seed = 0);
extern const std::vector<Association> kToyAssociations;
extern const std::vector<ToyImage> kToyImages;

/// Random graph plus an annotated corpus built directly as records.
struct SyntheticWorld {
  std::vector<graph::AssociationRow> rows;
  graph::AssociationGraph graph;
  corpus::CorpusIndex index;
};
SyntheticWorld synthetic_world(std::uint64_t seed, std::size_t images, std::size_t words = 40);

/// Builds a random corpus around a seed image tagged "alpha" and a context
/// image that reads as "beta" holding a "cup", runs image-context exploration
/// and compares every row with an independently sorted expectation. Returns
/// a description of the first mismatch.
std::optional<std::string> check_priority_rule(std::uint64_t seed);

/// Runs `steps` random studio actions on a fresh canvas and checks after
/// each one: revision growth (or an untouched canvas on failure), edge kinds
/// by action, referential integrity, no edges on deleted blocks, and
/// save/load equality. Returns the first violation.
std::optional<std::string> check_canvas_sequence(Fixture& fixture, std::uint64_t seed, std::size_t steps);

/// Chat-style caption reply with the given number of captions per dimension.
std::string caption_fixture(std::size_t product = 3, std::size_t activity = 3, std::size_t advertisement = 3);

}  // namespace pbtest
