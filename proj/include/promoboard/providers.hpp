#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promoboard/error.hpp"
#include "promoboard/image.hpp"

namespace promoboard::providers {

enum class Capability { chat, image_gen, inpaint, caption, detect, classify };

std::string_view to_string(Capability capability);
std::optional<Capability> capability_from_string(std::string_view name);
inline constexpr Capability kAllCapabilities[] = {Capability::chat,    Capability::image_gen,
                                                  Capability::inpaint, Capability::caption,
                                                  Capability::detect,  Capability::classify};

enum class FailureKind { timeout, auth, malformed_response, http_status, network, invalid_request };

std::string_view to_string(FailureKind kind);

/// Typed provider failure. Also an Error(provider_failure) so callers that
/// only care about the category can treat it uniformly.
class ProviderError : public Error {
 public:
  ProviderError(Capability capability, FailureKind kind, const std::string& detail);

  Capability capability() const noexcept { return capability_; }
  FailureKind kind() const noexcept { return kind_; }

 private:
  Capability capability_;
  FailureKind kind_;
};

/// Image handed to an image-understanding capability. `keywords` are corpus
/// annotations a live service ignores; the offline mock uses the first one.
struct ImageInput {
  std::vector<std::uint8_t> bytes;
  std::vector<std::string> keywords;
};

struct Label {
  std::string label;
  double confidence = 0.0;

  bool operator==(const Label&) const = default;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

class ImageGenProvider {
 public:
  virtual ~ImageGenProvider() = default;
  /// Returns encoded image bytes (PNG).
  virtual std::vector<std::uint8_t> generate(const std::string& prompt) = 0;
};

class InpaintProvider {
 public:
  virtual ~InpaintProvider() = default;
  virtual std::vector<std::uint8_t> inpaint(const std::vector<std::uint8_t>& png, const image::Mask& mask,
                                            const std::string& prompt) = 0;
};

class CaptionProvider {
 public:
  virtual ~CaptionProvider() = default;
  virtual std::string caption(const ImageInput& image) = 0;
};

class DetectProvider {
 public:
  virtual ~DetectProvider() = default;
  /// Object tags, most probable first.
  virtual std::vector<std::string> detect(const ImageInput& image) = 0;
};

class ClassifyProvider {
 public:
  virtual ~ClassifyProvider() = default;
  /// Every candidate label with a confidence, best first.
  virtual std::vector<Label> classify(const std::string& text, const std::vector<std::string>& labels) = 0;
};

/// The six capabilities every other module depends on.
struct ProviderSuite {
  std::shared_ptr<ChatProvider> chat;
  std::shared_ptr<ImageGenProvider> image_gen;
  std::shared_ptr<InpaintProvider> inpaint;
  std::shared_ptr<CaptionProvider> caption;
  std::shared_ptr<DetectProvider> detect;
  std::shared_ptr<ClassifyProvider> classify;
};

enum class Mode { mock, live };

struct CapabilityConfig {
  Mode mode = Mode::mock;
  std::string url;
  std::string key;
  std::string model;
  std::chrono::milliseconds timeout{120'000};
  int retries = 3;
  std::chrono::milliseconds backoff{500};
};

struct ProviderConfig {
  std::map<Capability, CapabilityConfig> capabilities;
  std::uint64_t mock_seed = 0;
  std::uint32_t mock_image_size = 256;
  bool cache_responses = false;
  std::size_t max_in_flight = 0;  // 0 = unbounded

  /// Every capability in `mode`, other fields defaulted.
  static ProviderConfig uniform(Mode mode);

  /// Reads PROMOBOARD_<CAPABILITY>_{URL,KEY,MODEL,MODE,TIMEOUT_MS,RETRIES},
  /// falling back to `default_mode` when _MODE is absent.
  static ProviderConfig from_env(Mode default_mode,
                                 const std::function<std::optional<std::string>(const std::string&)>& getenv);

  /// Throws Error(bad_request) when a live capability lacks URL or key.
  void validate() const;
};

ProviderSuite make_suite(const ProviderConfig& config);

// Offline implementations. They are pure functions of (request, seed).

class MockChat : public ChatProvider {
 public:
  explicit MockChat(std::uint64_t seed = 0) : seed_(seed) {}
  std::string complete(const std::string& prompt) override;

 private:
  std::uint64_t seed_;
};

/// Solid colour derived from the prompt hash. The prompt travels in the PNG
/// `Description` text chunk, which MockCaption reads back.
class MockImageGen : public ImageGenProvider {
 public:
  MockImageGen(std::uint64_t seed = 0, std::uint32_t size = 256) : seed_(seed), size_(size) {}
  std::vector<std::uint8_t> generate(const std::string& prompt) override;
  image::Rgb color_for(const std::string& prompt) const;

 private:
  std::uint64_t seed_;
  std::uint32_t size_;
};

/// Copies unmasked pixels verbatim and fills masked ones with a colour
/// derived from the prompt.
class MockInpaint : public InpaintProvider {
 public:
  explicit MockInpaint(std::uint64_t seed = 0) : seed_(seed) {}
  std::vector<std::uint8_t> inpaint(const std::vector<std::uint8_t>& png, const image::Mask& mask,
                                    const std::string& prompt) override;

 private:
  std::uint64_t seed_;
};

/// Embedded `Description` chunk if present, otherwise "image of <first
/// keyword>", otherwise "image of <word picked by content hash>".
class MockCaption : public CaptionProvider {
 public:
  explicit MockCaption(std::uint64_t seed = 0) : seed_(seed) {}
  std::string caption(const ImageInput& image) override;

 private:
  std::uint64_t seed_;
};

/// Tags from an embedded `Objects` chunk (comma separated, may be empty);
/// otherwise zero to two tags picked by content hash.
class MockDetect : public DetectProvider {
 public:
  explicit MockDetect(std::uint64_t seed = 0) : seed_(seed) {}
  std::vector<std::string> detect(const ImageInput& image) override;
  static const std::vector<std::string>& vocabulary();

 private:
  std::uint64_t seed_;
};

/// Ranks labels by token overlap with the text: confidence = shared tokens /
/// label tokens; ties by larger overlap, then label text.
class MockClassify : public ClassifyProvider {
 public:
  std::vector<Label> classify(const std::string& text, const std::vector<std::string>& labels) override;
};

/// Opt-in response cache keyed by request hash.
class CachingChat : public ChatProvider {
 public:
  explicit CachingChat(std::shared_ptr<ChatProvider> inner) : inner_(std::move(inner)) {}
  std::string complete(const std::string& prompt) override;
  std::size_t hits() const;

 private:
  std::shared_ptr<ChatProvider> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> cache_;
  std::size_t hits_ = 0;
};

class CachingImageGen : public ImageGenProvider {
 public:
  explicit CachingImageGen(std::shared_ptr<ImageGenProvider> inner) : inner_(std::move(inner)) {}
  std::vector<std::uint8_t> generate(const std::string& prompt) override;

 private:
  std::shared_ptr<ImageGenProvider> inner_;
  std::mutex mutex_;
  std::map<std::string, std::vector<std::uint8_t>> cache_;
};

/// Bounds the number of concurrent provider calls across a suite.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t limit) : limit_(limit) {}
  void acquire();
  void release();

 private:
  std::size_t limit_;
  std::size_t active_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

/// Wraps every capability of `suite` so at most `limit` calls run at once.
ProviderSuite limit_in_flight(ProviderSuite suite, std::size_t limit);

// Live HTTP clients. Vendor shapes: OpenAI-style chat completions and image
// generation/edit endpoints; Hugging Face inference style for caption,
// detection and zero-shot classification.

class LiveChat : public ChatProvider {
 public:
  explicit LiveChat(CapabilityConfig config);
  std::string complete(const std::string& prompt) override;

 private:
  CapabilityConfig config_;
};

class LiveImageGen : public ImageGenProvider {
 public:
  explicit LiveImageGen(CapabilityConfig config);
  std::vector<std::uint8_t> generate(const std::string& prompt) override;

 private:
  CapabilityConfig config_;
};

class LiveInpaint : public InpaintProvider {
 public:
  explicit LiveInpaint(CapabilityConfig config);
  std::vector<std::uint8_t> inpaint(const std::vector<std::uint8_t>& png, const image::Mask& mask,
                                    const std::string& prompt) override;

 private:
  CapabilityConfig config_;
};

class LiveCaption : public CaptionProvider {
 public:
  explicit LiveCaption(CapabilityConfig config);
  std::string caption(const ImageInput& image) override;

 private:
  CapabilityConfig config_;
};

class LiveDetect : public DetectProvider {
 public:
  explicit LiveDetect(CapabilityConfig config);
  std::vector<std::string> detect(const ImageInput& image) override;

 private:
  CapabilityConfig config_;
};

class LiveClassify : public ClassifyProvider {
 public:
  explicit LiveClassify(CapabilityConfig config);
  std::vector<Label> classify(const std::string& text, const std::vector<std::string>& labels) override;

 private:
  CapabilityConfig config_;
};

}  // namespace promoboard::providers
