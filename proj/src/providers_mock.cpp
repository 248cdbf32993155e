#include <algorithm>
#include <set>

#include "promoboard/providers.hpp"
#include "promoboard/util.hpp"

namespace promoboard::providers {

namespace {

constexpr std::string_view kCaptionPrefix = "Generate three promotional captions for each dimension";
constexpr std::string_view kRegeneratePrefix = "Regenerate the following promotional";

std::uint64_t seeded_hash(std::uint64_t seed, std::string_view text) {
  const std::string digest = sha256_hex(std::to_string(seed) + ":" + std::string(text));
  return std::stoull(digest.substr(0, 16), nullptr, 16);
}

std::uint64_t seeded_hash(std::uint64_t seed, std::span<const std::uint8_t> bytes) {
  return seeded_hash(seed, sha256_hex(bytes));
}

// Text between `start` and the first of `stops` after it.
std::string between(std::string_view text, std::string_view start, std::initializer_list<std::string_view> stops) {
  const auto begin = text.find(start);
  if (begin == std::string_view::npos) return {};
  const auto from = begin + start.size();
  auto end = text.size();
  for (auto stop : stops) {
    const auto at = text.find(stop, from);
    if (at != std::string_view::npos) end = std::min(end, at);
  }
  return trim(text.substr(from, end - from));
}

std::string last_word(std::string_view text) {
  const auto tokens = tokenize(text);
  return tokens.empty() ? std::string("style") : tokens.back();
}

const std::vector<std::string>& caption_words() {
  static const std::vector<std::string> kWords = {
      "apple", "beach", "bread", "breakfast", "cafe", "cake", "city", "coffee", "cookie", "flower", "forest",
      "fruit", "garden", "juice", "kitchen", "lemon", "market", "mountain", "noodle", "orange", "picnic",
      "pizza", "ramen", "salad", "sea", "smoothie", "street", "summer", "sunset", "tea", "travel", "winter"};
  return kWords;
}

std::string mock_caption_set(std::string_view prompt, std::uint64_t seed) {
  const std::string subject = between(prompt, "based on the given text: ", {" and following the given", ". please"});
  std::string steer = between(prompt, "following the given image prompt ", {". please"});
  if (steer.empty()) steer = between(prompt, "following the given prompt ", {". please"});
  static const char* kIcons[] = {"\xE2\x9C\xA8", "\xF0\x9F\x8C\x9F", "\xF0\x9F\x94\xA5", "\xF0\x9F\x8D\x8A",
                                 "\xF0\x9F\x8E\x89", "\xF0\x9F\x92\xAB"};
  const std::uint64_t h = seeded_hash(seed, prompt);
  const std::string focus = subject.empty() ? std::string("our product") : subject;
  const std::string tail = steer.empty() ? std::string() : " with a touch of " + steer;

  struct Dimension {
    const char* header;
    const char* lines[3];
  };
  static const Dimension kDims[] = {
      {"Product", {"Taste the *%s*%s", "Crafted with care: *%s*%s", "Your new favourite *%s*%s"}},
      {"Activity", {"Join our *%s* workshop%s", "Share your *%s* moment%s", "Weekend *%s* meetup%s"}},
      {"Advertisement", {"Get *%s* today%s", "Limited offer on *%s*%s", "Discover *%s* now%s"}},
  };
  std::string out;
  int icon = static_cast<int>(h % 6);
  for (const auto& dim : kDims) {
    out += std::string("**") + dim.header + "**\n";
    for (int i = 0; i < 3; ++i) {
      char buffer[1024];
      std::snprintf(buffer, sizeof buffer, dim.lines[i], focus.c_str(), tail.c_str());
      out += std::to_string(i + 1) + ". " + buffer + " " + kIcons[icon] + "\n";
      icon = (icon + 1) % 6;
    }
    out += "\n";
  }
  return out;
}

std::string mock_regenerated_caption(std::string_view prompt) {
  std::string caption = between(prompt, "promotional post caption: ", {" based on the given text prompt: "});
  std::string steer = between(prompt, "based on the given text prompt: ", {". Please also"});
  if (caption.empty()) {
    caption = between(prompt, "promotional caption ", {" based on the given image context: "});
    steer = between(prompt, "based on the given image context: ", {". Please also"});
  }
  return "\xE2\x9C\xA8 " + caption + " *" + last_word(steer) + "* \xE2\x9C\xA8";
}

}  // namespace

std::string MockChat::complete(const std::string& prompt) {
  if (prompt.starts_with(kCaptionPrefix)) return mock_caption_set(prompt, seed_);
  if (prompt.starts_with(kRegeneratePrefix)) return mock_regenerated_caption(prompt);
  return "mock response: " + prompt;
}

image::Rgb MockImageGen::color_for(const std::string& prompt) const {
  const std::uint64_t h = seeded_hash(seed_, prompt);
  return {static_cast<std::uint8_t>(h >> 56), static_cast<std::uint8_t>(h >> 48), static_cast<std::uint8_t>(h >> 40)};
}

std::vector<std::uint8_t> MockImageGen::generate(const std::string& prompt) {
  if (trim(prompt).empty()) {
    throw ProviderError(Capability::image_gen, FailureKind::invalid_request, "empty prompt");
  }
  const image::Raster raster(size_, size_, color_for(prompt));
  return image::encode_png(raster, {{"Description", prompt}});
}

std::vector<std::uint8_t> MockInpaint::inpaint(const std::vector<std::uint8_t>& png, const image::Mask& mask,
                                               const std::string& prompt) {
  image::Raster raster = image::decode(png);
  if (mask.width != raster.width || mask.height != raster.height) {
    throw ProviderError(Capability::inpaint, FailureKind::invalid_request, "mask dimensions differ from image");
  }
  const std::uint64_t h = seeded_hash(seed_, prompt);
  const image::Rgb fill{static_cast<std::uint8_t>(h >> 56), static_cast<std::uint8_t>(h >> 48),
                        static_cast<std::uint8_t>(h >> 40)};
  for (std::uint32_t y = 0; y < raster.height; ++y) {
    for (std::uint32_t x = 0; x < raster.width; ++x) {
      if (mask.at(x, y)) raster.set(x, y, fill);
    }
  }
  auto metadata = image::read_png_text(png);
  metadata["Description"] = metadata.count("Description") ? metadata["Description"] + " with " + prompt : prompt;
  return image::encode_png(raster, metadata);
}

std::string MockCaption::caption(const ImageInput& image) {
  const auto metadata = image::read_png_text(image.bytes);
  if (auto it = metadata.find("Description"); it != metadata.end() && !it->second.empty()) return it->second;
  if (!image.keywords.empty()) return "image of " + image.keywords.front();
  const auto& words = caption_words();
  return "image of " + words[seeded_hash(seed_, image.bytes) % words.size()];
}

const std::vector<std::string>& MockDetect::vocabulary() {
  static const std::vector<std::string> kVocabulary = {
      "apple", "banana", "book", "bottle", "bowl", "cake", "chair", "clock", "cup", "donut",
      "laptop", "orange", "person", "pizza", "plant", "sandwich", "table", "vase"};
  return kVocabulary;
}

std::vector<std::string> MockDetect::detect(const ImageInput& image) {
  const auto metadata = image::read_png_text(image.bytes);
  if (auto it = metadata.find("Objects"); it != metadata.end()) {
    std::vector<std::string> tags;
    for (const auto& field : split_csv_line(it->second)) {
      auto tag = to_lower(trim(field));
      if (!tag.empty() && std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(std::move(tag));
    }
    return tags;
  }
  std::uint64_t state = seeded_hash(seed_, image.bytes);
  const auto& vocab = vocabulary();
  const auto count = splitmix64(state) % 3;
  std::vector<std::string> tags;
  while (tags.size() < count) {
    const auto& tag = vocab[splitmix64(state) % vocab.size()];
    if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(tag);
  }
  return tags;
}

std::vector<Label> MockClassify::classify(const std::string& text, const std::vector<std::string>& labels) {
  const auto text_tokens = tokenize(text);
  const std::set<std::string> present(text_tokens.begin(), text_tokens.end());
  struct Scored {
    Label label;
    std::size_t overlap;
  };
  std::vector<Scored> scored;
  for (const auto& label : labels) {
    const auto tokens = tokenize(label);
    const std::set<std::string> unique(tokens.begin(), tokens.end());
    std::size_t overlap = 0;
    for (const auto& t : unique) overlap += present.count(t);
    const double confidence = unique.empty() ? 0.0 : static_cast<double>(overlap) / unique.size();
    scored.push_back({{label, confidence}, overlap});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.label.confidence != b.label.confidence) return a.label.confidence > b.label.confidence;
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return a.label.label < b.label.label;
  });
  std::vector<Label> out;
  out.reserve(scored.size());
  for (auto& s : scored) out.push_back(std::move(s.label));
  return out;
}

std::string CachingChat::complete(const std::string& prompt) {
  const std::string key = sha256_hex(prompt);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  std::string response = inner_->complete(prompt);
  std::lock_guard lock(mutex_);
  cache_.emplace(key, response);
  return response;
}

std::size_t CachingChat::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::vector<std::uint8_t> CachingImageGen::generate(const std::string& prompt) {
  const std::string key = sha256_hex(prompt);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto bytes = inner_->generate(prompt);
  std::lock_guard lock(mutex_);
  cache_.emplace(key, bytes);
  return bytes;
}

}  // namespace promoboard::providers
