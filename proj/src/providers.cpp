#include <httplib.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <thread>

#include "promoboard/providers.hpp"
#include "promoboard/util.hpp"

namespace promoboard::providers {

using nlohmann::json;

std::string_view to_string(Capability capability) {
  switch (capability) {
    case Capability::chat: return "chat";
    case Capability::image_gen: return "image_gen";
    case Capability::inpaint: return "inpaint";
    case Capability::caption: return "caption";
    case Capability::detect: return "detect";
    case Capability::classify: return "classify";
  }
  return "unknown";
}

std::optional<Capability> capability_from_string(std::string_view name) {
  for (auto c : kAllCapabilities) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::timeout: return "timeout";
    case FailureKind::auth: return "auth";
    case FailureKind::malformed_response: return "malformed_response";
    case FailureKind::http_status: return "http_status";
    case FailureKind::network: return "network";
    case FailureKind::invalid_request: return "invalid_request";
  }
  return "unknown";
}

ProviderError::ProviderError(Capability capability, FailureKind kind, const std::string& detail)
    : Error(ErrorCode::provider_failure,
            std::string(providers::to_string(capability)) + " provider " +
                std::string(providers::to_string(kind)) + ": " + detail,
            std::string(providers::to_string(capability))),
      capability_(capability),
      kind_(kind) {}

// ---------------------------------------------------------------------------
// Configuration

ProviderConfig ProviderConfig::uniform(Mode mode) {
  ProviderConfig config;
  for (auto c : kAllCapabilities) config.capabilities[c].mode = mode;
  return config;
}

ProviderConfig ProviderConfig::from_env(
    Mode default_mode, const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  ProviderConfig config = uniform(default_mode);
  for (auto c : kAllCapabilities) {
    std::string prefix = "PROMOBOARD_";
    for (char ch : to_string(c)) prefix.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    prefix.push_back('_');
    auto& cap = config.capabilities[c];
    if (auto v = getenv(prefix + "URL")) cap.url = *v;
    if (auto v = getenv(prefix + "KEY")) cap.key = *v;
    if (auto v = getenv(prefix + "MODEL")) cap.model = *v;
    if (auto v = getenv(prefix + "MODE")) {
      const auto mode = to_lower(trim(*v));
      if (mode == "live") cap.mode = Mode::live;
      else if (mode == "mock") cap.mode = Mode::mock;
      else fail(ErrorCode::bad_request, prefix + "MODE must be 'live' or 'mock'");
    }
    try {
      if (auto v = getenv(prefix + "TIMEOUT_MS")) cap.timeout = std::chrono::milliseconds(std::stoll(*v));
      if (auto v = getenv(prefix + "RETRIES")) cap.retries = std::stoi(*v);
    } catch (const std::exception&) {
      fail(ErrorCode::bad_request, prefix + "TIMEOUT_MS/RETRIES must be integers");
    }
  }
  return config;
}

void ProviderConfig::validate() const {
  for (const auto& [capability, cap] : capabilities) {
    if (cap.mode != Mode::live) continue;
    if (cap.url.empty()) fail(ErrorCode::bad_request, std::string(to_string(capability)) + ": live mode requires a URL");
    if (cap.key.empty()) {
      fail(ErrorCode::bad_request, std::string(to_string(capability)) + ": live mode requires a credential");
    }
  }
}

// ---------------------------------------------------------------------------
// HTTP plumbing shared by the live clients

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(Capability capability, const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ProviderError(capability, FailureKind::invalid_request, "endpoint URL lacks a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

void check_credentials(Capability capability, const CapabilityConfig& config) {
  if (config.key.empty()) throw ProviderError(capability, FailureKind::auth, "no credential configured");
  if (config.url.empty()) throw ProviderError(capability, FailureKind::invalid_request, "no endpoint configured");
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

/// Runs `send` up to the retry budget with exponential backoff and returns
/// the body of the first 2xx response.
std::string send_with_retry(Capability capability, const CapabilityConfig& config,
                            const std::function<httplib::Result(httplib::Client&, const httplib::Headers&)>& send) {
  check_credentials(capability, config);
  const Endpoint endpoint = split_url(capability, config.url);
  const int attempts = std::max(1, config.retries);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config.timeout).count();
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout).count() % 1'000'000;
  const httplib::Headers headers{{"Authorization", "Bearer " + config.key}};

  std::optional<ProviderError> last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config.backoff * (1 << (attempt - 1)));
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    const auto result = send(client, headers);
    if (!result) {
      const auto err = result.error();
      const auto kind = (err == httplib::Error::Read || err == httplib::Error::Write ||
                         err == httplib::Error::ConnectionTimeout)
                            ? FailureKind::timeout
                            : FailureKind::network;
      last.emplace(capability, kind, httplib::to_string(err));
      continue;
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw ProviderError(capability, FailureKind::auth, "HTTP " + std::to_string(status));
    }
    if (status >= 200 && status < 300) return result->body;
    last.emplace(capability, FailureKind::http_status, "HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200));
    if (!retryable(status)) break;
  }
  throw *last;
}

json parse_json(Capability capability, const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProviderError(capability, FailureKind::malformed_response, e.what());
  }
}

template <typename F>
auto extract(Capability capability, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ProviderError(capability, FailureKind::malformed_response, e.what());
  }
}

std::string post_json(Capability capability, const CapabilityConfig& config, const json& body) {
  const auto path = split_url(capability, config.url).path;
  return send_with_retry(capability, config, [&](httplib::Client& client, const httplib::Headers& headers) {
    return client.Post(path, headers, body.dump(), "application/json");
  });
}

std::string post_binary(Capability capability, const CapabilityConfig& config, const std::vector<std::uint8_t>& bytes) {
  const auto path = split_url(capability, config.url).path;
  const std::string body(bytes.begin(), bytes.end());
  return send_with_retry(capability, config, [&](httplib::Client& client, const httplib::Headers& headers) {
    return client.Post(path, headers, body, "application/octet-stream");
  });
}

std::vector<std::uint8_t> decode_image_response(Capability capability, const std::string& body) {
  const json doc = parse_json(capability, body);
  const auto b64 = extract(capability, [&] { return doc.at("data").at(0).at("b64_json").get<std::string>(); });
  try {
    return base64_decode(b64);
  } catch (const Error& e) {
    throw ProviderError(capability, FailureKind::malformed_response, e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Live clients

LiveChat::LiveChat(CapabilityConfig config) : config_(std::move(config)) {}

std::string LiveChat::complete(const std::string& prompt) {
  const json request{{"model", config_.model.empty() ? "gpt-4" : config_.model},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  const json doc = parse_json(Capability::chat, post_json(Capability::chat, config_, request));
  return extract(Capability::chat,
                 [&] { return doc.at("choices").at(0).at("message").at("content").get<std::string>(); });
}

LiveImageGen::LiveImageGen(CapabilityConfig config) : config_(std::move(config)) {}

std::vector<std::uint8_t> LiveImageGen::generate(const std::string& prompt) {
  const json request{{"model", config_.model.empty() ? "dall-e-3" : config_.model},
                     {"prompt", prompt},
                     {"n", 1},
                     {"size", "1024x1024"},
                     {"response_format", "b64_json"}};
  return decode_image_response(Capability::image_gen, post_json(Capability::image_gen, config_, request));
}

LiveInpaint::LiveInpaint(CapabilityConfig config) : config_(std::move(config)) {}

std::vector<std::uint8_t> LiveInpaint::inpaint(const std::vector<std::uint8_t>& png, const image::Mask& mask,
                                               const std::string& prompt) {
  // The edits endpoint repaints transparent pixels, so invert our coverage.
  image::Mask transparent_where_masked = mask;
  for (auto& v : transparent_where_masked.coverage) v = v ? 0 : 1;
  const auto mask_png = image::encode_alpha_mask(transparent_where_masked);
  const auto path = split_url(Capability::inpaint, config_.url).path;
  const httplib::MultipartFormDataItems items{
      {"image", std::string(png.begin(), png.end()), "image.png", "image/png"},
      {"mask", std::string(mask_png.begin(), mask_png.end()), "mask.png", "image/png"},
      {"prompt", prompt, "", ""},
      {"model", config_.model.empty() ? "dall-e-2" : config_.model, "", ""},
      {"response_format", "b64_json", "", ""},
  };
  const auto body = send_with_retry(Capability::inpaint, config_,
                                    [&](httplib::Client& client, const httplib::Headers& headers) {
                                      return client.Post(path, headers, items);
                                    });
  return decode_image_response(Capability::inpaint, body);
}

LiveCaption::LiveCaption(CapabilityConfig config) : config_(std::move(config)) {}

std::string LiveCaption::caption(const ImageInput& image) {
  const json doc = parse_json(Capability::caption, post_binary(Capability::caption, config_, image.bytes));
  return extract(Capability::caption, [&] {
    const json& first = doc.is_array() ? doc.at(0) : doc;
    return first.at("generated_text").get<std::string>();
  });
}

LiveDetect::LiveDetect(CapabilityConfig config) : config_(std::move(config)) {}

std::vector<std::string> LiveDetect::detect(const ImageInput& image) {
  const json doc = parse_json(Capability::detect, post_binary(Capability::detect, config_, image.bytes));
  return extract(Capability::detect, [&] {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& item : doc) scored.emplace_back(item.at("score").get<double>(), item.at("label").get<std::string>());
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> tags;
    for (auto& [score, label] : scored) {
      auto tag = to_lower(trim(label));
      if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(std::move(tag));
    }
    return tags;
  });
}

LiveClassify::LiveClassify(CapabilityConfig config) : config_(std::move(config)) {}

std::vector<Label> LiveClassify::classify(const std::string& text, const std::vector<std::string>& labels) {
  if (labels.empty()) return {};
  const json request{{"inputs", text}, {"parameters", {{"candidate_labels", labels}}}};
  const json doc = parse_json(Capability::classify, post_json(Capability::classify, config_, request));
  return extract(Capability::classify, [&] {
    std::vector<Label> out;
    if (doc.is_object()) {
      const auto& names = doc.at("labels");
      const auto& scores = doc.at("scores");
      for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names.at(i).get<std::string>(), scores.at(i).get<double>()});
    } else {
      for (const auto& item : doc) out.push_back({item.at("label").get<std::string>(), item.at("score").get<double>()});
    }
    std::stable_sort(out.begin(), out.end(), [](const Label& a, const Label& b) { return a.confidence > b.confidence; });
    return out;
  });
}

// ---------------------------------------------------------------------------
// Concurrency limiting

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return active_ < limit_; });
  ++active_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

namespace {

struct Slot {
  explicit Slot(InFlightLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
  ~Slot() { limiter_.release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;
  InFlightLimiter& limiter_;
};

struct LimitedChat : ChatProvider {
  std::shared_ptr<ChatProvider> inner;
  std::shared_ptr<InFlightLimiter> limiter;
  std::string complete(const std::string& p) override {
    Slot slot(*limiter);
    return inner->complete(p);
  }
};
struct LimitedImageGen : ImageGenProvider {
  std::shared_ptr<ImageGenProvider> inner;
  std::shared_ptr<InFlightLimiter> limiter;
  std::vector<std::uint8_t> generate(const std::string& p) override {
    Slot slot(*limiter);
    return inner->generate(p);
  }
};
struct LimitedInpaint : InpaintProvider {
  std::shared_ptr<InpaintProvider> inner;
  std::shared_ptr<InFlightLimiter> limiter;
  std::vector<std::uint8_t> inpaint(const std::vector<std::uint8_t>& png, const image::Mask& m,
                                    const std::string& p) override {
    Slot slot(*limiter);
    return inner->inpaint(png, m, p);
  }
};
struct LimitedCaption : CaptionProvider {
  std::shared_ptr<CaptionProvider> inner;
  std::shared_ptr<InFlightLimiter> limiter;
  std::string caption(const ImageInput& i) override {
    Slot slot(*limiter);
    return inner->caption(i);
  }
};
struct LimitedDetect : DetectProvider {
  std::shared_ptr<DetectProvider> inner;
  std::shared_ptr<InFlightLimiter> limiter;
  std::vector<std::string> detect(const ImageInput& i) override {
    Slot slot(*limiter);
    return inner->detect(i);
  }
};
struct LimitedClassify : ClassifyProvider {
  std::shared_ptr<ClassifyProvider> inner;
  std::shared_ptr<InFlightLimiter> limiter;
  std::vector<Label> classify(const std::string& t, const std::vector<std::string>& l) override {
    Slot slot(*limiter);
    return inner->classify(t, l);
  }
};

template <typename Wrapper, typename Inner>
std::shared_ptr<Wrapper> wrap(std::shared_ptr<Inner> inner, const std::shared_ptr<InFlightLimiter>& limiter) {
  auto w = std::make_shared<Wrapper>();
  w->inner = std::move(inner);
  w->limiter = limiter;
  return w;
}

}  // namespace

ProviderSuite limit_in_flight(ProviderSuite suite, std::size_t limit) {
  auto limiter = std::make_shared<InFlightLimiter>(limit);
  return {wrap<LimitedChat>(suite.chat, limiter),       wrap<LimitedImageGen>(suite.image_gen, limiter),
          wrap<LimitedInpaint>(suite.inpaint, limiter), wrap<LimitedCaption>(suite.caption, limiter),
          wrap<LimitedDetect>(suite.detect, limiter),   wrap<LimitedClassify>(suite.classify, limiter)};
}

ProviderSuite make_suite(const ProviderConfig& config) {
  config.validate();
  const auto cfg = [&config](Capability c) {
    auto it = config.capabilities.find(c);
    return it == config.capabilities.end() ? CapabilityConfig{} : it->second;
  };
  const auto live = [&](Capability c) { return cfg(c).mode == Mode::live; };
  const auto seed = config.mock_seed;

  ProviderSuite suite;
  suite.chat = live(Capability::chat) ? std::shared_ptr<ChatProvider>(std::make_shared<LiveChat>(cfg(Capability::chat)))
                                      : std::make_shared<MockChat>(seed);
  suite.image_gen = live(Capability::image_gen)
                        ? std::shared_ptr<ImageGenProvider>(std::make_shared<LiveImageGen>(cfg(Capability::image_gen)))
                        : std::make_shared<MockImageGen>(seed, config.mock_image_size);
  suite.inpaint = live(Capability::inpaint)
                      ? std::shared_ptr<InpaintProvider>(std::make_shared<LiveInpaint>(cfg(Capability::inpaint)))
                      : std::make_shared<MockInpaint>(seed);
  suite.caption = live(Capability::caption)
                      ? std::shared_ptr<CaptionProvider>(std::make_shared<LiveCaption>(cfg(Capability::caption)))
                      : std::make_shared<MockCaption>(seed);
  suite.detect = live(Capability::detect)
                     ? std::shared_ptr<DetectProvider>(std::make_shared<LiveDetect>(cfg(Capability::detect)))
                     : std::make_shared<MockDetect>(seed);
  suite.classify = live(Capability::classify)
                       ? std::shared_ptr<ClassifyProvider>(std::make_shared<LiveClassify>(cfg(Capability::classify)))
                       : std::make_shared<MockClassify>();
  if (config.cache_responses) {
    suite.chat = std::make_shared<CachingChat>(suite.chat);
    suite.image_gen = std::make_shared<CachingImageGen>(suite.image_gen);
  }
  if (config.max_in_flight > 0) suite = limit_in_flight(std::move(suite), config.max_in_flight);
  return suite;
}

}  // namespace promoboard::providers
