#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "promoboard/canvas.hpp"
#include "promoboard/error.hpp"
#include "promoboard/studio.hpp"

namespace httplib {
class Server;
}

namespace promoboard::server {

/// HTTP status for an error category.
int status_for(ErrorCode code);

/// `{"error": {"code", "message", "provider"?}}`. Decode failures are
/// reported as bad_request.
nlohmann::json error_envelope(const Error& error);

struct ApiOptions {
  studio::StudioOptions studio;
  /// Canvas documents are written here after every mutation and loaded on
  /// start. Without it canvases live in memory only.
  std::optional<std::filesystem::path> canvas_dir;
};

/// JSON facade over the studio. Mutations of one canvas are serialized;
/// different canvases and read-only queries proceed concurrently.
class Api {
 public:
  Api(Services services, ApiOptions options = {});

  /// Registers every route on `http`.
  void install(httplib::Server& http);

  /// Current document of a canvas (canonical bytes).
  std::string canvas_document(const std::string& id);

 private:
  struct Slot {
    std::mutex mutex;
    canvas::Canvas canvas;
    nlohmann::json extra = nlohmann::json::object();
  };

  std::shared_ptr<Slot> slot(const std::string& id);
  std::string create_canvas(std::optional<std::string> id);
  void persist(const Slot& slot);

  studio::Studio studio_;
  ApiOptions options_;
  std::mutex canvases_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> canvases_;
  std::uint64_t canvas_counter_ = 0;
};

}  // namespace promoboard::server
