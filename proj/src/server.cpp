#include "promoboard/server.hpp"

#include <httplib.h>

#include <regex>

#include "promoboard/context_explorer.hpp"
#include "promoboard/fusion.hpp"
#include "promoboard/providers.hpp"
#include "promoboard/recommender.hpp"
#include "promoboard/util.hpp"

namespace promoboard::server {

using nlohmann::json;

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_request:
    case ErrorCode::decode: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::provider_failure:
    case ErrorCode::parse_failure: return 502;
  }
  return 500;
}

json error_envelope(const Error& error) {
  const ErrorCode code = error.code() == ErrorCode::decode ? ErrorCode::bad_request : error.code();
  json body{{"code", to_string(code)}, {"message", error.what()}};
  if (code == ErrorCode::provider_failure) body["provider"] = error.provider().value_or("unknown");
  return {{"error", std::move(body)}};
}

namespace {

const std::regex kCanvasIdPattern("[A-Za-z0-9_-]{1,64}");

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, error_envelope(e), status_for(e.code()));
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Every route answers with a body or an error envelope, whatever is thrown.
Handler guarded(Handler inner) {
  return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
    try {
      inner(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_error(res, Error(ErrorCode::bad_request, std::string("malformed request: ") + e.what()));
    } catch (const std::exception& e) {
      send_json(res, error_envelope(Error(ErrorCode::bad_request, std::string("internal error: ") + e.what())), 500);
    }
  };
}

json parse_body(const httplib::Request& req) {
  json body;
  try {
    body = req.body.empty() ? json::object() : json::parse(req.body);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::bad_request, std::string("request body is not valid JSON: ") + e.what());
  }
  require(body.is_object(), "request body must be a JSON object");
  return body;
}

std::string string_field(const json& body, const char* key) {
  const auto it = body.find(key);
  require(it != body.end(), std::string("missing field '") + key + "'");
  require(it->is_string(), std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  require(it->is_string(), std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::size_t size_field(const json& body, const char* key, std::size_t fallback) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  require(it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0),
          std::string("field '") + key + "' must be a non-negative integer");
  return it->get<std::size_t>();
}

std::vector<std::uint8_t> base64_field(const json& body, const char* key) {
  auto bytes = base64_decode(string_field(body, key));
  require(!bytes.empty(), std::string("field '") + key + "' holds no data");
  return bytes;
}

/// A context image given either as a corpus id or inline base64 bytes.
explore::ImageRef image_ref(const json& body, const std::string& key) {
  if (auto id = optional_string(body, key.c_str())) return *id;
  const std::string inline_key = key + "_base64";
  require(body.contains(inline_key), "missing field '" + key + "' (or '" + inline_key + "')");
  return base64_field(body, inline_key.c_str());
}

json keywords_json(const explore::ExtractedKeywords& k) {
  const auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); };
  return {{"semantic", opt(k.semantic)},
          {"color", opt(k.color)},
          {"object", opt(k.object)},
          {"seed_semantic", opt(k.seed_semantic)},
          {"description", k.description},
          {"contextual_prompt", opt(k.contextual_prompt)}};
}

json outcome_json(const canvas::Canvas& c, const studio::Outcome& outcome) {
  const auto& b = c.block(outcome.block);
  json block{{"id", b.id},
             {"kind", canvas::to_string(b.kind)},
             {"payload", canvas::payload_to_json(b.payload)},
             {"position", {{"x", b.position.x}, {"y", b.position.y}}},
             {"created_at", b.created_at}};
  json edges = json::array();
  for (const auto& id : outcome.edges) {
    for (const auto& e : c.edges()) {
      if (e.id == id) edges.push_back({{"id", e.id}, {"from", e.from}, {"to", e.to}, {"kind", canvas::to_string(e.kind)}});
    }
  }
  return {{"block", std::move(block)}, {"edges", std::move(edges)}, {"revision", c.revision()}};
}

std::string png_or_octet(std::span<const std::uint8_t> bytes) {
  if (image::looks_like_png(bytes)) return "image/png";
  if (bytes.size() > 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) return "image/jpeg";
  return "application/octet-stream";
}

}  // namespace

Api::Api(Services services, ApiOptions options) : studio_(services, options.studio), options_(std::move(options)) {
  if (!options_.canvas_dir) return;
  std::filesystem::create_directories(*options_.canvas_dir);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*options_.canvas_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    auto loaded = canvas::load(to_string(read_file(path.string())));
    auto s = std::make_shared<Slot>();
    s->canvas = std::move(loaded.canvas);
    s->extra = std::move(loaded.extra);
    canvases_[s->canvas.id()] = s;
  }
  canvas_counter_ = canvases_.size();
}

std::shared_ptr<Api::Slot> Api::slot(const std::string& id) {
  std::lock_guard lock(canvases_mutex_);
  const auto it = canvases_.find(id);
  if (it == canvases_.end()) fail(ErrorCode::not_found, "unknown canvas '" + id + "'");
  return it->second;
}

std::string Api::create_canvas(std::optional<std::string> id) {
  std::lock_guard lock(canvases_mutex_);
  if (id) {
    require(std::regex_match(*id, kCanvasIdPattern), "canvas id must match [A-Za-z0-9_-]{1,64}");
    if (canvases_.count(*id)) fail(ErrorCode::conflict, "canvas '" + *id + "' already exists");
  } else {
    do {
      id = "canvas-" + std::to_string(++canvas_counter_);
    } while (canvases_.count(*id));
  }
  auto s = std::make_shared<Slot>();
  s->canvas = canvas::Canvas(*id);
  canvases_[*id] = s;
  persist(*s);
  return *id;
}

void Api::persist(const Slot& s) {
  if (!options_.canvas_dir) return;
  const auto path = *options_.canvas_dir / (s.canvas.id() + ".json");
  const auto tmp = path.string() + ".tmp";
  write_file(tmp, canvas::save(s.canvas, s.extra));
  std::filesystem::rename(tmp, path);
}

std::string Api::canvas_document(const std::string& id) {
  auto s = slot(id);
  std::lock_guard lock(s->mutex);
  return canvas::save(s->canvas, s->extra);
}

void Api::install(httplib::Server& http) {
  Services& svc = studio_.services();

  // Runs `f(canvas)` under the canvas lock and persists afterwards. The
  // canvas is mutated on a copy so a failing action leaves it unchanged.
  auto mutate = [this](const std::string& id, const std::function<json(canvas::Canvas&)>& f) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    canvas::Canvas draft = s->canvas;
    json out = f(draft);
    s->canvas = std::move(draft);
    persist(*s);
    return out;
  };

  // --- canvases ----------------------------------------------------------

  http.Post("/canvas", guarded([this](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const auto id = create_canvas(optional_string(body, "id"));
              res.status = 201;
              res.set_content(canvas_document(id), "application/json");
            }));

  http.Get(R"(/canvas/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
             res.set_content(canvas_document(req.matches[1]), "application/json");
           }));

  http.Put(R"(/canvas/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             auto loaded = canvas::load(req.body);
             if (loaded.canvas.id() != id) {
               fail(ErrorCode::bad_request, "document canvas id '" + loaded.canvas.id() + "' does not match '" + id + "'");
             }
             auto s = slot(id);
             std::lock_guard lock(s->mutex);
             const auto current = s->canvas.revision();
             if (loaded.canvas.revision() != current) {
               fail(ErrorCode::conflict, "stale revision " + std::to_string(loaded.canvas.revision()) +
                                             " (current is " + std::to_string(current) + ")");
             }
             json doc = canvas::to_json_value(loaded.canvas);
             doc["revision"] = current + 1;
             s->canvas = canvas::canvas_from_json_value(doc);
             s->extra = std::move(loaded.extra);
             persist(*s);
             res.set_content(canvas::save(s->canvas, s->extra), "application/json");
           }));

  http.Post(R"(/canvas/([^/]+)/blocks)",
            guarded([this, mutate](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const json out = mutate(req.matches[1], [&](canvas::Canvas& c) {
                if (auto from = optional_string(body, "from")) {
                  studio::PickSpec spec;
                  spec.image_id = optional_string(body, "image_id");
                  if (auto d = optional_string(body, "dimension")) {
                    for (auto dim : captions::kDimensions) {
                      if (captions::to_string(dim) == *d) spec.dimension = dim;
                    }
                    require(spec.dimension.has_value(), "unknown caption dimension '" + *d + "'");
                  }
                  spec.index = size_field(body, "index", 0);
                  return outcome_json(c, studio_.pick(c, *from, spec));
                }
                const std::string kind_name = string_field(body, "kind");
                const auto kind = canvas::block_kind_from_string(kind_name);
                require(kind.has_value(), "unknown block kind '" + kind_name + "'");
                require(body.contains("payload"), "missing field 'payload'");
                auto payload = canvas::payload_from_json(*kind, body["payload"]);
                const auto id = studio_.create_block(c, std::move(payload), optional_string(body, "near"));
                return outcome_json(c, {id, {}});
              });
              send_json(res, out, 201);
            }));

  http.Post(R"(/canvas/([^/]+)/blocks/([^/]+)/move)",
            guarded([mutate](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string block = req.matches[2];
              send_json(res, mutate(req.matches[1], [&](canvas::Canvas& c) {
                          c.move_block(block, {body.at("x").get<double>(), body.at("y").get<double>()});
                          return outcome_json(c, {block, {}});
                        }));
            }));

  http.Delete(R"(/canvas/([^/]+)/blocks/([^/]+))",
              guarded([mutate](const httplib::Request& req, httplib::Response& res) {
                const std::string block = req.matches[2];
                send_json(res, mutate(req.matches[1], [&](canvas::Canvas& c) {
                            c.remove_block(block);
                            return json{{"revision", c.revision()}};
                          }));
              }));

  http.Delete(R"(/canvas/([^/]+)/edges/([^/]+))",
              guarded([mutate](const httplib::Request& req, httplib::Response& res) {
                const std::string edge = req.matches[2];
                send_json(res, mutate(req.matches[1], [&](canvas::Canvas& c) {
                            c.remove_edge(edge);
                            return json{{"revision", c.revision()}};
                          }));
              }));

  http.Post(R"(/canvas/([^/]+)/layout)", guarded([this, mutate](const httplib::Request& req, httplib::Response& res) {
              mutate(req.matches[1], [](canvas::Canvas& c) {
                c.auto_layout();
                return json();
              });
              res.set_content(canvas_document(req.matches[1]), "application/json");
            }));

  http.Post(R"(/canvas/([^/]+)/link)", guarded([this, mutate](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              send_json(res, mutate(req.matches[1], [&](canvas::Canvas& c) {
                          return outcome_json(c, studio_.link(c, string_field(body, "from"), string_field(body, "to"),
                                                              optional_string(body, "action")));
                        }));
            }));

  http.Post(R"(/canvas/([^/]+)/generate)",
            guarded([this, mutate](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string what_name = string_field(body, "what");
              const auto what = studio::generate_what_from_string(what_name);
              require(what.has_value(), "'what' must be images, captions or post");
              studio::GenerateOptions opts;
              opts.keyword = optional_string(body, "keyword");
              opts.offset = size_field(body, "offset", 0);
              opts.partner = optional_string(body, "partner");
              send_json(res,
                        mutate(req.matches[1],
                               [&](canvas::Canvas& c) {
                                 return outcome_json(c, studio_.generate_from(c, string_field(body, "source"), *what, opts));
                               }),
                        201);
            }));

  // --- recommendation ----------------------------------------------------

  http.Post("/search/images", guarded([&svc, this](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string topic = string_field(body, "topic");
              require(!trim(topic).empty(), "topic must be non-empty");
              const auto n = size_field(body, "n", studio_.options().search_results);
              const auto offset = size_field(body, "offset", 0);
              const auto result = svc.corpus.read([&](const corpus::CorpusIndex& index) {
                return recommend::search_images(index, svc.graph, *svc.providers.classify, topic, n, offset);
              });
              json out{{"ids", result.ids}, {"out_of_vocabulary", result.out_of_vocabulary}};
              out["classified_as"] = result.classified_as ? json(*result.classified_as) : json(nullptr);
              send_json(res, out);
            }));

  http.Post("/recommend/keywords", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string seed = string_field(body, "seed");
              const auto k = size_field(body, "k", 8);
              const auto panel = svc.corpus.read([&](const corpus::CorpusIndex& index) {
                return recommend::related_keyword_panel(index, svc.graph, seed, k, svc.thresholds);
              });
              json words = json::array();
              for (const auto& w : panel) words.push_back({{"word", w.word}, {"strength", w.strength}});
              send_json(res, {{"seed", seed}, {"keywords", std::move(words)}});
            }));

  http.Post("/recommend/images", guarded([&svc, this](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string seed = string_field(body, "seed");
              const auto keyword = optional_string(body, "keyword");
              const auto rng_seed = body.value("rng_seed", studio_.options().rng_seed);
              const auto offset = size_field(body, "offset", 0);
              const auto rec = svc.corpus.read([&](const corpus::CorpusIndex& index) {
                return recommend::recommend_images(index, svc.graph, seed, keyword, rng_seed, svc.thresholds, offset);
              });
              send_json(res, recommend::to_json(rec));
            }));

  http.Post("/recommend/captions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string topic = string_field(body, "topic");
              require(!trim(topic).empty(), "topic must be non-empty");
              send_json(res, captions::to_json(recommend::recommend_captions(*svc.providers.chat, topic)));
            }));

  // --- context exploration -----------------------------------------------

  http.Post("/explore/text-image", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const auto out =
                  explore::explore_images_with_text(svc, string_field(body, "seed_image"), string_field(body, "text_context"));
              send_json(res, {{"recommendation", recommend::to_json(out.recommendation)}, {"keywords", keywords_json(out.keywords)}});
            }));

  http.Post("/explore/text-caption", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              send_json(res, captions::to_json(explore::explore_captions_with_text(svc, string_field(body, "seed_text"),
                                                                                   string_field(body, "text_context"))));
            }));

  http.Post("/explore/image-image", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const auto out =
                  explore::explore_images_with_image(svc, string_field(body, "seed_image"), image_ref(body, "context_image"));
              send_json(res, {{"recommendation", recommend::to_json(out.recommendation)}, {"keywords", keywords_json(out.keywords)}});
            }));

  http.Post("/explore/image-caption", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              send_json(res, captions::to_json(explore::explore_captions_with_image(svc, string_field(body, "seed_text"),
                                                                                    image_ref(body, "context_image"))));
            }));

  // --- fusion ------------------------------------------------------------

  const auto fusion_route = [&svc](fusion::FusionKind kind) {
    return guarded([&svc, kind](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (kind == fusion::FusionKind::image_caption && body.contains("interest_image_base64")) {
        require(!body.contains("interest_image"), "give either 'interest_image' or 'interest_image_base64'");
        send_json(res, {{"caption", fusion::fuse_image_caption(svc, string_field(body, "target_caption"),
                                                               base64_field(body, "interest_image_base64"))}});
        return;
      }
      fusion::FusionRequest request;
      request.kind = kind;
      request.target_image = optional_string(body, "target_image");
      request.target_caption = optional_string(body, "target_caption");
      request.prompt = optional_string(body, "prompt");
      request.interest_image = optional_string(body, "interest_image");
      const auto out = fusion::fuse(svc, request);
      if (const auto* record = std::get_if<corpus::ImageRecord>(&out)) {
        send_json(res, {{"image", corpus::record_to_json(*record)}}, 201);
      } else {
        send_json(res, {{"caption", std::get<std::string>(out)}});
      }
    });
  };
  http.Post("/fuse/text-image", fusion_route(fusion::FusionKind::text_image));
  http.Post("/fuse/text-caption", fusion_route(fusion::FusionKind::text_caption));
  http.Post("/fuse/image-image", fusion_route(fusion::FusionKind::image_image));
  http.Post("/fuse/image-caption", fusion_route(fusion::FusionKind::image_caption));

  // --- images ------------------------------------------------------------

  http.Post("/images/upload", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const auto bytes = base64_field(body, "data");
              const auto record = corpus::annotate_uploaded_image(svc.corpus, svc.graph, svc.providers, bytes, svc.annotation);
              send_json(res, {{"image", corpus::record_to_json(record)}}, 201);
            }));

  // Image actions optionally land on a canvas as a new block joined to the
  // source block by an exploration edge.
  const auto image_action = [this, mutate, &svc](const std::function<studio::Outcome(canvas::Canvas&, const std::string&)>& on_canvas,
                                                 const std::function<corpus::ImageRecord()>& standalone) {
    return [=, &svc](const json& body, httplib::Response& res) {
      const auto canvas_id = optional_string(body, "canvas");
      const auto block = optional_string(body, "block");
      require(canvas_id.has_value() == block.has_value(), "'canvas' and 'block' go together");
      if (!canvas_id) {
        send_json(res, {{"image", corpus::record_to_json(standalone())}}, 201);
        return;
      }
      json out = mutate(*canvas_id, [&](canvas::Canvas& c) { return outcome_json(c, on_canvas(c, *block)); });
      const auto image_id = out["block"]["payload"]["image_id"].get<std::string>();
      out["image"] = corpus::record_to_json(svc.corpus.record(image_id));
      send_json(res, out, 201);
    };
  };

  http.Post(R"(/images/([^/]+)/regenerate)",
            guarded([this, image_action, &svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string id = req.matches[1];
              image_action(
                  [&](canvas::Canvas& c, const std::string& block) {
                    require(std::get<canvas::ImagePayload>(c.block(block).payload).image_id == id,
                            "block '" + block + "' does not show image '" + id + "'");
                    return studio_.regenerate(c, block);
                  },
                  [&] { return fusion::regenerate_image(svc, id); })(body, res);
            }));

  http.Post(R"(/images/([^/]+)/mask-edit)",
            guarded([this, image_action, &svc](const httplib::Request& req, httplib::Response& res) {
              const json body = parse_body(req);
              const std::string id = req.matches[1];
              const std::string prompt = string_field(body, "prompt");
              require(!trim(prompt).empty(), "mask edit needs a prompt");
              const auto spec = fusion::mask_spec_from_png(base64_field(body, "mask"), prompt);
              image_action(
                  [&](canvas::Canvas& c, const std::string& block) {
                    const auto& b = c.block(block);
                    require(b.kind == canvas::BlockKind::image &&
                                std::get<canvas::ImagePayload>(b.payload).image_id == id,
                            "block '" + block + "' does not show image '" + id + "'");
                    return studio_.mask_edit(c, block, spec);
                  },
                  [&] { return fusion::mask_edit(svc, id, spec); })(body, res);
            }));

  http.Get(R"(/images/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto record = svc.corpus.record(req.matches[1].str());
             if (req.get_header_value("Accept").find("application/json") != std::string::npos) {
               send_json(res, corpus::record_to_json(record));
               return;
             }
             const auto bytes = svc.corpus.image_bytes(record);
             res.set_content(std::string(bytes.begin(), bytes.end()), png_or_octet(bytes));
           }));

  http.Get(R"(/post/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
             require(req.has_param("canvas"), "missing query parameter 'canvas'");
             auto s = slot(req.get_param_value("canvas"));
             canvas::Canvas snapshot;
             {
               std::lock_guard lock(s->mutex);
               snapshot = s->canvas;
             }
             const auto png = studio_.export_post(snapshot, req.matches[1]);
             res.set_content(std::string(png.begin(), png.end()), "image/png");
           }));

  // Unmatched routes still answer with an envelope.
  http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_json(res, error_envelope(Error(ErrorCode::not_found, "no route for " + req.method + " " + req.path)), 404);
    }
  });
}

}  // namespace promoboard::server
