#include <doctest.h>

#include <thread>

#include "http_harness.hpp"
#include "promoboard/util.hpp"

using namespace promoboard;
using nlohmann::json;
using pbtest::ApiServer;

namespace {

std::string error_code(const ApiServer::Reply& r) { return r.json().at("error").at("code").get<std::string>(); }

std::string new_canvas(ApiServer& s) { return s.post("/canvas", json::object()).json().at("canvas").at("id"); }

std::string add_block(ApiServer& s, const std::string& canvas, const std::string& kind, const json& payload) {
  const auto r = s.post("/canvas/" + canvas + "/blocks", {{"kind", kind}, {"payload", payload}});
  REQUIRE(r.status == 201);
  return r.json().at("block").at("id");
}

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("status mapping and envelopes") {
    CHECK(server::status_for(ErrorCode::bad_request) == 400);
    CHECK(server::status_for(ErrorCode::decode) == 400);
    CHECK(server::status_for(ErrorCode::not_found) == 404);
    CHECK(server::status_for(ErrorCode::conflict) == 409);
    CHECK(server::status_for(ErrorCode::provider_failure) == 502);
    CHECK(server::status_for(ErrorCode::parse_failure) == 502);
    const auto env = server::error_envelope(Error(ErrorCode::decode, "bad png"));
    CHECK(env.at("error").at("code") == "bad_request");
    CHECK(env.at("error").at("message") == "bad png");
  }

  TEST_CASE("canvas lifecycle") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto created = s.post("/canvas", json::object());
    CHECK(created.status == 201);
    const auto doc = created.json();
    CHECK(doc.at("format_version") == 1);
    const std::string id = doc.at("canvas").at("id");

    const auto named = s.post("/canvas", {{"id", "my-board"}});
    CHECK(named.status == 201);
    CHECK(s.post("/canvas", {{"id", "my-board"}}).status == 409);
    CHECK(s.post("/canvas", {{"id", "no spaces"}}).status == 400);

    const auto t = add_block(s, id, "text", {{"text", "fresh juice"}});
    CHECK(t == "b1");
    const auto moved = s.post("/canvas/" + id + "/blocks/" + t + "/move", {{"x", 40}, {"y", 60}});
    CHECK(moved.status == 200);
    CHECK(moved.json().at("block").at("position").at("x") == 40);

    const auto got = s.get("/canvas/" + id).json();
    CHECK(got.at("canvas").at("revision") == 2);
    CHECK(s.get("/canvas/nope").status == 404);

    CHECK(s.del("/canvas/" + id + "/blocks/" + t).status == 200);
    CHECK(s.del("/canvas/" + id + "/blocks/" + t).status == 404);
    const auto after = s.get("/canvas/" + id).json();
    CHECK(after.at("canvas").at("tombstones").size() == 1);
  }

  TEST_CASE("generate, link and export") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto id = new_canvas(s);
    const auto t = add_block(s, id, "text", {{"text", "fresh juice"}});
    const auto img = add_block(s, id, "image", {{"image_id", "juice1"}});

    const auto caps = s.post("/canvas/" + id + "/generate", {{"source", t}, {"what", "captions"}});
    REQUIRE(caps.status == 201);
    CHECK(caps.json().at("block").at("kind") == "caption_rec");
    CHECK(caps.json().at("edges").at(0).at("kind") == "exploration");

    const auto rec = s.post("/canvas/" + id + "/generate", {{"source", img}, {"what", "images"}});
    REQUIRE(rec.status == 201);
    const std::string rec_id = rec.json().at("block").at("id");

    const auto linked = s.post("/canvas/" + id + "/link", {{"from", t}, {"to", rec_id}});
    REQUIRE(linked.status == 200);
    CHECK(linked.json().at("block").at("id") == rec_id);
    CHECK(linked.json().at("edges").at(0).at("kind") == "customization");

    const auto bad = s.post("/canvas/" + id + "/link", {{"from", rec_id}, {"to", t}});
    CHECK(bad.status == 400);
    CHECK(error_code(bad) == "bad_request");

    const auto post = s.post("/canvas/" + id + "/generate", {{"source", img}, {"what", "post"}, {"partner", t}});
    REQUIRE(post.status == 201);
    const std::string post_id = post.json().at("block").at("id");
    const auto png = s.get("/post/" + post_id + "/export?canvas=" + id);
    CHECK(png.status == 200);
    CHECK(png.content_type == "image/png");
    CHECK(image::decode(to_bytes(png.body)).height == 1350);
    CHECK(s.get("/post/" + post_id + "/export").status == 400);

    const auto picked = s.post("/canvas/" + id + "/blocks", {{"from", caps.json().at("block").at("id")},
                                                             {"dimension", "advertisement"}, {"index", 2}});
    CHECK(picked.status == 201);
    CHECK(picked.json().at("block").at("kind") == "text");

    const auto layout = s.post("/canvas/" + id + "/layout", json::object());
    CHECK(layout.status == 200);
    CHECK(layout.json().at("canvas").at("blocks").size() == 6);
  }

  TEST_CASE("stale revisions are refused") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto id = new_canvas(s);
    add_block(s, id, "text", {{"text", "hello"}});
    auto doc = s.get("/canvas/" + id).json();
    doc["canvas"]["blocks"][0]["payload"]["text"] = "edited offline";
    doc["canvas"]["ui"] = {{"zoom", 2}};
    const auto ok = s.put("/canvas/" + id, doc.dump());
    REQUIRE(ok.status == 200);
    CHECK(ok.json().at("canvas").at("revision") == 2);
    CHECK(ok.json().at("canvas").at("ui").at("zoom") == 2);
    CHECK(s.put("/canvas/" + id, doc.dump()).status == 409);

    auto other = ok.json();
    other["canvas"]["id"] = "elsewhere";
    CHECK(s.put("/canvas/" + id, other.dump()).status == 400);
    auto broken = ok.json();
    broken["canvas"]["blocks"][0].erase("kind");
    const auto r = s.put("/canvas/" + id, broken.dump());
    CHECK(r.status == 400);
    CHECK(r.json().at("error").at("message").get<std::string>().find("canvas.blocks[0].kind") != std::string::npos);
  }

  TEST_CASE("recommendation endpoints") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto search = s.post("/search/images", {{"topic", "juice"}, {"n", 2}});
    REQUIRE(search.status == 200);
    CHECK(search.json().at("ids").size() == 2);
    CHECK(search.json().at("out_of_vocabulary") == false);

    const auto panel = s.post("/recommend/keywords", {{"seed", "juice1"}, {"k", 3}});
    REQUIRE(panel.status == 200);
    CHECK(panel.json().at("keywords").size() == 3);
    CHECK(panel.json().at("keywords").at(0).at("word") == "juice");

    const auto rec = s.post("/recommend/images", {{"seed", "juice1"}, {"rng_seed", 4}});
    REQUIRE(rec.status == 200);
    CHECK(rec.json() == s.post("/recommend/images", {{"seed", "juice1"}, {"rng_seed", 4}}).json());
    CHECK(s.post("/recommend/images", {{"seed", "ghost"}}).status == 404);

    const auto caps = s.post("/recommend/captions", {{"topic", "juice"}});
    REQUIRE(caps.status == 200);
    CHECK(caps.json().at("product").size() == 3);

    const auto ti = s.post("/explore/text-image", {{"seed_image", "juice1"}, {"text_context", "red sunset"}});
    REQUIRE(ti.status == 200);
    CHECK(ti.json().at("keywords").at("color") == "red");
    const auto ii = s.post("/explore/image-image",
                           {{"seed_image", "juice1"},
                            {"context_image_base64",
                             base64_encode(pbtest::solid_png({0, 0, 250}, 4, 4, {{"Description", "image of sea"}}))}});
    REQUIRE(ii.status == 200);
    CHECK(ii.json().at("keywords").at("semantic") == "sea");
    CHECK(s.post("/explore/text-caption", {{"seed_text", "juice"}, {"text_context", "party"}}).status == 200);
    CHECK(s.post("/explore/image-caption", {{"seed_text", "juice"}, {"context_image", "sea1"}}).status == 200);
  }

  TEST_CASE("fusion and image endpoints") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto fused = s.post("/fuse/text-image", {{"target_image", "juice1"}, {"prompt", "add ice"}});
    REQUIRE(fused.status == 201);
    const std::string new_id = fused.json().at("image").at("id");
    CHECK(fused.json().at("image").at("source") == "generated");
    const auto bytes = s.get("/images/" + new_id);
    CHECK(bytes.content_type == "image/png");
    const auto record = s.get("/images/" + new_id, {{"Accept", "application/json"}});
    CHECK(record.json().at("id") == new_id);

    CHECK(s.post("/fuse/text-caption", {{"target_caption", "Fresh"}, {"prompt", "summer"}}).json().contains("caption"));
    CHECK(s.post("/fuse/image-image", {{"target_image", "juice1"}, {"interest_image", "sea1"}}).status == 201);
    const auto ic = s.post("/fuse/image-caption",
                           {{"target_caption", "Fresh"},
                            {"interest_image_base64", base64_encode(pbtest::solid_png({1, 1, 1}, 4, 4, {{"Description", "logo"}}))}});
    CHECK(ic.json().at("caption").get<std::string>().find("*logo*") != std::string::npos);
    CHECK(s.post("/fuse/text-image", {{"target_image", "juice1"}}).status == 400);

    const auto up = s.post("/images/upload", {{"data", base64_encode(pbtest::solid_png({5, 5, 5}))}});
    CHECK(up.status == 201);
    const auto junk = s.post("/images/upload", {{"data", base64_encode(to_bytes("junk"))}});
    CHECK(junk.status == 400);
    CHECK(error_code(junk) == "bad_request");

    const auto regen = s.post("/images/sea1/regenerate", json::object());
    CHECK(regen.status == 201);

    image::Mask m{16, 16, std::vector<std::uint8_t>(256, 1)};
    const auto edit = s.post("/images/sea1/mask-edit",
                             {{"mask", base64_encode(image::encode_alpha_mask(m))}, {"prompt", "a boat"}});
    REQUIRE(edit.status == 201);
    CHECK(edit.json().at("image").at("caption") == "image of sea with a boat");
    image::Mask small{4, 4, std::vector<std::uint8_t>(16, 1)};
    CHECK(s.post("/images/sea1/mask-edit", {{"mask", base64_encode(image::encode_alpha_mask(small))}, {"prompt", "x"}})
              .status == 400);
  }

  TEST_CASE("image actions on a canvas") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto id = new_canvas(s);
    const auto img = add_block(s, id, "image", {{"image_id", "sea1"}});
    const auto r = s.post("/images/sea1/regenerate", {{"canvas", id}, {"block", img}});
    REQUIRE(r.status == 201);
    CHECK(r.json().at("edges").at(0).at("kind") == "exploration");
    CHECK(r.json().at("image").at("id") == r.json().at("block").at("payload").at("image_id"));
    CHECK(s.post("/images/juice1/regenerate", {{"canvas", id}, {"block", img}}).status == 400);
    CHECK(s.post("/images/sea1/regenerate", {{"canvas", id}}).status == 400);
  }

  TEST_CASE("errors always come back as envelopes") {
    auto f = pbtest::toy_fixture();
    f->suite.image_gen = std::make_shared<pbtest::FailingImageGen>();
    ApiServer s(*f);
    const auto unknown = s.get("/nowhere");
    CHECK(unknown.status == 404);
    CHECK(error_code(unknown) == "not_found");
    const auto bad_json = s.post_raw("/search/images", "{oops");
    CHECK(bad_json.status == 400);
    CHECK(error_code(bad_json) == "bad_request");
    const auto wrong_type = s.post("/search/images", {{"topic", 5}});
    CHECK(wrong_type.status == 400);
    const auto provider = s.post("/fuse/text-image", {{"target_image", "juice1"}, {"prompt", "add ice"}});
    CHECK(provider.status == 502);
    CHECK(error_code(provider) == "provider_failure");
    CHECK(provider.json().at("error").at("provider") == "image_gen");
    CHECK(s.get("/images/ghost").status == 404);
  }

  TEST_CASE("failed canvas actions leave the stored document alone") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto id = new_canvas(s);
    const auto t = add_block(s, id, "text", {{"text", "add ice"}});
    const auto img = add_block(s, id, "image", {{"image_id", "juice1"}});
    const auto before = s.get("/canvas/" + id).body;
    f->suite.image_gen = std::make_shared<pbtest::FailingImageGen>();
    CHECK(s.post("/canvas/" + id + "/link", {{"from", t}, {"to", img}}).status == 502);
    CHECK(s.post("/canvas/" + id + "/generate", {{"source", t}, {"what", "everything"}}).status == 400);
    CHECK(s.get("/canvas/" + id).body == before);
  }

  TEST_CASE("canvases persist across restarts") {
    pbtest::TempDir dir;
    auto f = pbtest::toy_fixture();
    std::string id, doc;
    {
      ApiServer s(*f, {{}, dir.path});
      id = new_canvas(s);
      add_block(s, id, "text", {{"text", "persist me"}});
      doc = s.get("/canvas/" + id).body;
    }
    ApiServer again(*f, {{}, dir.path});
    CHECK(again.get("/canvas/" + id).body == doc);
    CHECK(new_canvas(again) != id);
  }

  TEST_CASE("concurrent mutations of one canvas are serialized") {
    auto f = pbtest::toy_fixture();
    ApiServer s(*f);
    const auto id = new_canvas(s);
    const auto port = s.port();
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) {
      threads.emplace_back([port, id, i] {
        httplib::Client c("127.0.0.1", port);
        for (int k = 0; k < 10; ++k) {
          json body{{"kind", "text"}, {"payload", {{"text", "t" + std::to_string(i * 10 + k)}}}};
          c.Post("/canvas/" + id + "/blocks", body.dump(), "application/json");
        }
      });
    }
    for (auto& t : threads) t.join();
    const auto doc = s.get("/canvas/" + id).json();
    CHECK(doc.at("canvas").at("blocks").size() == 40);
    CHECK(doc.at("canvas").at("revision") == 40);
  }
}
