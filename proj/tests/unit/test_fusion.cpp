#include <doctest.h>

#include "promoboard/error.hpp"
#include "promoboard/fusion.hpp"
#include "support.hpp"

using namespace promoboard;
using namespace promoboard::fusion;

namespace {

std::vector<std::uint8_t> mask_png(std::uint32_t w, std::uint32_t h, std::uint32_t covered_rows) {
  image::Mask m{w, h, std::vector<std::uint8_t>(std::size_t{w} * h, 0)};
  for (std::uint32_t y = 0; y < covered_rows && y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) m.coverage[std::size_t{y} * w + x] = 1;
  }
  return image::encode_alpha_mask(m);
}

}  // namespace

TEST_SUITE("fusion") {
  TEST_CASE("text-image fusion adds an annotated record and keeps the target") {
    auto f = pbtest::toy_fixture();
    const auto before = f->record("juice1");
    const auto out = fuse_text_image(f->svc(), "juice1", "add a straw");
    CHECK(f->record("juice1") == before);
    CHECK(out.source == corpus::RecordSource::generated);
    CHECK(out.caption == "image of juice based on the requirement: add a straw");
    CHECK(out.has_keyword("juice"));
    CHECK(out.has_keyword("orange"));
    CHECK(f->corpus->contains(out.id));
    CHECK(image::decode(f->corpus->image_bytes(out.id)).width == 32);
  }

  TEST_CASE("image-image fusion prompt names target then interest") {
    auto f = pbtest::toy_fixture();
    const auto out = fuse_image_image(f->svc(), "coffee1", "sea1");
    CHECK(out.caption == "image of coffee under the context of: image of sea");
  }

  TEST_CASE("caption fusions return text") {
    auto f = pbtest::toy_fixture();
    CHECK(fuse_text_caption(f->svc(), "Fresh *juice*", "make it summery") ==
          "\xE2\x9C\xA8 Fresh *juice* *summery* \xE2\x9C\xA8");
    const auto upload = pbtest::solid_png({1, 2, 3}, 4, 4, {{"Description", "a brand logo"}});
    CHECK(fuse_image_caption(f->svc(), "Fresh juice", upload).find("*logo*") != std::string::npos);
    CHECK_THROWS_AS(fuse_image_caption(f->svc(), "Fresh juice", std::vector<std::uint8_t>{0}), Error);
  }

  TEST_CASE("regenerate uses the description alone") {
    auto f = pbtest::toy_fixture();
    const auto out = regenerate_image(f->svc(), "sea1");
    CHECK(f->image_gen->prompts().back() == "image of sea");
    CHECK(out.id != "sea1");
  }

  TEST_CASE("mask edit keeps unmasked pixels") {
    auto f = pbtest::toy_fixture();
    const auto spec = mask_spec_from_png(mask_png(16, 16, 5), "a golden sun");
    const auto out = mask_edit(f->svc(), "sea1", spec);
    const auto before = image::decode(f->corpus->image_bytes("sea1"));
    const auto after = image::decode(f->corpus->image_bytes(out.id));
    for (std::uint32_t y = 5; y < 16; ++y) {
      for (std::uint32_t x = 0; x < 16; ++x) CHECK(after.at(x, y) == before.at(x, y));
    }
    CHECK(after.at(0, 0) != before.at(0, 0));
    CHECK(out.caption == "image of sea with a golden sun");
    CHECK(out.has_keyword("sea"));
  }

  TEST_CASE("mask edit rejects empty and mismatched masks") {
    auto f = pbtest::toy_fixture();
    const auto before = f->corpus->size();
    CHECK_THROWS_AS(mask_edit(f->svc(), "sea1", mask_spec_from_png(mask_png(16, 16, 0), "x")), Error);
    CHECK_THROWS_AS(mask_edit(f->svc(), "sea1", mask_spec_from_png(mask_png(8, 8, 2), "x")), Error);
    CHECK_THROWS_AS(mask_edit(f->svc(), "sea1", mask_spec_from_png(mask_png(16, 16, 2), " ")), Error);
    CHECK(f->corpus->size() == before);
  }

  TEST_CASE("provider failures add nothing") {
    auto f = pbtest::toy_fixture();
    f->suite.image_gen = std::make_shared<pbtest::FailingImageGen>();
    const auto before = f->corpus->size();
    try {
      fuse_text_image(f->svc(), "juice1", "x");
      FAIL("expected provider failure");
    } catch (const providers::ProviderError& e) {
      CHECK(e.code() == ErrorCode::provider_failure);
      CHECK(e.kind() == providers::FailureKind::timeout);
    }
    CHECK(f->corpus->size() == before);
  }

  TEST_CASE("fuse dispatch checks required fields") {
    auto f = pbtest::toy_fixture();
    FusionRequest ok{FusionKind::text_caption, std::nullopt, "Fresh juice", "summer", std::nullopt};
    CHECK(std::holds_alternative<std::string>(fuse(f->svc(), ok)));
    FusionRequest img{FusionKind::image_image, "juice1", std::nullopt, std::nullopt, "sea1"};
    CHECK(std::holds_alternative<corpus::ImageRecord>(fuse(f->svc(), img)));
    FusionRequest extra{FusionKind::text_image, "juice1", "caption", "p", std::nullopt};
    CHECK_THROWS_AS(fuse(f->svc(), extra), Error);
    FusionRequest missing{FusionKind::image_caption, std::nullopt, "c", std::nullopt, std::nullopt};
    CHECK_THROWS_AS(fuse(f->svc(), missing), Error);
  }
}
