#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "promoboard/color.hpp"
#include "promoboard/error.hpp"
#include "support.hpp"

using namespace promoboard;
using namespace promoboard::color;

TEST_SUITE("color") {
  TEST_CASE("delta E agrees with the textbook formula") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
      const image::Rgb a{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
      const image::Rgb b{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
      CHECK(delta_e(a, b) == doctest::Approx(oracle::delta_e(a, b)).epsilon(1e-9));
      CHECK(delta_e(a, b) == delta_e(b, a));
    }
    CHECK(delta_e({12, 34, 56}, {12, 34, 56}) == 0.0);
  }

  TEST_CASE("known Lab values") {
    const auto white = to_lab({255, 255, 255});
    CHECK(white.l == doctest::Approx(100.0).epsilon(1e-4));
    CHECK(white.a == doctest::Approx(0.0).epsilon(1e-3));
    const auto red = to_lab({255, 0, 0});
    CHECK(red.l == doctest::Approx(53.24).epsilon(1e-3));
    CHECK(red.a == doctest::Approx(80.09).epsilon(1e-3));
    CHECK(red.b == doctest::Approx(67.20).epsilon(1e-3));
  }

  TEST_CASE("basic colour names") {
    CHECK(basic_color_names().size() == 16);
    CHECK(find_color_name("teal")->rgb == image::Rgb{0, 128, 128});
    CHECK(find_color_name("orange") == nullptr);
    for (const auto& named : basic_color_names()) CHECK(nearest_color_name(named.rgb) == named.name);
    CHECK(nearest_color_name({250, 10, 10}) == "red");
  }

  TEST_CASE("solid images reproduce their colour") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
      const image::Rgb c{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
      const auto d = dominant_color(image::Raster(20, 20, c));
      CHECK(std::abs(int(d.r) - int(c.r)) <= 8);
      CHECK(std::abs(int(d.g) - int(c.g)) <= 8);
      CHECK(std::abs(int(d.b) - int(c.b)) <= 8);
    }
    CHECK(dominant_color(image::Raster(4, 4, {200, 30, 30})) == image::Rgb{204, 28, 28});
  }

  TEST_CASE("palette matches the median cut oracle") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto raster = pbtest::noise_raster(seed, 24, 24);
      for (int size : {2, 5, 10}) CHECK(quantize_palette(raster, size) == oracle::median_cut(raster, size));
    }
  }

  TEST_CASE("palette of a few flat regions") {
    image::Raster r(10, 10, {255, 255, 255});
    for (std::uint32_t y = 0; y < 10; ++y) {
      for (std::uint32_t x = 0; x < 6; ++x) r.set(x, y, {0, 0, 200});
    }
    const auto palette = quantize_palette(r, 10);
    CHECK(palette == oracle::median_cut(r, 10));
    REQUIRE(palette.size() == 2);
    CHECK(palette[0].population == 60);
    CHECK(palette[1].population == 40);
  }

  TEST_CASE("bad inputs") {
    CHECK_THROWS_AS(quantize_palette(image::Raster{}, 10), Error);
    CHECK_THROWS_AS(quantize_palette(image::Raster(2, 2), 0), Error);
    CHECK_THROWS_AS(quantize_palette(image::Raster(2, 2), 17), Error);
  }
}
