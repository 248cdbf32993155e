#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace promoboard::image {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  auto operator<=>(const Rgb&) const = default;
};

/// Interleaved 8-bit RGB raster, row-major.
struct Raster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> rgb;

  Raster() = default;
  Raster(std::uint32_t w, std::uint32_t h, Rgb fill = {});

  bool empty() const { return width == 0 || height == 0; }
  std::size_t pixel_count() const { return std::size_t{width} * height; }
  Rgb at(std::uint32_t x, std::uint32_t y) const;
  void set(std::uint32_t x, std::uint32_t y, Rgb c);

  bool operator==(const Raster&) const = default;
};

/// Binary per-pixel coverage, row-major; 1 = masked.
struct Mask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> coverage;

  std::size_t covered() const;
  bool at(std::uint32_t x, std::uint32_t y) const { return coverage[std::size_t{y} * width + x] != 0; }
};

using Metadata = std::map<std::string, std::string>;

/// Decodes PNG or JPEG into RGB. Throws Error(decode) on failure.
Raster decode(std::span<const std::uint8_t> bytes);

/// Deterministic PNG encoding; `metadata` is written as tEXt chunks in key order.
std::vector<std::uint8_t> encode_png(const Raster& raster, const Metadata& metadata = {});

/// tEXt chunks of a PNG stream; empty for non-PNG input.
Metadata read_png_text(std::span<const std::uint8_t> bytes);

bool looks_like_png(std::span<const std::uint8_t> bytes);

/// Decodes a PNG mask whose alpha channel carries coverage (alpha > 127).
/// Images without alpha are treated as fully opaque.
Mask decode_alpha_mask(std::span<const std::uint8_t> png);
std::vector<std::uint8_t> encode_alpha_mask(const Mask& mask);

/// Area-averaged downscale so the long edge is at most `max_edge`; rasters
/// already small enough are returned unchanged.
Raster downscale(const Raster& raster, std::uint32_t max_edge);

/// Resizes to exactly (w, h) with area/linear interpolation.
Raster resize(const Raster& raster, std::uint32_t width, std::uint32_t height);

/// Renders ASCII text with a built-in stroke font. Returns the text height.
int draw_text(Raster& canvas, const std::string& text, int x, int y, double scale, Rgb color);

/// Width of `text` in pixels at `scale` for the stroke font.
int text_width(const std::string& text, double scale);

}  // namespace promoboard::image
