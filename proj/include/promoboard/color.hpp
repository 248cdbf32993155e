#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "promoboard/image.hpp"

namespace promoboard::color {

using RgbColor = image::Rgb;

struct PaletteEntry {
  RgbColor color;
  std::uint32_t population = 0;

  bool operator==(const PaletteEntry&) const = default;
};

/// Ordered by population descending (ties by color), length <= palette_size.
using Palette = std::vector<PaletteEntry>;

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

inline constexpr int kSignificantBits = 5;
inline constexpr int kDefaultPaletteSize = 10;
inline constexpr std::uint32_t kMaxAnalysisEdge = 256;

/// Modified median cut quantization (the ColorThief/MMCQ scheme) over a
/// 5-bit-per-channel histogram. Every pixel is counted; no alpha or
/// near-white filtering. Throws Error(bad_request, "empty image") for an
/// empty raster and for palette_size outside [1, 16].
Palette quantize_palette(const image::Raster& pixels, int palette_size);

/// Highest-population entry of quantize_palette(pixels, 10).
RgbColor dominant_color(const image::Raster& pixels);

Lab to_lab(RgbColor c);

/// CIE76 colour difference in CIELAB (D65).
double delta_e(RgbColor a, RgbColor b);

struct NamedColor {
  std::string_view name;
  RgbColor rgb;
};

/// The 16 CSS basic colour keywords with their canonical sRGB values.
const std::array<NamedColor, 16>& basic_color_names();

/// Nearest basic colour name by delta_e (ties resolved by list order).
std::string_view nearest_color_name(RgbColor c);

/// Canonical value of a basic colour name, if it is one.
const NamedColor* find_color_name(std::string_view name);

}  // namespace promoboard::color
