#include "promoboard/color.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "promoboard/error.hpp"

namespace promoboard::color {

namespace {

constexpr int kShift = 8 - kSignificantBits;
constexpr int kBins = 1 << kSignificantBits;
constexpr int kMaxIterations = 1000;
constexpr double kFractByPopulation = 0.75;

constexpr int color_index(int r, int g, int b) {
  return (r << (2 * kSignificantBits)) + (g << kSignificantBits) + b;
}

using Histogram = std::vector<std::uint32_t>;

// Inclusive box in 5-bit colour space. Bounds may cross (lo > hi) after a cut
// at the box edge; such boxes are empty.
struct VBox {
  std::array<int, 3> lo{};
  std::array<int, 3> hi{};

  std::int64_t volume() const {
    return std::int64_t{hi[0] - lo[0] + 1} * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1);
  }
};

std::uint32_t box_count(const Histogram& h, const VBox& v) {
  std::uint32_t n = 0;
  for (int r = v.lo[0]; r <= v.hi[0]; ++r)
    for (int g = v.lo[1]; g <= v.hi[1]; ++g)
      for (int b = v.lo[2]; b <= v.hi[2]; ++b) n += h[color_index(r, g, b)];
  return n;
}

RgbColor box_average(const Histogram& h, const VBox& v) {
  constexpr double mult = 1 << kShift;
  double total = 0, rs = 0, gs = 0, bs = 0;
  for (int r = v.lo[0]; r <= v.hi[0]; ++r)
    for (int g = v.lo[1]; g <= v.hi[1]; ++g)
      for (int b = v.lo[2]; b <= v.hi[2]; ++b) {
        const double n = h[color_index(r, g, b)];
        total += n;
        rs += n * (r + 0.5) * mult;
        gs += n * (g + 0.5) * mult;
        bs += n * (b + 0.5) * mult;
      }
  const auto channel = [](double v) { return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)); };
  if (total > 0) return {channel(rs / total), channel(gs / total), channel(bs / total)};
  return {channel(mult * (v.lo[0] + v.hi[0] + 1) / 2), channel(mult * (v.lo[1] + v.hi[1] + 1) / 2),
          channel(mult * (v.lo[2] + v.hi[2] + 1) / 2)};
}

struct CutResult {
  VBox first;
  std::optional<VBox> second;
};

// One median cut along the longest axis.
std::optional<CutResult> median_cut(const Histogram& h, const VBox& box) {
  const std::uint32_t count = box_count(h, box);
  if (count == 0) return std::nullopt;
  if (count == 1) return CutResult{box, std::nullopt};

  const std::array<int, 3> width{box.hi[0] - box.lo[0] + 1, box.hi[1] - box.lo[1] + 1,
                                 box.hi[2] - box.lo[2] + 1};
  const int max_w = std::max({width[0], width[1], width[2]});
  const int axis = max_w == width[0] ? 0 : (max_w == width[1] ? 1 : 2);

  // partial[i]: population in slices lo..i along the axis; 0 outside the box.
  std::array<std::int64_t, kBins + 1> partial{};
  std::int64_t total = 0;
  for (int i = box.lo[axis]; i <= box.hi[axis]; ++i) {
    VBox slice = box;
    slice.lo[axis] = slice.hi[axis] = i;
    total += box_count(h, slice);
    partial[i] = total;
  }
  const auto partial_at = [&](int i) -> std::int64_t {
    return (i < box.lo[axis] || i > box.hi[axis]) ? 0 : partial[i];
  };
  const auto lookahead_at = [&](int i) -> std::int64_t {
    return (i < box.lo[axis] || i > box.hi[axis]) ? 0 : total - partial[i];
  };

  for (int i = box.lo[axis]; i <= box.hi[axis]; ++i) {
    if (2 * partial[i] <= total) continue;
    const int left = i - box.lo[axis];
    const int right = box.hi[axis] - i;
    int cut = left <= right ? std::min(box.hi[axis] - 1, i + right / 2)
                            : std::max(box.lo[axis], static_cast<int>(std::trunc(i - 1 - left / 2.0)));
    while (partial_at(cut) == 0) ++cut;
    std::int64_t count2 = lookahead_at(cut);
    while (count2 == 0 && partial_at(cut - 1) != 0) count2 = lookahead_at(--cut);

    CutResult result{box, box};
    result.first.hi[axis] = cut;
    result.second->lo[axis] = cut + 1;
    return result;
  }
  return std::nullopt;
}

// Max-priority queue with the reference tie rule: among equal keys the most
// recently pushed box wins.
template <typename Key>
class BoxQueue {
 public:
  explicit BoxQueue(Key key) : key_(key) {}
  void push(const VBox& box) { boxes_.push_back(box); }
  std::size_t size() const { return boxes_.size(); }
  bool empty() const { return boxes_.empty(); }
  VBox pop() {
    std::stable_sort(boxes_.begin(), boxes_.end(),
                     [this](const VBox& a, const VBox& b) { return key_(a) < key_(b); });
    VBox top = boxes_.back();
    boxes_.pop_back();
    return top;
  }
  const std::vector<VBox>& boxes() const { return boxes_; }

 private:
  Key key_;
  std::vector<VBox> boxes_;
};

template <typename Queue>
void split_until(const Histogram& h, Queue& queue, double target) {
  auto colors = static_cast<double>(queue.size());
  int iterations = 0;
  while (iterations < kMaxIterations) {
    if (colors >= target) return;
    if (iterations++ > kMaxIterations) return;
    VBox box = queue.pop();
    if (box_count(h, box) == 0) {
      queue.push(box);
      ++iterations;
      continue;
    }
    const auto cut = median_cut(h, box);
    if (!cut) return;
    queue.push(cut->first);
    if (cut->second) {
      queue.push(*cut->second);
      colors += 1;
    }
  }
}

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double epsilon = 216.0 / 24389.0;
  constexpr double kappa = 24389.0 / 27.0;
  return t > epsilon ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

}  // namespace

Palette quantize_palette(const image::Raster& pixels, int palette_size) {
  if (pixels.empty()) fail(ErrorCode::bad_request, "empty image");
  require(palette_size >= 1 && palette_size <= 16, "palette_size must be in [1, 16]");

  Histogram histogram(std::size_t{1} << (3 * kSignificantBits), 0);
  VBox initial{{kBins, kBins, kBins}, {-1, -1, -1}};
  for (std::size_t i = 0; i < pixels.rgb.size(); i += 3) {
    const int rgb[3] = {pixels.rgb[i] >> kShift, pixels.rgb[i + 1] >> kShift, pixels.rgb[i + 2] >> kShift};
    ++histogram[color_index(rgb[0], rgb[1], rgb[2])];
    for (int c = 0; c < 3; ++c) {
      initial.lo[c] = std::min(initial.lo[c], rgb[c]);
      initial.hi[c] = std::max(initial.hi[c], rgb[c]);
    }
  }

  const auto by_count = [&histogram](const VBox& v) { return std::int64_t{box_count(histogram, v)}; };
  BoxQueue queue(by_count);
  queue.push(initial);
  split_until(histogram, queue, kFractByPopulation * palette_size);

  const auto by_count_volume = [&histogram](const VBox& v) {
    return std::int64_t{box_count(histogram, v)} * v.volume();
  };
  BoxQueue refined(by_count_volume);
  while (!queue.empty()) refined.push(queue.pop());
  // The second pass target mirrors the reference implementation.
  split_until(histogram, refined, static_cast<double>(palette_size) - static_cast<double>(refined.size()));

  Palette palette;
  for (const VBox& box : refined.boxes()) {
    const auto population = box_count(histogram, box);
    if (population > 0) palette.push_back({box_average(histogram, box), population});
  }
  std::sort(palette.begin(), palette.end(), [](const PaletteEntry& a, const PaletteEntry& b) {
    if (a.population != b.population) return a.population > b.population;
    return a.color < b.color;
  });
  if (palette.size() > static_cast<std::size_t>(palette_size)) palette.resize(palette_size);
  return palette;
}

RgbColor dominant_color(const image::Raster& pixels) {
  return quantize_palette(pixels, kDefaultPaletteSize).front().color;
}

Lab to_lab(RgbColor c) {
  const double r = srgb_to_linear(c.r / 255.0);
  const double g = srgb_to_linear(c.g / 255.0);
  const double b = srgb_to_linear(c.b / 255.0);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.00000);
  const double fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double delta_e(RgbColor a, RgbColor b) {
  if (a == b) return 0.0;
  const Lab la = to_lab(a);
  const Lab lb = to_lab(b);
  return std::sqrt((la.l - lb.l) * (la.l - lb.l) + (la.a - lb.a) * (la.a - lb.a) +
                   (la.b - lb.b) * (la.b - lb.b));
}

const std::array<NamedColor, 16>& basic_color_names() {
  static constexpr std::array<NamedColor, 16> kNames{{
      {"black", {0, 0, 0}},       {"silver", {192, 192, 192}}, {"gray", {128, 128, 128}},
      {"white", {255, 255, 255}}, {"maroon", {128, 0, 0}},     {"red", {255, 0, 0}},
      {"purple", {128, 0, 128}},  {"fuchsia", {255, 0, 255}},  {"green", {0, 128, 0}},
      {"lime", {0, 255, 0}},      {"olive", {128, 128, 0}},    {"yellow", {255, 255, 0}},
      {"navy", {0, 0, 128}},      {"blue", {0, 0, 255}},       {"teal", {0, 128, 128}},
      {"aqua", {0, 255, 255}},
  }};
  return kNames;
}

std::string_view nearest_color_name(RgbColor c) {
  std::string_view best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& named : basic_color_names()) {
    const double d = delta_e(c, named.rgb);
    if (d < best_distance) {
      best_distance = d;
      best = named.name;
    }
  }
  return best;
}

const NamedColor* find_color_name(std::string_view name) {
  for (const auto& named : basic_color_names()) {
    if (named.name == name) return &named;
  }
  return nullptr;
}

}  // namespace promoboard::color
