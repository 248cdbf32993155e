#include "promoboard/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "promoboard/error.hpp"

namespace promoboard::image {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  append_be32(out, static_cast<std::uint32_t>(data.size()));
  const auto type_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + type_start, static_cast<uInt>(4 + data.size()));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

cv::Mat to_mat(const Raster& raster) {
  cv::Mat rgb(static_cast<int>(raster.height), static_cast<int>(raster.width), CV_8UC3,
              const_cast<std::uint8_t*>(raster.rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

Raster from_bgr(const cv::Mat& bgr) {
  Raster out;
  out.width = static_cast<std::uint32_t>(bgr.cols);
  out.height = static_cast<std::uint32_t>(bgr.rows);
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  if (!rgb.isContinuous()) rgb = rgb.clone();
  out.rgb.assign(rgb.data, rgb.data + rgb.total() * 3);
  return out;
}

}  // namespace

Raster::Raster(std::uint32_t w, std::uint32_t h, Rgb fill) : width(w), height(h), rgb(std::size_t{w} * h * 3) {
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = fill.r;
    rgb[i + 1] = fill.g;
    rgb[i + 2] = fill.b;
  }
}

Rgb Raster::at(std::uint32_t x, std::uint32_t y) const {
  const std::size_t i = (std::size_t{y} * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Raster::set(std::uint32_t x, std::uint32_t y, Rgb c) {
  const std::size_t i = (std::size_t{y} * width + x) * 3;
  rgb[i] = c.r;
  rgb[i + 1] = c.g;
  rgb[i + 2] = c.b;
}

std::size_t Mask::covered() const {
  return static_cast<std::size_t>(std::count_if(coverage.begin(), coverage.end(), [](auto v) { return v != 0; }));
}

bool looks_like_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0;
}

Raster decode(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorCode::decode, "decode error: empty image data");
  cv::Mat bgr;
  try {
    const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    bgr = cv::imdecode(buffer, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    bgr.release();
  }
  if (bgr.empty()) fail(ErrorCode::decode, "decode error: unsupported or corrupt image");
  return from_bgr(bgr);
}

std::vector<std::uint8_t> encode_png(const Raster& raster, const Metadata& metadata) {
  if (raster.empty()) fail(ErrorCode::bad_request, "cannot encode an empty raster");
  std::vector<std::uint8_t> encoded;
  cv::imencode(".png", to_mat(raster), encoded, {cv::IMWRITE_PNG_COMPRESSION, 6});
  if (metadata.empty()) return encoded;

  // Splice tEXt chunks right after IHDR (signature + 25-byte IHDR chunk).
  constexpr std::size_t kAfterIhdr = 8 + 25;
  std::vector<std::uint8_t> out(encoded.begin(), encoded.begin() + kAfterIhdr);
  for (const auto& [key, value] : metadata) {
    std::vector<std::uint8_t> data(key.begin(), key.end());
    data.push_back(0);
    data.insert(data.end(), value.begin(), value.end());
    append_chunk(out, "tEXt", data);
  }
  out.insert(out.end(), encoded.begin() + kAfterIhdr, encoded.end());
  return out;
}

Metadata read_png_text(std::span<const std::uint8_t> bytes) {
  Metadata text;
  if (!looks_like_png(bytes)) return text;
  std::size_t pos = 8;
  while (pos + 12 <= bytes.size()) {
    const std::uint32_t length = read_be32(bytes.data() + pos);
    if (pos + 12 + length > bytes.size()) break;
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    if (std::memcmp(type, "tEXt", 4) == 0) {
      const auto* data = reinterpret_cast<const char*>(bytes.data() + pos + 8);
      const std::string chunk(data, length);
      if (const auto nul = chunk.find('\0'); nul != std::string::npos) {
        text[chunk.substr(0, nul)] = chunk.substr(nul + 1);
      }
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + length;
  }
  return text;
}

Mask decode_alpha_mask(std::span<const std::uint8_t> png) {
  if (png.empty()) fail(ErrorCode::decode, "decode error: empty mask data");
  cv::Mat mat;
  try {
    const cv::Mat buffer(1, static_cast<int>(png.size()), CV_8UC1, const_cast<std::uint8_t*>(png.data()));
    mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception&) {
    mat.release();
  }
  if (mat.empty()) fail(ErrorCode::decode, "decode error: mask is not a readable image");
  if (mat.depth() != CV_8U) mat.convertTo(mat, CV_8U, 1.0 / 257.0);
  Mask mask;
  mask.width = static_cast<std::uint32_t>(mat.cols);
  mask.height = static_cast<std::uint32_t>(mat.rows);
  mask.coverage.assign(std::size_t{mask.width} * mask.height, 1);
  if (mat.channels() == 4 || mat.channels() == 2) {
    const int alpha = mat.channels() - 1;
    for (int y = 0; y < mat.rows; ++y) {
      const auto* row = mat.ptr<std::uint8_t>(y);
      for (int x = 0; x < mat.cols; ++x) {
        mask.coverage[std::size_t(y) * mask.width + x] = row[x * mat.channels() + alpha] > 127 ? 1 : 0;
      }
    }
  }
  return mask;
}

std::vector<std::uint8_t> encode_alpha_mask(const Mask& mask) {
  cv::Mat bgra(static_cast<int>(mask.height), static_cast<int>(mask.width), CV_8UC4, cv::Scalar(0, 0, 0, 0));
  for (std::uint32_t y = 0; y < mask.height; ++y) {
    auto* row = bgra.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::uint32_t x = 0; x < mask.width; ++x) {
      row[x * 4 + 3] = mask.at(x, y) ? 255 : 0;
    }
  }
  std::vector<std::uint8_t> out;
  cv::imencode(".png", bgra, out, {cv::IMWRITE_PNG_COMPRESSION, 6});
  return out;
}

Raster resize(const Raster& raster, std::uint32_t width, std::uint32_t height) {
  if (raster.width == width && raster.height == height) return raster;
  const bool shrinking = width <= raster.width && height <= raster.height;
  cv::Mat out;
  cv::resize(to_mat(raster), out, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0,
             shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  return from_bgr(out);
}

Raster downscale(const Raster& raster, std::uint32_t max_edge) {
  const auto long_edge = std::max(raster.width, raster.height);
  if (long_edge <= max_edge) return raster;
  const double factor = static_cast<double>(max_edge) / long_edge;
  const auto w = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(raster.width * factor + 0.5));
  const auto h = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(raster.height * factor + 0.5));
  return resize(raster, w, h);
}

int draw_text(Raster& canvas, const std::string& text, int x, int y, double scale, Rgb color) {
  cv::Mat rgb(static_cast<int>(canvas.height), static_cast<int>(canvas.width), CV_8UC3, canvas.rgb.data());
  int baseline = 0;
  const auto size = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, scale, 2, &baseline);
  cv::putText(rgb, text, cv::Point(x, y + size.height), cv::FONT_HERSHEY_SIMPLEX, scale,
              cv::Scalar(color.r, color.g, color.b), 2, cv::LINE_8);
  return size.height + baseline;
}

int text_width(const std::string& text, double scale) {
  int baseline = 0;
  return cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, scale, 2, &baseline).width;
}

}  // namespace promoboard::image
