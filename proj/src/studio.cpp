#include "promoboard/studio.hpp"

#include <algorithm>
#include <sstream>

#include "promoboard/context_explorer.hpp"
#include "promoboard/error.hpp"
#include "promoboard/image.hpp"
#include "promoboard/util.hpp"

namespace promoboard::studio {

using canvas::Block;
using canvas::BlockKind;
using canvas::Canvas;
using canvas::EdgeKind;

namespace {

std::string unsupported(const Block& from, const Block& to, std::string_view action) {
  std::string msg = "unsupported link " + std::string(to_string(from.kind)) + " -> " + std::string(to_string(to.kind));
  if (!action.empty()) msg += " with action '" + std::string(action) + "'";
  return msg;
}

std::string block_text(const Block& b) { return std::get<canvas::TextPayload>(b.payload).text; }
std::string block_image(const Block& b) { return std::get<canvas::ImagePayload>(b.payload).image_id; }

canvas::ImagePayload replaced_image(const Block& b, std::string id) {
  auto p = std::get<canvas::ImagePayload>(b.payload);
  p.history.push_back(std::move(p.image_id));
  p.image_id = std::move(id);
  return p;
}

canvas::TextPayload replaced_text(const Block& b, std::string text) {
  auto p = std::get<canvas::TextPayload>(b.payload);
  p.history.push_back(std::move(p.text));
  p.text = std::move(text);
  return p;
}

}  // namespace

std::optional<GenerateWhat> generate_what_from_string(std::string_view name) {
  if (name == "images") return GenerateWhat::images;
  if (name == "captions") return GenerateWhat::captions;
  if (name == "post") return GenerateWhat::post;
  return std::nullopt;
}

void Studio::check_images(const canvas::Payload& payload) const {
  std::vector<std::string> ids;
  if (const auto* p = std::get_if<canvas::ImagePayload>(&payload)) ids.push_back(p->image_id);
  if (const auto* p = std::get_if<canvas::PostComposition>(&payload); p && p->image) ids.push_back(*p->image);
  if (const auto* p = std::get_if<recommend::ImageRecommendation>(&payload)) {
    ids.push_back(p->seed);
    for (const auto* list : {&p->semantic, &p->color, &p->object}) ids.insert(ids.end(), list->begin(), list->end());
  }
  if (const auto* p = std::get_if<canvas::SearchResults>(&payload)) ids = p->ids;
  for (const auto& id : ids) {
    if (!services_.corpus.contains(id)) fail(ErrorCode::not_found, "unknown image '" + id + "'");
  }
}

std::string Studio::create_block(Canvas& canvas, canvas::Payload payload, const std::optional<std::string>& near) {
  canvas::validate_payload(payload);
  check_images(payload);
  return canvas.create_block(std::move(payload), near);
}

Outcome Studio::link(Canvas& canvas, const std::string& from, const std::string& to,
                     const std::optional<std::string>& action) {
  const Block& src = canvas.block(from);
  const Block& dst = canvas.block(to);
  const std::string act = action.value_or("");
  const bool src_text = src.kind == BlockKind::text;
  const bool src_image = src.kind == BlockKind::image;

  std::string expected;
  switch (dst.kind) {
    case BlockKind::image_rec:
    case BlockKind::caption_rec: expected = "explore"; break;
    case BlockKind::text:
    case BlockKind::image: expected = "fuse"; break;
    case BlockKind::post: expected = "compose"; break;
    case BlockKind::search_results: break;
  }
  if ((!src_text && !src_image) || expected.empty() || (!act.empty() && act != expected)) {
    fail(ErrorCode::bad_request, unsupported(src, dst, act));
  }
  if (from == to) fail(ErrorCode::bad_request, "cannot link a block to itself");

  // Run the pipeline first so a failure leaves the canvas untouched.
  canvas::Payload updated;
  switch (dst.kind) {
    case BlockKind::image_rec: {
      const auto& rec = std::get<recommend::ImageRecommendation>(dst.payload);
      auto result = src_text ? explore::explore_images_with_text(services_, rec.seed, block_text(src))
                             : explore::explore_images_with_image(services_, rec.seed, block_image(src));
      result.recommendation.seed = rec.seed;
      updated = std::move(result.recommendation);
      break;
    }
    case BlockKind::caption_rec: {
      auto rec = std::get<canvas::CaptionRecommendation>(dst.payload);
      rec.captions = src_text ? explore::explore_captions_with_text(services_, rec.seed_text, block_text(src))
                              : explore::explore_captions_with_image(services_, rec.seed_text, block_image(src));
      updated = std::move(rec);
      break;
    }
    case BlockKind::image: {
      const auto record = src_text ? fusion::fuse_text_image(services_, block_image(dst), block_text(src))
                                   : fusion::fuse_image_image(services_, block_image(dst), block_image(src));
      updated = replaced_image(dst, record.id);
      break;
    }
    case BlockKind::text: {
      auto caption = src_text ? fusion::fuse_text_caption(services_, block_text(dst), block_text(src))
                              : fusion::fuse_image_caption(services_, block_text(dst), block_image(src));
      updated = replaced_text(dst, std::move(caption));
      break;
    }
    case BlockKind::post: {
      auto post = std::get<canvas::PostComposition>(dst.payload);
      if (src_text) {
        post.caption = block_text(src);
      } else {
        post.image = block_image(src);
      }
      updated = std::move(post);
      break;
    }
    case BlockKind::search_results: break;
  }

  canvas.update_payload(to, std::move(updated));
  return {to, {canvas.add_edge(from, to, EdgeKind::customization)}};
}

Outcome Studio::derive(Canvas& canvas, const std::string& source, canvas::Payload payload) {
  check_images(payload);
  const auto id = canvas.create_block(std::move(payload), source);
  return {id, {canvas.add_edge(source, id, EdgeKind::exploration)}};
}

Outcome Studio::generate_from(Canvas& canvas, const std::string& source, GenerateWhat what,
                              const GenerateOptions& options) {
  const Block& src = canvas.block(source);
  const bool is_text = src.kind == BlockKind::text;
  const bool is_image = src.kind == BlockKind::image;
  if (!is_text && !is_image) {
    fail(ErrorCode::bad_request, "cannot generate from a " + std::string(to_string(src.kind)) + " block");
  }
  if (options.partner && what != GenerateWhat::post) {
    fail(ErrorCode::bad_request, "a partner block only applies to post generation");
  }

  switch (what) {
    case GenerateWhat::images: {
      if (is_text) {
        const std::string topic = block_text(src);
        const auto result = services_.corpus.read([&](const corpus::CorpusIndex& index) {
          return recommend::search_images(index, services_.graph, *services_.providers.classify, topic,
                                          options_.search_results, options.offset);
        });
        return derive(canvas, source, canvas::SearchResults{topic, result.ids, result.out_of_vocabulary});
      }
      auto rec = services_.corpus.read([&](const corpus::CorpusIndex& index) {
        return recommend::recommend_images(index, services_.graph, block_image(src), options.keyword,
                                           options_.rng_seed, services_.thresholds, options.offset);
      });
      return derive(canvas, source, std::move(rec));
    }
    case GenerateWhat::captions: {
      if (!is_text) fail(ErrorCode::bad_request, "captions can only be generated from a text block");
      const std::string topic = block_text(src);
      auto set = recommend::recommend_captions(*services_.providers.chat, topic);
      return derive(canvas, source, canvas::CaptionRecommendation{topic, std::move(set)});
    }
    case GenerateWhat::post: break;
  }

  canvas::PostComposition post;
  if (options.partner) {
    const Block& other = canvas.block(*options.partner);
    const Block* image_block = is_image ? &src : &other;
    const Block* text_block = is_text ? &src : &other;
    if (image_block->kind != BlockKind::image || text_block->kind != BlockKind::text) {
      fail(ErrorCode::bad_request, "a direct post needs one image block and one text block");
    }
    post.image = block_image(*image_block);
    post.caption = block_text(*text_block);
    check_images(post);
    const auto id = canvas.create_block(std::move(post), source);
    return {id,
            {canvas.add_edge(source, id, EdgeKind::exploration), canvas.add_edge(*options.partner, id, EdgeKind::exploration)}};
  }
  if (is_image) {
    const auto record = services_.corpus.record(block_image(src));
    const auto description = corpus::describe(services_.corpus, services_.providers, record);
    post.image = record.id;
    post.caption = recommend::recommend_captions(*services_.providers.chat, description)[captions::Dimension::product][0];
  } else {
    const std::string text = block_text(src);
    const auto bytes = services_.providers.image_gen->generate(text);
    const auto record = corpus::annotate_and_add(services_.corpus, services_.graph, services_.providers, bytes,
                                                 corpus::RecordSource::generated, {}, services_.annotation);
    post.image = record.id;
    post.caption = recommend::recommend_captions(*services_.providers.chat, text)[captions::Dimension::product][0];
  }
  return derive(canvas, source, std::move(post));
}

Outcome Studio::pick(Canvas& canvas, const std::string& source, const PickSpec& spec) {
  const Block& src = canvas.block(source);
  if (src.kind == BlockKind::caption_rec) {
    require(spec.dimension.has_value(), "picking a caption needs a dimension");
    const auto& list = std::get<canvas::CaptionRecommendation>(src.payload).captions[*spec.dimension];
    require(spec.index < list.size(), "caption index out of range");
    return derive(canvas, source, canvas::TextPayload{list[spec.index], {}});
  }
  require(spec.image_id.has_value(), "picking an image needs an image id");
  std::vector<std::string> offered;
  if (const auto* p = std::get_if<canvas::SearchResults>(&src.payload)) {
    offered = p->ids;
  } else if (const auto* p = std::get_if<recommend::ImageRecommendation>(&src.payload)) {
    for (const auto* list : {&p->semantic, &p->color, &p->object}) offered.insert(offered.end(), list->begin(), list->end());
  } else {
    fail(ErrorCode::bad_request, "cannot pick from a " + std::string(to_string(src.kind)) + " block");
  }
  if (std::find(offered.begin(), offered.end(), *spec.image_id) == offered.end()) {
    fail(ErrorCode::bad_request, "image '" + *spec.image_id + "' is not offered by block '" + source + "'");
  }
  return derive(canvas, source, canvas::ImagePayload{*spec.image_id, {}});
}

Outcome Studio::regenerate(Canvas& canvas, const std::string& image_block) {
  const Block& b = canvas.block(image_block);
  require(b.kind == BlockKind::image, "regenerate needs an image block");
  const auto record = fusion::regenerate_image(services_, block_image(b));
  return derive(canvas, image_block, canvas::ImagePayload{record.id, {}});
}

Outcome Studio::mask_edit(Canvas& canvas, const std::string& image_block, const fusion::MaskSpec& spec) {
  const Block& b = canvas.block(image_block);
  require(b.kind == BlockKind::image, "mask edit needs an image block");
  const auto record = fusion::mask_edit(services_, block_image(b), spec);
  return derive(canvas, image_block, canvas::ImagePayload{record.id, {}});
}

std::vector<std::uint8_t> Studio::export_post(const Canvas& canvas, const std::string& post_block) {
  const Block& b = canvas.block(post_block);
  require(b.kind == BlockKind::post, "block '" + post_block + "' is not a post");
  const auto& post = std::get<canvas::PostComposition>(b.payload);
  require(post.renderable(), "post '" + post_block + "' has neither image nor caption");
  return render_post(services_.corpus, post);
}

// ---------------------------------------------------------------------------
// Post rendering

namespace {

constexpr int kMargin = 40;
constexpr double kTextScale = 1.2;
constexpr int kLineHeight = 52;
const image::Rgb kWhite{255, 255, 255};
const image::Rgb kInk{30, 30, 30};

std::vector<std::string> wrap(const std::string& text, int width) {
  std::vector<std::string> lines;
  std::istringstream words(text);
  std::string word, line;
  while (words >> word) {
    const std::string candidate = line.empty() ? word : line + " " + word;
    if (!line.empty() && image::text_width(candidate, kTextScale) > width) {
      lines.push_back(line);
      line = word;
    } else {
      line = candidate;
    }
  }
  if (!line.empty()) lines.push_back(line);
  return lines;
}

void blit_fit(image::Raster& card, const image::Raster& src, int x0, int y0, int box_w, int box_h) {
  const double scale = std::min(double(box_w) / src.width, double(box_h) / src.height);
  const auto w = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(src.width * scale));
  const auto h = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(src.height * scale));
  const auto fitted = image::resize(src, w, h);
  const int ox = x0 + (box_w - static_cast<int>(w)) / 2;
  const int oy = y0 + (box_h - static_cast<int>(h)) / 2;
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) card.set(ox + x, oy + y, fitted.at(x, y));
  }
}

void draw_lines(image::Raster& card, const std::vector<std::string>& lines, int top, int bottom, image::Rgb ink) {
  int y = top;
  for (const auto& line : lines) {
    if (y + kLineHeight > bottom) break;
    image::draw_text(card, line, kMargin, y, kTextScale, ink);
    y += kLineHeight;
  }
}

}  // namespace

std::string printable_caption(std::string_view caption) {
  std::string out;
  for (const char ch : caption) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == '*') continue;
    if (c == '\n' || c == '\t') {
      out += ' ';
    } else if (c >= 0x20 && c < 0x7f) {
      out += ch;
    }
  }
  std::string squeezed;
  for (const char c : trim(out)) {
    if (c == ' ' && !squeezed.empty() && squeezed.back() == ' ') continue;
    squeezed += c;
  }
  return squeezed;
}

std::vector<std::uint8_t> render_post(const corpus::Corpus& corpus, const canvas::PostComposition& post) {
  image::Raster card(kPostWidth, kPostHeight, kWhite);
  const int inner = static_cast<int>(kPostWidth) - 2 * kMargin;
  const auto lines = post.caption ? wrap(printable_caption(*post.caption), inner) : std::vector<std::string>{};

  if (!post.image) {
    draw_lines(card, lines, kMargin, kPostHeight - kMargin, kInk);
    return image::encode_png(card);
  }
  const auto picture = image::decode(corpus.image_bytes(*post.image));
  if (post.layout == canvas::PostTemplate::caption_below) {
    blit_fit(card, picture, kMargin, kMargin, inner, inner);
    draw_lines(card, lines, 2 * kMargin + inner, kPostHeight - kMargin, kInk);
  } else {
    blit_fit(card, picture, 0, 0, kPostWidth, kPostHeight);
    if (!lines.empty()) {
      const int band_top = kPostHeight - 320;
      for (std::uint32_t y = band_top; y < kPostHeight; ++y) {
        for (std::uint32_t x = 0; x < kPostWidth; ++x) {
          const auto c = card.at(x, y);
          card.set(x, y, {static_cast<std::uint8_t>(c.r / 4), static_cast<std::uint8_t>(c.g / 4),
                          static_cast<std::uint8_t>(c.b / 4)});
        }
      }
      draw_lines(card, lines, band_top + kMargin, kPostHeight - kMargin, kWhite);
    }
  }
  return image::encode_png(card);
}

}  // namespace promoboard::studio
