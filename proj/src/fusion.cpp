#include "promoboard/fusion.hpp"

#include "promoboard/error.hpp"
#include "promoboard/prompts.hpp"
#include "promoboard/util.hpp"

namespace promoboard::fusion {

using corpus::ImageRecord;

namespace {

ImageRecord generate_and_add(Services& s, const std::string& prompt, const ImageRecord& source) {
  const auto bytes = s.providers.image_gen->generate(prompt);
  return corpus::annotate_and_add(s.corpus, s.graph, s.providers, bytes, corpus::RecordSource::generated,
                                  source.keywords, s.annotation);
}

void require_text(const std::string& text, const char* what) {
  require(!trim(text).empty(), std::string(what) + " must not be empty");
}

}  // namespace

ImageRecord fuse_text_image(Services& s, const std::string& target_image, const std::string& prompt) {
  require_text(prompt, "prompt");
  const ImageRecord target = s.corpus.record(target_image);
  const std::string description = corpus::describe(s.corpus, s.providers, target);
  return generate_and_add(s, prompts::image_with_requirement(description, prompt), target);
}

std::string fuse_text_caption(Services& s, const std::string& target_caption, const std::string& prompt) {
  require_text(target_caption, "target caption");
  require_text(prompt, "prompt");
  return s.providers.chat->complete(prompts::caption_with_text_prompt(target_caption, prompt));
}

ImageRecord fuse_image_image(Services& s, const std::string& target_image, const std::string& interest_image) {
  const ImageRecord target = s.corpus.record(target_image);
  const ImageRecord interest = s.corpus.record(interest_image);
  const std::string main = corpus::describe(s.corpus, s.providers, target);
  const std::string context = corpus::describe(s.corpus, s.providers, interest);
  return generate_and_add(s, prompts::image_under_image_context(main, context), target);
}

std::string fuse_image_caption(Services& s, const std::string& target_caption, const explore::ImageRef& interest_image) {
  require_text(target_caption, "target caption");
  std::string description;
  if (const auto* id = std::get_if<std::string>(&interest_image)) {
    description = corpus::describe(s.corpus, s.providers, s.corpus.record(*id));
  } else {
    const auto& bytes = std::get<std::vector<std::uint8_t>>(interest_image);
    image::decode(bytes);
    description = s.providers.caption->caption({bytes, {}});
  }
  return s.providers.chat->complete(prompts::caption_with_image_context(target_caption, description));
}

ImageRecord regenerate_image(Services& s, const std::string& target_image) {
  const ImageRecord target = s.corpus.record(target_image);
  return generate_and_add(s, corpus::describe(s.corpus, s.providers, target), target);
}

MaskSpec mask_spec_from_png(std::span<const std::uint8_t> png, std::string prompt) {
  return {image::decode_alpha_mask(png), std::move(prompt)};
}

ImageRecord mask_edit(Services& s, const std::string& target_image, const MaskSpec& spec) {
  const ImageRecord target = s.corpus.record(target_image);
  require_text(spec.prompt, "mask prompt");
  if (spec.mask.coverage.size() != std::size_t{spec.mask.width} * spec.mask.height) {
    fail(ErrorCode::bad_request, "mask coverage does not match its dimensions");
  }
  if (spec.mask.covered() == 0) fail(ErrorCode::bad_request, "empty mask");
  const auto original = s.corpus.image_bytes(target);
  const image::Raster raster = image::decode(original);
  if (spec.mask.width != raster.width || spec.mask.height != raster.height) {
    fail(ErrorCode::bad_request, "mask is " + std::to_string(spec.mask.width) + "x" + std::to_string(spec.mask.height) +
                                     " but the image is " + std::to_string(raster.width) + "x" +
                                     std::to_string(raster.height));
  }
  // Providers get PNG regardless of the stored encoding.
  const auto png = image::looks_like_png(original) ? original : image::encode_png(raster);
  const auto edited = s.providers.inpaint->inpaint(png, spec.mask, spec.prompt);
  return corpus::annotate_and_add(s.corpus, s.graph, s.providers, edited, corpus::RecordSource::generated,
                                  target.keywords, s.annotation);
}

FusionOutput fuse(Services& s, const FusionRequest& r) {
  const auto need = [](bool ok, const char* message) { require(ok, message); };
  switch (r.kind) {
    case FusionKind::text_image:
      need(r.target_image && r.prompt && !r.target_caption && !r.interest_image,
           "text-image fusion takes target_image and prompt only");
      return fuse_text_image(s, *r.target_image, *r.prompt);
    case FusionKind::text_caption:
      need(r.target_caption && r.prompt && !r.target_image && !r.interest_image,
           "text-caption fusion takes target_caption and prompt only");
      return fuse_text_caption(s, *r.target_caption, *r.prompt);
    case FusionKind::image_image:
      need(r.target_image && r.interest_image && !r.prompt && !r.target_caption,
           "image-image fusion takes target_image and interest_image only");
      return fuse_image_image(s, *r.target_image, *r.interest_image);
    case FusionKind::image_caption:
      need(r.target_caption && r.interest_image && !r.prompt && !r.target_image,
           "image-caption fusion takes target_caption and interest_image only");
      return fuse_image_caption(s, *r.target_caption, explore::ImageRef{*r.interest_image});
  }
  fail(ErrorCode::bad_request, "unknown fusion kind");
}

}  // namespace promoboard::fusion
