#include "promoboard/prompts.hpp"

namespace promoboard::prompts {

namespace {

constexpr std::string_view kCaptionsHead =
    "Generate three promotional captions for each dimension (product, activity, advertisement) based on the given "
    "text: ";
constexpr std::string_view kCaptionsTail =
    ". please also highlight the keywords with asterisks and keep rendering icons in each caption.";

std::string cat(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (auto p : parts) out += p;
  return out;
}

}  // namespace

std::string captions_for_topic(std::string_view topic) { return cat({kCaptionsHead, topic, kCaptionsTail}); }

std::string captions_with_text_context(std::string_view seed_text, std::string_view text_context) {
  return cat({kCaptionsHead, seed_text, " and following the given prompt ", text_context, kCaptionsTail});
}

std::string captions_with_image_context(std::string_view seed_text, std::string_view image_description) {
  return cat({kCaptionsHead, seed_text, " and following the given image prompt ", image_description, kCaptionsTail});
}

std::string image_under_text_context(std::string_view image_description, std::string_view text_context) {
  return cat({image_description, " under the context of ", text_context});
}

std::string image_with_requirement(std::string_view image_description, std::string_view requirement) {
  return cat({image_description, " based on the requirement: ", requirement});
}

std::string caption_with_text_prompt(std::string_view caption, std::string_view text_prompt) {
  return cat({"Regenerate the following promotional post caption: ", caption, " based on the given text prompt: ",
              text_prompt,
              ". Please also highlight the related keywords with asterisks and keep rendering icons in the caption"});
}

std::string image_under_image_context(std::string_view target_description, std::string_view context_description) {
  return cat({target_description, " under the context of: ", context_description});
}

std::string caption_with_image_context(std::string_view caption, std::string_view image_description) {
  return cat({"Regenerate the following promotional caption ", caption, " based on the given image context: ",
              image_description,
              ". Please also highlight the related keywords with asterisks and keep rendering icons in the caption."});
}

}  // namespace promoboard::prompts
