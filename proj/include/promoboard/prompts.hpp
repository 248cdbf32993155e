#pragma once

#include <string>
#include <string_view>

namespace promoboard::prompts {

// Outbound prompt construction. Every builder is a plain substitution into a
// fixed template; the wording is part of the contract and must not drift.

/// Caption recommendation from a topic.
std::string captions_for_topic(std::string_view topic);

/// Caption exploration steered by a text context.
std::string captions_with_text_context(std::string_view seed_text, std::string_view text_context);

/// Caption exploration steered by an image description.
std::string captions_with_image_context(std::string_view seed_text, std::string_view image_description);

/// Contextual prompt for text-steered image exploration.
std::string image_under_text_context(std::string_view image_description, std::string_view text_context);

/// Image-generation prompt fusing an image description with a text requirement.
std::string image_with_requirement(std::string_view image_description, std::string_view requirement);

/// Caption rewrite under a text prompt.
std::string caption_with_text_prompt(std::string_view caption, std::string_view text_prompt);

/// Image-generation prompt fusing two image descriptions (target first).
std::string image_under_image_context(std::string_view target_description, std::string_view context_description);

/// Caption rewrite under an image description.
std::string caption_with_image_context(std::string_view caption, std::string_view image_description);

}  // namespace promoboard::prompts
