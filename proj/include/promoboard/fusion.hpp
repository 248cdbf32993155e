#pragma once

#include <optional>
#include <string>
#include <variant>

#include "promoboard/context_explorer.hpp"
#include "promoboard/corpus.hpp"
#include "promoboard/image.hpp"
#include "promoboard/services.hpp"

namespace promoboard::fusion {

// Every pipeline leaves its inputs untouched; generated images become new,
// fully annotated corpus records.

corpus::ImageRecord fuse_text_image(Services& services, const std::string& target_image, const std::string& prompt);

std::string fuse_text_caption(Services& services, const std::string& target_caption, const std::string& prompt);

/// The target image is the main component, the interest image the context.
corpus::ImageRecord fuse_image_image(Services& services, const std::string& target_image,
                                     const std::string& interest_image);

std::string fuse_image_caption(Services& services, const std::string& target_caption,
                               const explore::ImageRef& interest_image);

/// A similar image: the target's description alone is the generation prompt.
corpus::ImageRecord regenerate_image(Services& services, const std::string& target_image);

struct MaskSpec {
  image::Mask mask;
  std::string prompt;
};

/// Alpha > 127 marks covered pixels.
MaskSpec mask_spec_from_png(std::span<const std::uint8_t> png, std::string prompt);

/// Inpaints the covered region. Rejects empty masks and masks whose
/// dimensions differ from the target image.
corpus::ImageRecord mask_edit(Services& services, const std::string& target_image, const MaskSpec& spec);

enum class FusionKind { text_image, text_caption, image_image, image_caption };

struct FusionRequest {
  FusionKind kind = FusionKind::text_image;
  std::optional<std::string> target_image;
  std::optional<std::string> target_caption;
  std::optional<std::string> prompt;
  std::optional<std::string> interest_image;
};

/// Either a new image record or a new caption.
using FusionOutput = std::variant<corpus::ImageRecord, std::string>;

/// Checks that exactly the fields `kind` needs are present, then runs it.
FusionOutput fuse(Services& services, const FusionRequest& request);

}  // namespace promoboard::fusion
