#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace promoboard::captions {

enum class Dimension { product = 0, activity = 1, advertisement = 2 };

inline constexpr std::array<Dimension, 3> kDimensions{Dimension::product, Dimension::activity,
                                                     Dimension::advertisement};

std::string_view to_string(Dimension d);

/// Three captions in each promotional dimension. Display text keeps the
/// asterisk keyword markers and any icon glyphs exactly as received.
struct CaptionSet {
  std::array<std::vector<std::string>, 3> by_dimension;

  const std::vector<std::string>& operator[](Dimension d) const { return by_dimension[static_cast<int>(d)]; }
  std::vector<std::string>& operator[](Dimension d) { return by_dimension[static_cast<int>(d)]; }
  bool well_formed() const;
  bool operator==(const CaptionSet&) const = default;
};

/// Tolerant parser for chat responses: case-insensitive dimension headers
/// (markdown headings, bold, numbered or trailing-colon forms), numbered or
/// bulleted captions. Exactly three captions per dimension or
/// Error(parse_failure) naming the offending dimension.
CaptionSet parse_caption_response(std::string_view text);

nlohmann::json to_json(const CaptionSet& set);
CaptionSet caption_set_from_json(const nlohmann::json& doc);

}  // namespace promoboard::captions
