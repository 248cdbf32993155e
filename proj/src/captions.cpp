#include "promoboard/captions.hpp"

#include <nlohmann/json.hpp>
#include <optional>
#include <regex>

#include "promoboard/error.hpp"
#include "promoboard/util.hpp"

namespace promoboard::captions {

namespace {

const std::regex& header_pattern() {
  static const std::regex kHeader(
      R"(^(product|products|activity|activities|advertisement|advertisements|advertising)( dimension| captions?| context| ideas?)?$)");
  return kHeader;
}

const std::regex& list_marker() {
  static const std::regex kMarker(R"(^(\d+\s*[.)]|[-•]|\*(?=\s)|caption\s*\d+\s*:)\s*)", std::regex::icase);
  return kMarker;
}

std::optional<Dimension> header_dimension(const std::string& line) {
  // Strip heading marks, numbering and emphasis so "## **1. Product:**" reads as "product".
  std::string s = to_lower(line);
  static const std::regex kEmphasis(R"([*_`]+)");
  static const std::regex kLead(R"(^[#>\s]*(\d+\s*[.)]\s*)?)");
  s = std::regex_replace(std::regex_replace(s, kEmphasis, ""), kLead, "");
  s = trim(s);
  while (!s.empty() && (s.back() == ':' || s.back() == '.')) s.pop_back();
  s = trim(s);
  std::smatch m;
  if (!std::regex_match(s, m, header_pattern())) return std::nullopt;
  const std::string word = m[1].str();
  if (word.starts_with("product")) return Dimension::product;
  if (word.starts_with("activit")) return Dimension::activity;
  return Dimension::advertisement;
}

std::string caption_text(const std::string& line) {
  std::string s = std::regex_replace(trim(line), list_marker(), "", std::regex_constants::format_first_only);
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim(s.substr(1, s.size() - 2));
  return s;
}

}  // namespace

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::product: return "product";
    case Dimension::activity: return "activity";
    case Dimension::advertisement: return "advertisement";
  }
  return "product";
}

bool CaptionSet::well_formed() const {
  for (const auto& captions : by_dimension) {
    if (captions.size() != 3) return false;
    for (const auto& c : captions) {
      if (trim(c).empty()) return false;
    }
  }
  return true;
}

CaptionSet parse_caption_response(std::string_view text) {
  CaptionSet set;
  std::optional<Dimension> current;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (auto d = header_dimension(line)) {
      current = d;
      continue;
    }
    if (!current) continue;
    std::string caption = caption_text(line);
    if (!caption.empty()) set[*current].push_back(std::move(caption));
  }

  std::string problems;
  for (auto d : kDimensions) {
    const auto n = set[d].size();
    if (n != 3) {
      if (!problems.empty()) problems += "; ";
      problems += std::string(to_string(d)) + " has " + std::to_string(n) + " caption" + (n == 1 ? "" : "s") +
                  ", expected 3";
    }
  }
  if (!problems.empty()) fail(ErrorCode::parse_failure, "caption response: " + problems);
  return set;
}

nlohmann::json to_json(const CaptionSet& set) {
  nlohmann::json doc = nlohmann::json::object();
  for (auto d : kDimensions) doc[std::string(to_string(d))] = set[d];
  return doc;
}

CaptionSet caption_set_from_json(const nlohmann::json& doc) {
  CaptionSet set;
  for (auto d : kDimensions) set[d] = doc.at(std::string(to_string(d))).get<std::vector<std::string>>();
  return set;
}

}  // namespace promoboard::captions
