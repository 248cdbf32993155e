#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promoboard {

/// Lowercase hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Error(bad_request) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);

/// Lowercased alphanumeric runs. Non-ASCII bytes split tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Splits one CSV line, honouring double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

std::vector<std::uint8_t> to_bytes(std::string_view text);
std::string to_string(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file(const std::string& path, std::string_view text);

/// splitmix64 step; used wherever a seeded, platform-stable stream is needed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seeded generator with a platform-stable bounded draw (std distributions
/// differ between standard libraries, which would break frozen goldens).
class StableRng {
 public:
  explicit StableRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_); }
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

}  // namespace promoboard
