#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace promoboard {

/// Error categories surfaced across module boundaries. The API layer maps
/// these onto HTTP status codes.
enum class ErrorCode {
  bad_request,
  not_found,
  provider_failure,
  parse_failure,
  conflict,
  decode,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::string> provider = std::nullopt)
      : std::runtime_error(message), code_(code), provider_(std::move(provider)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::string>& provider() const noexcept { return provider_; }

 private:
  ErrorCode code_;
  std::optional<std::string> provider_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::bad_request, message);
}

}  // namespace promoboard
