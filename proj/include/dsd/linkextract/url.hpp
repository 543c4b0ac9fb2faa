#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsd::linkextract {

struct UrlParts {
  std::string scheme;  // "http" | "https"
  std::string host;    // lower-case
  std::string port;    // empty unless non-default
  std::string path;    // starts with '/', never empty
  std::string query;   // without '?'

  // Lower-cased, non-empty path segments.
  std::vector<std::string> segments() const;
};

// Accepts only http(s) URLs with a plausible host.
std::optional<UrlParts> parse_url(std::string_view url);

// Canonical form used for dedup: lower-case scheme and host, default port and
// fragment dropped, one trailing '/' removed from non-root paths.
std::optional<std::string> normalize_url(std::string_view url);

std::string to_string(const UrlParts& parts);

}  // namespace dsd::linkextract
