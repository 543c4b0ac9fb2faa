#include "dsd/linkextract/url.hpp"

#include "dsd/common/text.hpp"

namespace dsd::linkextract {

std::vector<std::string> UrlParts::segments() const {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string::npos ? path.size() : j;
    if (end > i) out.push_back(text::lower(path.substr(i, end - i)));
    if (j == std::string::npos) break;
    i = j + 1;
  }
  return out;
}

std::optional<UrlParts> parse_url(std::string_view raw) {
  std::string_view url = text::trim(raw);
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) return std::nullopt;
  UrlParts parts;
  parts.scheme = text::lower(url.substr(0, scheme_end));
  if (parts.scheme != "http" && parts.scheme != "https") return std::nullopt;
  url.remove_prefix(scheme_end + 3);

  const auto authority_end = url.find_first_of("/?#");
  std::string_view authority = url.substr(0, authority_end);
  url.remove_prefix(authority_end == std::string_view::npos ? url.size() : authority_end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    const std::string_view port = authority.substr(colon + 1);
    for (char c : port) {
      if (c < '0' || c > '9') return std::nullopt;
    }
    if (!((parts.scheme == "http" && port == "80") || (parts.scheme == "https" && port == "443"))) {
      parts.port = std::string(port);
    }
    authority = authority.substr(0, colon);
  }
  parts.host = text::lower(authority);
  if (parts.host.empty() || parts.host.front() == '.' || parts.host.back() == '.') return std::nullopt;
  bool has_dot = false;
  for (char c : parts.host) {
    if (c == '.') {
      has_dot = true;
    } else if (!text::is_alnum(c) && c != '-') {
      return std::nullopt;
    }
  }
  if (!has_dot && parts.host != "localhost") return std::nullopt;

  if (auto hash = url.find('#'); hash != std::string_view::npos) url = url.substr(0, hash);
  if (auto q = url.find('?'); q != std::string_view::npos) {
    parts.query = std::string(url.substr(q + 1));
    url = url.substr(0, q);
  }
  parts.path = url.empty() ? "/" : std::string(url);
  for (char c : parts.path) {
    if (text::is_space(c)) return std::nullopt;
  }
  return parts;
}

std::string to_string(const UrlParts& parts) {
  std::string out = parts.scheme + "://" + parts.host;
  if (!parts.port.empty()) out += ":" + parts.port;
  out += parts.path;
  if (!parts.query.empty()) out += "?" + parts.query;
  return out;
}

std::optional<std::string> normalize_url(std::string_view url) {
  auto parts = parse_url(url);
  if (!parts) return std::nullopt;
  if (parts->path.size() > 1 && parts->path.back() == '/') parts->path.pop_back();
  return to_string(*parts);
}

}  // namespace dsd::linkextract
