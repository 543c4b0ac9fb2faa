#include <cmath>
#include <json.hpp>

#include "dsd/common/text.hpp"
#include "dsd/recordindex/embedding.hpp"
#include "dsd/simd/kernels.hpp"

namespace dsd::recordindex {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

bool normalize(std::span<float> v) {
  const double norm = std::sqrt(simd::sum_squares(v));
  if (norm == 0.0 || !std::isfinite(norm)) return false;
  simd::scale(v, static_cast<float>(1.0 / norm));
  return true;
}

ReferenceEmbedder::ReferenceEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
}

std::vector<float> ReferenceEmbedder::embed(std::string_view raw) const {
  std::vector<float> v(dimension_, 0.0f);
  const std::string s = text::lower(raw);
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !text::is_alnum(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && text::is_alnum(s[j])) ++j;
    if (j > i) {
      const std::uint64_t h = fnv1a64(std::string_view(s).substr(i, j - i));
      v[h % dimension_] += (h >> 63) ? -1.0f : 1.0f;
    }
    i = j;
  }
  if (!normalize(v)) {
    std::fill(v.begin(), v.end(), 0.0f);
    v[0] = 1.0f;
  }
  return v;
}

RemoteEmbedder::RemoteEmbedder(net::HttpTransport& transport, std::string url, std::size_t dimension)
    : transport_(transport), url_(std::move(url)), dimension_(dimension) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
  if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
}

void RemoteEmbedder::handshake() const {
  const net::HttpResponse response = transport_.get(url_ + "/info");
  if (!response.ok()) throw EmbedderUnavailable("embedder handshake failed", url_);
  const auto j = nlohmann::json::parse(response.body, nullptr, false);
  if (j.is_discarded() || !j.contains("dimension") || !j["dimension"].is_number_unsigned()) {
    throw EmbedderUnavailable("embedder handshake: malformed /info reply", url_);
  }
  const auto remote = j["dimension"].get<std::size_t>();
  if (remote != dimension_) {
    throw InvalidArgument("embedder reports dimension " + std::to_string(remote) + ", index expects " +
                          std::to_string(dimension_));
  }
}

std::vector<float> RemoteEmbedder::embed(std::string_view text) const {
  const nlohmann::json request = {{"text", std::string(text)}};
  const net::HttpResponse response = transport_.post(url_ + "/embed", request.dump(), "application/json");
  if (!response.ok()) {
    throw EmbedderUnavailable(
        "embedder: " + (response.transport_ok() ? "HTTP " + std::to_string(response.status) : response.failure_detail),
        url_);
  }
  const auto j = nlohmann::json::parse(response.body, nullptr, false);
  const nlohmann::json* values = nullptr;
  if (j.is_array()) {
    values = &j;
  } else if (j.is_object() && j.contains("embedding") && j["embedding"].is_array()) {
    values = &j["embedding"];
  }
  if (!values) throw EmbedderUnavailable("embedder: malformed reply", url_);
  std::vector<float> v;
  v.reserve(values->size());
  for (const auto& x : *values) {
    if (!x.is_number()) throw EmbedderUnavailable("embedder: non-numeric component", url_);
    v.push_back(x.get<float>());
  }
  if (v.size() != dimension_) {
    throw EmbedderUnavailable("embedder returned " + std::to_string(v.size()) + " components, expected " +
                                  std::to_string(dimension_),
                              url_);
  }
  if (!normalize(v)) throw EmbedderUnavailable("embedder returned a zero vector", url_);
  return v;
}

}  // namespace dsd::recordindex
