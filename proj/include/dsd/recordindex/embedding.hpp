#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/common/errors.hpp"
#include "dsd/net/http.hpp"

namespace dsd::recordindex {

class EmbedderUnavailable : public RetryableError {
 public:
  using RetryableError::RetryableError;
};

// Text -> unit vector of a fixed, backend-declared dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;
  // Throws EmbedderUnavailable when the backend cannot answer.
  virtual std::vector<float> embed(std::string_view text) const = 0;
};

// Scales v to unit length in place. Returns false (and leaves v alone) for a zero vector.
bool normalize(std::span<float> v);

// Signed feature hashing of lower-cased alphanumeric tokens (FNV-1a 64; the
// bucket is h mod dimension, the sign is the top bit), then unit-normalized.
// Text without tokens maps to the basis vector e0.
class ReferenceEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDimension = 256;
  explicit ReferenceEmbedder(std::size_t dimension = kDefaultDimension);
  std::size_t dimension() const override { return dimension_; }
  std::string name() const override { return "reference-hash-v1"; }
  std::vector<float> embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
};

// Remote encoder.
//   GET  <url>/info   -> {"dimension": 768, "model": "..."}
//   POST <url>/embed  {"text": "..."} -> {"embedding": [ ... ]}
// The returned vector is normalized locally.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(net::HttpTransport& transport, std::string url, std::size_t dimension);
  std::size_t dimension() const override { return dimension_; }
  std::string name() const override { return "remote:" + url_; }
  std::vector<float> embed(std::string_view text) const override;

  // Asks the encoder for its dimension. Throws EmbedderUnavailable if it does
  // not answer and InvalidArgument if it disagrees with the configured one.
  void handshake() const;

 private:
  net::HttpTransport& transport_;
  std::string url_;
  std::size_t dimension_;
};

}  // namespace dsd::recordindex
