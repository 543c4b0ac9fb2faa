#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/common/errors.hpp"
#include "dsd/ingest/ingest.hpp"
#include "dsd/net/http.hpp"

namespace dsd::docparse {

struct Sentence {
  std::size_t index = 0;
  std::string text;
  std::optional<std::string> section;
  std::size_t token_count = 1;

  bool operator==(const Sentence&) const = default;
};

enum class ParseSource { structured_service, plaintext_fallback };
std::string_view to_string(ParseSource source);

struct ParsedDocument {
  std::string paper_id;
  std::vector<Sentence> sentences;
  ParseSource parse_source = ParseSource::structured_service;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::size_t count(std::string_view text) const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override;
};

// ---- PDF download --------------------------------------------------------

// Bounds the number of PDF downloads in flight across all workers.
class DownloadLimiter {
 public:
  explicit DownloadLimiter(std::size_t max_concurrent);
  std::size_t capacity() const { return capacity_; }

  class Permit {
   public:
    explicit Permit(DownloadLimiter& owner) : owner_(&owner) { owner_->slots_.acquire(); }
    ~Permit() {
      if (owner_) owner_->slots_.release();
    }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    DownloadLimiter* owner_;
  };
  Permit acquire() { return Permit(*this); }

 private:
  std::size_t capacity_;
  std::counting_semaphore<> slots_;
};

// 404, 410 or a response that is not a PDF.
class PermanentSkip : public PermanentError {
 public:
  using PermanentError::PermanentError;
};

struct RetryPolicy {
  int retry_cap = 3;  // retries after the first attempt
  std::chrono::milliseconds base_backoff{500};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct FetchedPdf {
  std::string bytes;
  int attempts = 0;
};

// Downloads meta.pdf_url. Timeouts, connection failures and 5xx are retried
// with exponential backoff (base * 2^n) up to retry_cap; exhausting the cap
// throws RetryableError.
FetchedPdf fetch_pdf(const ingest::PaperMeta& meta, net::HttpTransport& transport,
                     const RetryPolicy& policy = {}, DownloadLimiter* limiter = nullptr);

// ---- Structured parse service ------------------------------------------

class ServiceUnavailable : public RetryableError {
 public:
  using RetryableError::RetryableError;
};

class StructuredParseClient {
 public:
  virtual ~StructuredParseClient() = default;
  // Returns TEI XML for the PDF; throws ServiceUnavailable.
  virtual std::string process_fulltext(std::string_view pdf_bytes) = 0;
};

// GROBID-compatible: multipart POST of the PDF to
// <service_url>/api/processFulltextDocument with segmentSentences=1.
class GrobidClient final : public StructuredParseClient {
 public:
  GrobidClient(net::HttpTransport& transport, std::string service_url);
  std::string process_fulltext(std::string_view pdf_bytes) override;

 private:
  net::HttpTransport& transport_;
  std::string endpoint_;
};

// Both the service and the plaintext fallback failed.
class UnprocessableDocument : public Error {
 public:
  using Error::Error;
};

struct TeiSentence {
  std::string text;
  std::optional<std::string> section;
};

// Sentences of a TEI document in document order: every <s> element, or when
// the service did not segment, every <p> split with the rule-based splitter.
// Throws dsd::ParseError on malformed XML.
std::vector<TeiSentence> sentences_from_tei(std::string_view tei);

// Structured service first; on ServiceUnavailable, malformed TEI or an empty
// result, PDF text extraction plus the rule-based splitter.
ParsedDocument parse_sentences(std::string_view paper_id, std::string_view pdf_bytes,
                               StructuredParseClient* service, const Tokenizer& tokenizer);

// Builds indexed Sentence records; drops entries empty after normalization.
std::vector<Sentence> make_sentences(const std::vector<TeiSentence>& raw, const Tokenizer& tokenizer);

}  // namespace dsd::docparse
