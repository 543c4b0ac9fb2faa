#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "dsd/descextract/descextract.hpp"
#include "dsd/docparse/docparse.hpp"
#include "dsd/gate/gate.hpp"
#include "dsd/ingest/ingest.hpp"
#include "dsd/linkextract/linkextract.hpp"
#include "dsd/net/http.hpp"
#include "dsd/recordindex/index.hpp"
#include "dsd/service/config.hpp"

namespace dsd::service {

enum class Disposition {
  record_written,
  gate_negative,
  reclassified_negative,
  pdf_unavailable,
  unprocessable,
  backend_error,
  already_indexed,
};
std::string_view to_string(Disposition d);

struct PipelineOutcome {
  std::string paper_id;
  Disposition disposition = Disposition::gate_negative;
  std::string stage;   // gate | docparse | descextract | linkextract | recordindex
  std::string detail;  // error text for failures
  double gate_score = 0.0;
  bool gate_positive = false;
  bool description_extracted = false;
  bool pdf_fallback = false;
  std::size_t sentence_count = 0;
  std::size_t positive_sentences = 0;
  std::optional<docparse::ParseSource> parse_source;
  std::optional<linkextract::SelectionResult> selection;
  std::optional<recordindex::DatasetRecord> record;
};

// Everything one pipeline run needs, built once per crawl from a config.
// Backends are shared by all workers.
class PipelineServices {
 public:
  PipelineServices(const CrawlConfig& config, net::HttpTransport& transport, recordindex::RecordIndex& index,
                   std::shared_ptr<const recordindex::Embedder> embedder);

  const CrawlConfig& config() const { return config_; }
  net::HttpTransport& transport() { return transport_; }
  recordindex::RecordIndex& index() { return index_; }
  const recordindex::Embedder& embedder() const { return *embedder_; }
  const gate::ScoreBackend& gate_backend() const { return *gate_; }
  const descextract::SentenceBackend& sentence_backend() const { return *desc_; }
  docparse::StructuredParseClient* parser() { return parser_.get(); }
  docparse::DownloadLimiter& downloads() { return downloads_; }
  const docparse::Tokenizer& tokenizer() const { return tokenizer_; }
  linkextract::LinkVerifier* verifier() { return verifier_.get(); }
  docparse::RetryPolicy retry_policy() const { return retry_; }
  void set_retry_sleep(std::function<void(std::chrono::milliseconds)> sleep) { retry_.sleep = std::move(sleep); }

 private:
  CrawlConfig config_;
  net::HttpTransport& transport_;
  recordindex::RecordIndex& index_;
  std::shared_ptr<const recordindex::Embedder> embedder_;
  std::unique_ptr<gate::ScoreBackend> gate_;
  std::unique_ptr<descextract::SentenceBackend> desc_;
  std::unique_ptr<docparse::StructuredParseClient> parser_;
  docparse::DownloadLimiter downloads_;
  docparse::WhitespaceTokenizer tokenizer_;
  std::unique_ptr<linkextract::LinkVerifier> verifier_;
  docparse::RetryPolicy retry_;
};

// Embedder selected by index.embedder.
std::shared_ptr<const recordindex::Embedder> make_embedder(const IndexSettings& settings, net::HttpTransport& transport);

// gate -> docparse -> descextract, with linkextract running alongside the
// description stage, then one upsert. Stage failures become dispositions;
// only programming errors escape.
PipelineOutcome run_pipeline(const ingest::PaperMeta& meta, PipelineServices& services);

// One JSON line per paper that did not produce a record (plus records that
// needed the PDF link fallback).
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::filesystem::path& path);
  bool enabled() const { return out_.is_open(); }
  void write(const PipelineOutcome& outcome, Timestamp at);

  static nlohmann::ordered_json entry(const PipelineOutcome& outcome, Timestamp at);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace dsd::service
