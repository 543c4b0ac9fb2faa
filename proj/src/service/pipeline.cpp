#include "dsd/service/pipeline.hpp"

#include <future>
#include <spdlog/spdlog.h>

namespace dsd::service {

namespace {

struct LinkStage {
  std::vector<linkextract::UrlCandidate> candidates;
  bool pdf_fallback = false;
  std::string detail;
};

LinkStage extract_links(const ingest::PaperMeta& meta, PipelineServices& services) {
  LinkStage stage;
  try {
    const auto files = linkextract::fetch_source(meta, services.transport(),
                                                 services.config().link.max_decompressed_mb << 20);
    stage.candidates = linkextract::extract_candidates(files);
  } catch (const Error& e) {
    // SourceUnavailable, ArchiveTooLarge, or anything else on the source path:
    // fall back to links found in the PDF text.
    stage.pdf_fallback = true;
    stage.detail = e.what();
    spdlog::info("{}: no usable LaTeX source ({}), using PDF links", meta.paper_id, e.what());
  }
  return stage;
}

PipelineOutcome skip(PipelineOutcome outcome, Disposition d, std::string stage, std::string detail = {}) {
  outcome.disposition = d;
  outcome.stage = std::move(stage);
  outcome.detail = std::move(detail);
  return outcome;
}

}  // namespace

std::string_view to_string(Disposition d) {
  switch (d) {
    case Disposition::record_written:
      return "record_written";
    case Disposition::gate_negative:
      return "gate_negative";
    case Disposition::reclassified_negative:
      return "reclassified_negative";
    case Disposition::pdf_unavailable:
      return "pdf_unavailable";
    case Disposition::unprocessable:
      return "unprocessable";
    case Disposition::backend_error:
      return "backend_error";
    case Disposition::already_indexed:
      return "already_indexed";
  }
  return "?";
}

std::shared_ptr<const recordindex::Embedder> make_embedder(const IndexSettings& settings,
                                                           net::HttpTransport& transport) {
  if (settings.embedder == "remote") {
    auto remote = std::make_shared<recordindex::RemoteEmbedder>(transport, settings.remote_url, settings.dimension);
    try {
      remote->handshake();
    } catch (const recordindex::EmbedderUnavailable& e) {
      spdlog::warn("embedder not reachable yet: {}", e.what());
    }
    return remote;
  }
  return std::make_shared<recordindex::ReferenceEmbedder>(settings.dimension);
}

PipelineServices::PipelineServices(const CrawlConfig& config, net::HttpTransport& transport,
                                   recordindex::RecordIndex& index,
                                   std::shared_ptr<const recordindex::Embedder> embedder)
    : config_(config),
      transport_(transport),
      index_(index),
      embedder_(std::move(embedder)),
      downloads_(config.docparse.max_downloads) {
  config_.validate();
  if (config_.gate.backend == "remote") {
    gate_ = std::make_unique<gate::RemoteScoreBackend>(transport, config_.gate.remote_url, "remote-gate");
  } else {
    gate_ = std::make_unique<gate::HeuristicGateBackend>();
  }
  if (config_.desc.backend == "remote") {
    desc_ = std::make_unique<descextract::RemoteSentenceBackend>(transport, config_.desc.remote_url);
  } else {
    desc_ = std::make_unique<descextract::HeuristicSentenceBackend>();
  }
  if (!config_.docparse.service_url.empty()) {
    parser_ = std::make_unique<docparse::GrobidClient>(transport, config_.docparse.service_url);
  }
  if (config_.link.verifier_enabled && config_.link.mode != linkextract::SelectionMode::rule_only) {
    verifier_ = std::make_unique<linkextract::HttpLinkVerifier>(transport, config_.link.verifier_url,
                                                               config_.crawl.worker_count);
  }
  retry_.retry_cap = config_.docparse.retry_cap;
  if (embedder_->dimension() != index_.dimension()) {
    throw InvalidArgument("embedder dimension " + std::to_string(embedder_->dimension()) +
                          " does not match index dimension " + std::to_string(index_.dimension()));
  }
}

PipelineOutcome run_pipeline(const ingest::PaperMeta& meta, PipelineServices& services) {
  const CrawlConfig& config = services.config();
  PipelineOutcome outcome;
  outcome.paper_id = meta.paper_id;

  if (services.index().touch(meta.paper_id)) {
    return skip(std::move(outcome), Disposition::already_indexed, "recordindex");
  }

  try {
    const gate::GateDecision decision = gate::classify(meta, services.gate_backend(), config.gate.threshold);
    outcome.gate_score = decision.score;
    outcome.gate_positive = decision.positive;
  } catch (const Error& e) {
    return skip(std::move(outcome), Disposition::backend_error, "gate", e.what());
  }
  if (!outcome.gate_positive) return skip(std::move(outcome), Disposition::gate_negative, "gate");

  // Link extraction only needs the source archive, so it starts now and is
  // joined before the record is assembled.
  std::future<LinkStage> links = std::async(std::launch::async, [&] { return extract_links(meta, services); });
  auto finish_links = [&] {
    LinkStage stage = links.get();
    outcome.pdf_fallback = stage.pdf_fallback;
    return stage;
  };

  docparse::ParsedDocument doc;
  try {
    const docparse::FetchedPdf pdf =
        docparse::fetch_pdf(meta, services.transport(), services.retry_policy(), &services.downloads());
    doc = docparse::parse_sentences(meta.paper_id, pdf.bytes, services.parser(), services.tokenizer());
    outcome.parse_source = doc.parse_source;
    outcome.sentence_count = doc.sentences.size();
  } catch (const docparse::UnprocessableDocument& e) {
    finish_links();
    return skip(std::move(outcome), Disposition::unprocessable, "docparse", e.what());
  } catch (const Error& e) {
    finish_links();
    return skip(std::move(outcome), Disposition::pdf_unavailable, "docparse", e.what());
  }

  descextract::DescriptionResult description;
  try {
    descextract::ClassifyOptions options;
    options.threshold = config.desc.threshold;
    options.token_budget = config.docparse.token_budget;
    options.seed_radius = config.desc.seed_radius;
    const auto verdicts = descextract::classify_sentences(doc, services.sentence_backend(), options);
    description = descextract::aggregate_description(doc, verdicts);
  } catch (const Error& e) {
    finish_links();
    return skip(std::move(outcome), Disposition::backend_error, "descextract", e.what());
  }
  outcome.positive_sentences = description.positive_indices.size();
  if (description.reclassified_negative) {
    finish_links();
    return skip(std::move(outcome), Disposition::reclassified_negative, "descextract");
  }
  outcome.description_extracted = true;

  LinkStage link_stage = finish_links();
  if (link_stage.pdf_fallback) link_stage.candidates = linkextract::extract_candidates_from_sentences(doc.sentences);
  std::vector<linkextract::ScoredCandidate> scored;
  scored.reserve(link_stage.candidates.size());
  for (const auto& c : link_stage.candidates) scored.push_back(linkextract::score_candidate(c));
  const linkextract::SelectionResult selection =
      linkextract::select_primary(std::move(scored), config.link.thresholds, config.link.mode, services.verifier());
  outcome.selection = selection;

  recordindex::DatasetRecord record;
  record.paper_id = meta.paper_id;
  record.paper_url = ingest::abs_url_for(meta.paper_id);
  record.title = meta.title;
  record.dataset_url = selection.primary_url;
  record.description = *description.description;
  record.categories = meta.categories;
  record.gate_score = outcome.gate_score;
  record.link_score = selection.primary_score;
  record.selection_reason = selection.reason;
  try {
    services.index().upsert(record, services.embedder());
    outcome.record = services.index().get(meta.paper_id);
  } catch (const Error& e) {
    return skip(std::move(outcome), Disposition::backend_error, "recordindex", e.what());
  }
  outcome.disposition = Disposition::record_written;
  outcome.stage = "recordindex";
  return outcome;
}

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw InvalidArgument("cannot open audit log " + path.string());
}

nlohmann::ordered_json AuditLog::entry(const PipelineOutcome& o, Timestamp at) {
  nlohmann::ordered_json j;
  j["paper_id"] = o.paper_id;
  j["disposition"] = to_string(o.disposition);
  j["stage"] = o.stage;
  j["detail"] = o.detail;
  j["gate_score"] = o.gate_score;
  j["pdf_fallback"] = o.pdf_fallback;
  j["sentences"] = o.sentence_count;
  j["positive_sentences"] = o.positive_sentences;
  j["parse_source"] = o.parse_source ? nlohmann::ordered_json(docparse::to_string(*o.parse_source))
                                     : nlohmann::ordered_json(nullptr);
  j["at"] = format_timestamp(at);
  return j;
}

void AuditLog::write(const PipelineOutcome& outcome, Timestamp at) {
  if (!enabled()) return;
  if (outcome.disposition == Disposition::record_written && !outcome.pdf_fallback) return;
  const std::string line = entry(outcome, at).dump();
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
}

}  // namespace dsd::service
