#include <spdlog/spdlog.h>

#include <thread>

#include "dsd/common/text.hpp"
#include "dsd/docparse/docparse.hpp"
#include "dsd/docparse/pdf_text.hpp"

namespace dsd::docparse {

DownloadLimiter::DownloadLimiter(std::size_t max_concurrent)
    : capacity_(max_concurrent == 0 ? 1 : max_concurrent),
      slots_(static_cast<std::ptrdiff_t>(capacity_)) {}

FetchedPdf fetch_pdf(const ingest::PaperMeta& meta, net::HttpTransport& transport, const RetryPolicy& policy,
                     DownloadLimiter* limiter) {
  if (meta.pdf_url.empty()) throw InvalidArgument("paper " + meta.paper_id + " has no pdf_url");
  const int max_attempts = 1 + std::max(policy.retry_cap, 0);
  std::string last_problem;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    net::HttpResponse response;
    if (limiter != nullptr) {
      auto permit = limiter->acquire();
      response = transport.get(meta.pdf_url);
    } else {
      response = transport.get(meta.pdf_url);
    }

    if (response.transport_ok()) {
      if (response.status == 404 || response.status == 410) {
        spdlog::info("{}: PDF not found (HTTP {}), skipping", meta.paper_id, response.status);
        throw PermanentSkip("PDF not found (HTTP " + std::to_string(response.status) + ") at " + meta.pdf_url);
      }
      if (response.status == 200) {
        const std::string type = text::lower(response.content_type);
        const bool pdf_type = type.find("application/pdf") != std::string::npos;
        if (!pdf_type && !(type.empty() && looks_like_pdf(response.body))) {
          throw PermanentSkip("non-PDF content type '" + response.content_type + "' at " + meta.pdf_url);
        }
        return FetchedPdf{std::move(response.body), attempt};
      }
      if (response.status < 500 && response.status != 429) {
        throw PermanentSkip("PDF download failed with HTTP " + std::to_string(response.status));
      }
      last_problem = "HTTP " + std::to_string(response.status);
    } else {
      last_problem = response.failure_detail;
    }

    if (attempt == max_attempts) break;
    const auto delay = policy.base_backoff * (1LL << (attempt - 1));
    spdlog::debug("{}: PDF attempt {} failed ({}), retrying in {} ms", meta.paper_id, attempt, last_problem,
                  delay.count());
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
  throw RetryableError("PDF download gave up after " + std::to_string(max_attempts) + " attempts: " + last_problem,
                       meta.pdf_url);
}

}  // namespace dsd::docparse
