#include <json.hpp>
#include <spdlog/spdlog.h>

#include "dsd/linkextract/linkextract.hpp"

namespace dsd::linkextract {

HttpLinkVerifier::HttpLinkVerifier(net::HttpTransport& transport, std::string url, std::size_t max_in_flight)
    : transport_(transport), url_(std::move(url)), in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, max_in_flight))) {}

std::optional<std::string> HttpLinkVerifier::choose(std::span<const ScoredCandidate> candidates) {
  nlohmann::json request;
  request["candidates"] = nlohmann::json::array();
  for (const ScoredCandidate& c : candidates) {
    request["candidates"].push_back({{"url", c.candidate.url},
                                     {"anchor", c.candidate.anchor},
                                     {"context", c.candidate.context},
                                     {"score", c.score}});
  }

  net::HttpResponse response;
  in_flight_.acquire();
  try {
    response = transport_.post(url_, request.dump(), "application/json");
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();

  if (!response.ok()) {
    spdlog::warn("link verifier {}: {}", url_,
                 response.transport_ok() ? "HTTP " + std::to_string(response.status) : response.failure_detail);
    return std::nullopt;
  }
  const nlohmann::json reply = nlohmann::json::parse(response.body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("choice") || !reply["choice"].is_string()) {
    spdlog::warn("link verifier {}: malformed reply", url_);
    return std::nullopt;
  }
  std::string choice = reply["choice"].get<std::string>();
  if (choice == "uncertain") return std::nullopt;
  return choice;
}

}  // namespace dsd::linkextract
