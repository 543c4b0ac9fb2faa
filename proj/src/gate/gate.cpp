#include "dsd/gate/gate.hpp"

#include <array>
#include <cstdlib>

#include "dsd/common/text.hpp"

namespace dsd::gate {

namespace {

struct Cue {
  std::string_view phrase;
  int weight;
};

// Keep in sync with README.md.
constexpr std::array<Cue, 12> kGateCues = {{
    {"new dataset", 3},
    {"new corpus", 3},
    {"we release", 2},
    {"we introduce a benchmark", 2},
    {"new benchmark", 2},
    {"we collect", 2},
    {"publicly available", 1},
    {"we construct", 1},
    {"annotated", 1},
    {"benchmark", 1},
    {"dataset", 1},
    {"corpus", 1},
}};

constexpr double kSaturation = 4.0;

}  // namespace

std::string gate_input(const ingest::PaperMeta& meta) { return meta.title + " " + meta.abstract; }

double heuristic_gate_score(std::string_view input) {
  const std::string normalized = text::lower(text::normalize_whitespace(input));
  if (normalized.empty()) return 0.0;
  int weight = 0;
  for (const Cue& cue : kGateCues) {
    if (text::contains_at_word_start(normalized, cue.phrase)) weight += cue.weight;
  }
  return weight / (weight + kSaturation);
}

GateDecision classify(const ingest::PaperMeta& meta, const ScoreBackend& backend, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("gate threshold outside [0, 1]");
  const std::string input = gate_input(meta);
  const auto begin = std::chrono::steady_clock::now();
  const double score = backend.score(input);
  const auto latency = std::chrono::steady_clock::now() - begin;
  if (!(score >= 0.0 && score <= 1.0)) {
    throw InvalidArgument("backend " + backend.name() + " returned a score outside [0, 1]");
  }
  return GateDecision{meta.paper_id, score, score > threshold, backend.name(),
                      std::chrono::duration_cast<std::chrono::nanoseconds>(latency)};
}

double parse_probability(std::string_view body) {
  const std::string s(text::trim(body));
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !(value >= 0.0 && value <= 1.0)) {
    throw Error("expected a probability in [0, 1], got: " + s.substr(0, 64));
  }
  return value;
}

RemoteScoreBackend::RemoteScoreBackend(net::HttpTransport& transport, std::string url, std::string name)
    : transport_(transport), url_(std::move(url)), name_(std::move(name)) {}

double RemoteScoreBackend::score(std::string_view text) const {
  const net::HttpResponse response = transport_.post(url_, std::string(text), "text/plain; charset=utf-8");
  if (!response.transport_ok()) throw BackendUnavailable(name_ + ": " + response.failure_detail, url_);
  if (!response.ok()) {
    throw BackendUnavailable(name_ + ": HTTP " + std::to_string(response.status), url_);
  }
  try {
    return parse_probability(response.body);
  } catch (const Error& e) {
    throw BackendUnavailable(name_ + ": " + e.what(), url_);
  }
}

}  // namespace dsd::gate
