#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include "dsd/common/errors.hpp"
#include "dsd/ingest/ingest.hpp"
#include "dsd/net/http.hpp"

namespace dsd::gate {

// A text -> probability scorer. Implementations must be safe to call
// concurrently and return the same score for the same text.
class ScoreBackend {
 public:
  virtual ~ScoreBackend() = default;
  virtual std::string name() const = 0;
  // Throws BackendUnavailable when the score cannot be produced right now.
  virtual double score(std::string_view text) const = 0;
};

class BackendUnavailable : public RetryableError {
 public:
  using RetryableError::RetryableError;
};

struct GateDecision {
  std::string paper_id;
  double score = 0.0;
  bool positive = false;
  std::string backend_name;
  std::chrono::nanoseconds latency{0};
};

// Title, one space, abstract.
std::string gate_input(const ingest::PaperMeta& meta);

// positive is score > threshold (strict). Throws InvalidArgument if the
// threshold or the backend's score falls outside [0, 1].
GateDecision classify(const ingest::PaperMeta& meta, const ScoreBackend& backend, double threshold = 0.5);

// Deterministic cue-phrase scorer. Each cue phrase found (case-insensitive, at
// a word start) adds its weight once; the weight sum w maps to w / (w + 4).
// The table is documented in README.md.
double heuristic_gate_score(std::string_view text);

class HeuristicGateBackend final : public ScoreBackend {
 public:
  std::string name() const override { return "heuristic-gate-v1"; }
  double score(std::string_view text) const override { return heuristic_gate_score(text); }
};

// POSTs the UTF-8 text as text/plain and expects a body holding one decimal
// probability. Used for both the gate and the sentence classifier.
class RemoteScoreBackend final : public ScoreBackend {
 public:
  RemoteScoreBackend(net::HttpTransport& transport, std::string url, std::string name);
  std::string name() const override { return name_; }
  double score(std::string_view text) const override;

 private:
  net::HttpTransport& transport_;
  std::string url_;
  std::string name_;
};

// Parses a wire probability ("0.73\n"); throws dsd::Error if not a number in [0, 1].
double parse_probability(std::string_view body);

}  // namespace dsd::gate
