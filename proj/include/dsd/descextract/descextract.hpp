#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/common/errors.hpp"
#include "dsd/docparse/docparse.hpp"
#include "dsd/net/http.hpp"

namespace dsd::descextract {

using docparse::Sentence;

// A contiguous run of sentences [left, right] around target_index.
struct WindowSample {
  std::size_t target_index = 0;
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t token_total = 0;
  bool over_budget = false;   // the target sentence alone exceeds the budget
  std::optional<bool> label;  // target's label, set when generating training windows

  std::size_t size() const { return right - left + 1; }
  bool contains(std::size_t index) const { return left <= index && index <= right; }
  bool operator==(const WindowSample&) const = default;
};

inline constexpr std::size_t kDefaultTokenBudget = 512;
inline constexpr std::size_t kDefaultSeedRadius = 2;

// Seeds [target - seed_radius, target + seed_radius] clipped to the document.
// An over-budget seed shrinks by dropping the boundary sentence farther from
// the target (the right one on ties). A fitting seed grows one sentence at a
// time, left then right, skipping a side at the document bound, and stops at
// the first sentence that would overflow the budget.
// Throws InvalidArgument if target_index is out of range.
WindowSample build_window(std::span<const Sentence> sentences, std::size_t target_index,
                          std::size_t token_budget = kDefaultTokenBudget,
                          std::size_t seed_radius = kDefaultSeedRadius);

// Class-conditional sliding windows for training export. Starting at target 0,
// each window W advances the target by max(1, |W| / 3) if any sentence in W
// is labelled positive, otherwise by max(1, |W| / 2). Positives left outside
// every window get an extra window centred on them, appended in index order.
std::vector<WindowSample> generate_training_windows(std::span<const Sentence> sentences,
                                                    std::span<const bool> labels,
                                                    std::size_t token_budget = kDefaultTokenBudget,
                                                    std::size_t seed_radius = kDefaultSeedRadius);

// One JSON object per line: paper_id, target_index, left, right, label.
void write_windows_jsonl(std::ostream& out, std::string_view paper_id, std::span<const WindowSample> windows);

// ---- sentence classification ----------------------------------------------

// What a sentence scorer sees: the target sentence and its window context.
struct SentenceContext {
  std::string_view target;
  std::string left_context;   // sentences [left, target) joined by spaces
  std::string right_context;  // sentences (target, right] joined by spaces
};

class SentenceBackend {
 public:
  virtual ~SentenceBackend() = default;
  virtual std::string name() const = 0;
  // Probability that the target sentence describes a dataset. Must be safe to
  // call concurrently. Throws BackendUnavailable (retryable) on failure.
  virtual double score(const SentenceContext& context) const = 0;
};

class BackendUnavailable : public RetryableError {
 public:
  using RetryableError::RetryableError;
};

// Cue-phrase scorer over the target sentence only; weights documented in
// README.md. Weight sum w maps to w / (w + 4).
double heuristic_sentence_score(std::string_view sentence);

class HeuristicSentenceBackend final : public SentenceBackend {
 public:
  std::string name() const override { return "heuristic-desc-v1"; }
  double score(const SentenceContext& context) const override { return heuristic_sentence_score(context.target); }
};

// Same wire contract as the remote gate: POST text/plain, body is one
// probability. The text is "<left> [SEP] <target> [SEP] <right>".
class RemoteSentenceBackend final : public SentenceBackend {
 public:
  RemoteSentenceBackend(net::HttpTransport& transport, std::string url);
  std::string name() const override { return "remote-desc"; }
  double score(const SentenceContext& context) const override;
  static std::string wire_text(const SentenceContext& context);

 private:
  net::HttpTransport& transport_;
  std::string url_;
};

struct SentenceVerdict {
  std::size_t index = 0;
  double score = 0.0;
  bool positive = false;
  bool operator==(const SentenceVerdict&) const = default;
};

struct ClassifyOptions {
  double threshold = 0.5;
  std::size_t token_budget = kDefaultTokenBudget;
  std::size_t seed_radius = kDefaultSeedRadius;
};

// Scores every sentence inside its build_window context; verdicts in index
// order, positive is score > threshold (strict).
std::vector<SentenceVerdict> classify_sentences(const docparse::ParsedDocument& doc, const SentenceBackend& backend,
                                                const ClassifyOptions& options = {});

struct DescriptionResult {
  std::string paper_id;
  std::optional<std::string> description;
  std::vector<std::size_t> positive_indices;  // ascending
  bool reclassified_negative = false;
};

// Joins positive sentences in index order with single spaces. No positives:
// reclassified_negative with no description.
// Throws InvalidArgument if the verdicts do not cover every sentence index.
DescriptionResult aggregate_description(const docparse::ParsedDocument& doc,
                                        std::span<const SentenceVerdict> verdicts);

}  // namespace dsd::descextract
