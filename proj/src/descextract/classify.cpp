#include <algorithm>
#include <array>
#include <regex>

#include "dsd/common/text.hpp"
#include "dsd/descextract/descextract.hpp"
#include "dsd/gate/gate.hpp"

namespace dsd::descextract {

namespace {

struct Cue {
  std::string_view phrase;
  int weight;
};

// Keep in sync with README.md.
constexpr std::array<Cue, 10> kSentenceCues = {{
    {"our dataset contains", 4},
    {"the dataset contains", 3},
    {"we annotate", 3},
    {"we collect", 3},
    {"our dataset", 2},
    {"our corpus", 2},
    {"we release", 2},
    {"split into", 2},
    {"is released", 2},
    {"annotated", 1},
}};

const std::regex& consists_of_count() {
  static const std::regex re(R"((^|[^a-z0-9])consists of [0-9])");
  return re;
}

const std::regex& count_with_unit() {
  static const std::regex re(
      R"((^|[^a-z0-9.,])[0-9][0-9,.]*(k|m)?\s+([a-z-]+\s+)?(examples|samples|images|sentences|documents|instances|pairs|questions|dialogues|videos|hours|annotations|articles|papers|queries|tables|utterances|records)([^a-z]|$))");
  return re;
}

constexpr double kSaturation = 4.0;

std::string join_range(std::span<const Sentence> sentences, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += sentences[i].text;
  }
  return out;
}

}  // namespace

double heuristic_sentence_score(std::string_view sentence) {
  const std::string s = text::lower(text::normalize_whitespace(sentence));
  if (s.empty()) return 0.0;
  int weight = 0;
  for (const Cue& cue : kSentenceCues) {
    if (text::contains_at_word_start(s, cue.phrase)) weight += cue.weight;
  }
  if (std::regex_search(s, consists_of_count())) weight += 3;
  if (std::regex_search(s, count_with_unit())) weight += 2;
  return weight / (weight + kSaturation);
}

RemoteSentenceBackend::RemoteSentenceBackend(net::HttpTransport& transport, std::string url)
    : transport_(transport), url_(std::move(url)) {}

std::string RemoteSentenceBackend::wire_text(const SentenceContext& context) {
  return context.left_context + " [SEP] " + std::string(context.target) + " [SEP] " + context.right_context;
}

double RemoteSentenceBackend::score(const SentenceContext& context) const {
  const net::HttpResponse response = transport_.post(url_, wire_text(context), "text/plain; charset=utf-8");
  if (!response.ok()) {
    throw BackendUnavailable("sentence backend: " + (response.transport_ok() ? "HTTP " + std::to_string(response.status)
                                                                              : response.failure_detail),
                             url_);
  }
  try {
    return gate::parse_probability(response.body);
  } catch (const Error& e) {
    throw BackendUnavailable(std::string("sentence backend: ") + e.what(), url_);
  }
}

std::vector<SentenceVerdict> classify_sentences(const docparse::ParsedDocument& doc, const SentenceBackend& backend,
                                                const ClassifyOptions& options) {
  if (!(options.threshold >= 0.0 && options.threshold <= 1.0)) {
    throw InvalidArgument("sentence threshold outside [0, 1]");
  }
  const std::span<const Sentence> sentences(doc.sentences);
  std::vector<SentenceVerdict> verdicts;
  verdicts.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const WindowSample w = build_window(sentences, i, options.token_budget, options.seed_radius);
    SentenceContext ctx{sentences[i].text, join_range(sentences, w.left, i), join_range(sentences, i + 1, w.right + 1)};
    const double score = backend.score(ctx);
    if (!(score >= 0.0 && score <= 1.0)) {
      throw InvalidArgument("backend " + backend.name() + " returned a score outside [0, 1]");
    }
    verdicts.push_back({i, score, score > options.threshold});
  }
  return verdicts;
}

DescriptionResult aggregate_description(const docparse::ParsedDocument& doc,
                                        std::span<const SentenceVerdict> verdicts) {
  const std::size_t n = doc.sentences.size();
  std::vector<bool> seen(n, false);
  DescriptionResult result;
  result.paper_id = doc.paper_id;
  for (const SentenceVerdict& v : verdicts) {
    if (v.index >= n) throw InvalidArgument("verdict index out of range");
    seen[v.index] = true;
    if (v.positive) result.positive_indices.push_back(v.index);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw InvalidArgument("verdicts do not cover every sentence");
  }
  std::sort(result.positive_indices.begin(), result.positive_indices.end());
  result.positive_indices.erase(std::unique(result.positive_indices.begin(), result.positive_indices.end()),
                                result.positive_indices.end());
  if (result.positive_indices.empty()) {
    result.reclassified_negative = true;
    return result;
  }
  std::string description;
  for (std::size_t idx : result.positive_indices) {
    if (!description.empty()) description.push_back(' ');
    description += doc.sentences[idx].text;
  }
  result.description = std::move(description);
  return result;
}

}  // namespace dsd::descextract
