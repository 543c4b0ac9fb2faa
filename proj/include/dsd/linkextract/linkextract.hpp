#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/common/errors.hpp"
#include "dsd/docparse/docparse.hpp"
#include "dsd/ingest/ingest.hpp"
#include "dsd/net/http.hpp"

namespace dsd::linkextract {

// ---- e-print source ---------------------------------------------------------

// path inside the archive -> file bytes, sorted by path
using FileMap = std::map<std::string, std::string>;

class SourceUnavailable : public Error {
 public:
  using Error::Error;
};

class ArchiveTooLarge : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kDefaultMaxDecompressedBytes = 200u << 20;

// Unpacks an e-print body: gzip'd tar, plain tar, a single gzip'd file (named
// main.tex) or a bare .tex. Only .tex/.bib/.bbl entries are kept.
// Throws ArchiveTooLarge past max_bytes of decompressed data, SourceUnavailable
// for bodies that are not a LaTeX source (e.g. a PDF).
FileMap unpack_source(std::string_view body, std::size_t max_bytes = kDefaultMaxDecompressedBytes);

// GET meta.source_url and unpack_source(). Throws SourceUnavailable on 4xx,
// transport failure, or a non-source body; ArchiveTooLarge as above.
FileMap fetch_source(const ingest::PaperMeta& meta, net::HttpTransport& transport,
                     std::size_t max_bytes = kDefaultMaxDecompressedBytes);

// ---- candidates -----------------------------------------------------------

struct UrlCandidate {
  std::string url;      // normalized
  std::string anchor;   // \href text, empty for \url and bare links
  std::string context;  // the link's sentence plus up to two sentences either side
  std::string source_file;
  std::size_t occurrence_index = 0;

  bool operator==(const UrlCandidate&) const = default;
};

// Scans LaTeX sources for \url{..}, \href{..}{..} and bare http(s) links.
// Comments are stripped first; each link gets its context from a de-macroed
// plain-text rendering of its file. Duplicates (by normalized URL) keep the
// occurrence with the longest context. occurrence_index numbers the results
// in order of first appearance (files visited in path order).
std::vector<UrlCandidate> extract_candidates(const FileMap& files);

// Plain-text rendering used for contexts, exposed for tests and debugging.
struct LatexLink {
  std::string raw_url;
  std::string anchor;
  std::size_t text_offset = 0;  // position in PlainText::text
  std::size_t line = 0;         // 1-based source line
};
struct PlainText {
  std::string text;
  std::vector<LatexLink> links;
};
PlainText render_latex(std::string_view source, std::string_view file_name = {});

// Removes unescaped % comments (to end of line); line structure is preserved.
std::string strip_latex_comments(std::string_view source);

// Fallback when no source is available: bare links in parsed PDF sentences,
// with the same two-sentence context rule. source_file is "pdf".
std::vector<UrlCandidate> extract_candidates_from_sentences(std::span<const docparse::Sentence> sentences);

// ---- scoring ------------------------------------------------------------------

enum class FeatureGroup { host_pos, host_neg, path_hint, file_ext, lexical_pos, lexical_neg, special, github };
std::string_view to_string(FeatureGroup group);

struct FeatureHit {
  std::string id;  // e.g. "host+:huggingface.co/datasets", "lex-:code"
  FeatureGroup group;
  int weight = 0;
  int count = 1;
  bool operator==(const FeatureHit&) const = default;
};

struct ScoredCandidate {
  UrlCandidate candidate;
  int score = 0;
  std::vector<FeatureHit> feature_hits;

  bool has_group(FeatureGroup g) const;
};

inline constexpr int kLexicalPositiveCap = 8;
inline constexpr int kLexicalNegativeCap = -6;

// Integer-weighted rule score. Every group is documented in
// README.md; lexical groups are clamped to [0, +8] and [-6, 0].
ScoredCandidate score_candidate(const UrlCandidate& candidate);

// Sum of weight * count over the hits with the lexical caps applied.
int recompute_score(std::span<const FeatureHit> hits);

// Predicates shared by scoring and selection.
bool is_dataset_first_host(std::string_view url);
bool is_direct_file_link(std::string_view url);

// ---- selection -----------------------------------------------------------------

struct SelectionThresholds {
  int tau_high = 22;
  int tau_mid = 16;
  int delta = 5;
  int top_k = 5;
  int tau_min = 15;

  // Throws InvalidArgument unless tau_high > tau_mid > tau_min > 0, delta > 0, top_k >= 1.
  void validate() const;
  bool operator==(const SelectionThresholds&) const = default;
};

enum class SelectionMode { rule_only, llm_only, hybrid };
std::string_view to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(std::string_view s);

enum class SelectionReason {
  single_candidate,
  high_confidence,
  margin,
  preferred_host,
  general_tiebreak,
  llm_choice,
  llm_fallback,
  rejected_below_min,
  no_candidates,
};
std::string_view to_string(SelectionReason reason);
SelectionReason selection_reason_from_string(std::string_view s);

struct SelectionResult {
  std::optional<std::string> primary_url;
  std::optional<int> primary_score;
  SelectionMode mode = SelectionMode::rule_only;
  SelectionReason reason = SelectionReason::no_candidates;
  std::size_t considered = 0;
};

// Score descending, then shorter URL, then lexicographic URL.
bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b);
void rank_candidates(std::vector<ScoredCandidate>& scored);

// External link verifier. Returns the chosen URL, or nullopt for "uncertain".
// Network problems count as uncertain and must not throw.
class LinkVerifier {
 public:
  virtual ~LinkVerifier() = default;
  virtual std::optional<std::string> choose(std::span<const ScoredCandidate> candidates) = 0;
};

// Wire contract: POST application/json
//   {"candidates": [{"url": "...", "anchor": "...", "context": "...", "score": 12}, ...]}
// reply {"choice": "<one of the urls>"} or {"choice": "uncertain"}.
class HttpLinkVerifier final : public LinkVerifier {
 public:
  HttpLinkVerifier(net::HttpTransport& transport, std::string url, std::size_t max_in_flight = 4);
  std::optional<std::string> choose(std::span<const ScoredCandidate> candidates) override;

 private:
  net::HttpTransport& transport_;
  std::string url_;
  std::counting_semaphore<> in_flight_;
};

// Rule-only: the ranked rules (single candidate, high confidence, margin,
// preferred host in the top K, general tie-break, rejection below tau_min).
// llm_only: verifier over all candidates. hybrid: verifier over candidates
// scoring > 0. Both verifier modes fall back to the rule-only decision on the
// candidates the verifier saw when it is absent or uncertain.
SelectionResult select_primary(std::vector<ScoredCandidate> scored, const SelectionThresholds& thresholds,
                               SelectionMode mode, LinkVerifier* verifier = nullptr);

}  // namespace dsd::linkextract
