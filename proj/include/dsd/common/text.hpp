#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dsd::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

std::string_view trim(std::string_view s);

// Collapses every whitespace run to one space and strips both ends. This is
// the canonical text form shared by ingest, docparse and the scorers.
std::string normalize_whitespace(std::string_view s);

std::string lower(std::string_view s);

// True if `needle` occurs in `haystack` at a position not preceded by an
// ASCII letter or digit. Both arguments are expected to be lower-cased.
bool contains_at_word_start(std::string_view haystack, std::string_view needle);

std::size_t count_whitespace_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

// Rule-based sentence boundaries: terminal . ! ? followed by whitespace or
// end of text, with guards for common abbreviations, initials and
// lower-case continuations. A blank line always ends a sentence.
// Spans cover non-whitespace text only and are in document order.
std::vector<Span> sentence_spans(std::string_view text);

// sentence_spans() with each span whitespace-normalized; empty ones dropped.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace dsd::text
