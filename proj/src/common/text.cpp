#include "dsd/common/text.hpp"

#include <algorithm>
#include <array>

#include "dsd/simd/kernels.hpp"

namespace dsd::text {

namespace {

constexpr std::array<std::string_view, 31> kAbbreviations = {
    "e.g.",  "i.e.",  "al.",  "etc.",  "fig.", "figs.",  "eq.",    "eqs.",  "cf.",   "vs.",  "no.",
    "nos.",  "sec.",  "tab.", "ref.",  "refs.", "approx.", "resp.", "dr.",   "mr.",   "mrs.", "ms.",
    "prof.", "st.",   "jr.",  "inc.",  "ltd.",  "vol.",   "pp.",    "ch.",   "appx."};

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool is_abbreviation(std::string_view token) {
  while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '[')) {
    token.remove_prefix(1);
  }
  if (token.size() < 2) return false;
  const std::string low = lower(token);
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), low) != kAbbreviations.end()) {
    return true;
  }
  // Capital initials such as "J." and dotted acronyms such as "u.s." where
  // every piece is one or two letters.
  std::size_t piece = 0;
  bool saw_alpha = false;
  for (char c : low) {
    if (c == '.') {
      if (piece == 0 || piece > 2) return false;
      piece = 0;
    } else if (c >= 'a' && c <= 'z') {
      ++piece;
      saw_alpha = true;
    } else {
      return false;
    }
  }
  if (low.size() == 2) return token[0] >= 'A' && token[0] <= 'Z';
  return saw_alpha && std::count(low.begin(), low.end(), '.') > 1;
}

std::size_t skip_blank_line(std::string_view text, std::size_t i) {
  // i points at '\n'; returns the index past a blank line, or npos.
  std::size_t j = i + 1;
  while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
  if (j < text.size() && text[j] == '\n') return j + 1;
  return std::string_view::npos;
}

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string lower(std::string_view s) { return simd::to_lower_ascii(s); }

bool contains_at_word_start(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  std::size_t pos = haystack.find(needle);
  while (pos != std::string_view::npos) {
    if (pos == 0 || !is_alnum(haystack[pos - 1])) return true;
    pos = haystack.find(needle, pos + 1);
  }
  return false;
}

std::size_t count_whitespace_tokens(std::string_view s) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : s) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<Span> sentence_spans(std::string_view text) {
  std::vector<Span> spans;
  std::size_t start = 0;

  auto emit = [&](std::size_t end) {
    std::size_t b = start;
    std::size_t e = end;
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    if (b < e) spans.push_back({b, e});
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      if (std::size_t past = skip_blank_line(text, i); past != std::string_view::npos) {
        emit(i);
        start = past;
        i = past;
        continue;
      }
      ++i;
      continue;
    }
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < text.size() && (is_closer(text[end]) || text[end] == '.' || text[end] == '!' ||
                                 text[end] == '?')) {
      ++end;
    }
    if (end < text.size() && !is_space(text[end])) {
      i = end;
      continue;
    }
    if (c == '.') {
      std::size_t tok_begin = i;
      while (tok_begin > start && !is_space(text[tok_begin - 1])) --tok_begin;
      if (is_abbreviation(text.substr(tok_begin, i + 1 - tok_begin))) {
        i = end;
        continue;
      }
    }
    std::size_t next = end;
    while (next < text.size() && is_space(text[next])) ++next;
    if (next < text.size() && text[next] >= 'a' && text[next] <= 'z') {
      i = end;
      continue;
    }
    emit(end);
    start = end;
    i = end;
  }
  emit(text.size());
  return spans;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const Span& s : sentence_spans(text)) {
    std::string sentence = normalize_whitespace(text.substr(s.begin, s.end - s.begin));
    if (!sentence.empty()) out.push_back(std::move(sentence));
  }
  return out;
}

}  // namespace dsd::text
