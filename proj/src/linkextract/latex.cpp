#include <algorithm>
#include <cctype>
#include <spdlog/spdlog.h>
#include <unordered_map>

#include "dsd/common/text.hpp"
#include "dsd/linkextract/linkextract.hpp"
#include "dsd/linkextract/url.hpp"

namespace dsd::linkextract {

namespace {

constexpr std::size_t kContextRadius = 2;

// Commands whose first mandatory argument is not running text.
bool drops_argument(std::string_view name) {
  static constexpr std::string_view kNames[] = {
      "begin", "end",       "cite",          "citep",        "citet",    "citealp",       "citeauthor",
      "ref",   "eqref",     "autoref",       "cref",         "Cref",     "label",         "includegraphics",
      "input", "include",   "usepackage",    "documentclass", "bibliography", "bibliographystyle",
      "vspace", "hspace",   "pagestyle",     "thispagestyle", "setlength", "newcommand",   "renewcommand",
      "definecolor", "color", "hypersetup",
  };
  return std::find(std::begin(kNames), std::end(kNames), name) != std::end(kNames);
}

std::size_t comment_start(std::string_view line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '%') continue;
    std::size_t slashes = 0;
    while (slashes < i && line[i - 1 - slashes] == '\\') ++slashes;
    if (slashes % 2 == 0) return i;
  }
  return std::string_view::npos;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return text::is_space(c); });
}

bool url_stop(char c) {
  return text::is_space(c) || c == '{' || c == '}' || c == '\\' || c == '<' || c == '>' || c == '"';
}

// Returns [begin, end) of the URL and its cleaned text, or begin == npos.
struct BareUrl {
  std::size_t begin = std::string_view::npos;
  std::size_t end = 0;
  std::string url;
};

BareUrl bare_url_at(std::string_view s, std::size_t pos) {
  BareUrl found;
  const std::string_view rest = s.substr(pos);
  if (!(rest.starts_with("http://") || rest.starts_with("https://"))) return found;
  if (pos > 0 && text::is_alnum(s[pos - 1])) return found;
  std::size_t end = pos;
  while (end < s.size() && !url_stop(s[end])) ++end;
  std::string url(s.substr(pos, end - pos));
  while (!url.empty() && (url.back() == '.' || url.back() == ',' || url.back() == ';' || url.back() == ')')) {
    url.pop_back();
  }
  found.begin = pos;
  found.end = end;
  found.url = std::move(url);
  return found;
}

std::string unescape_url(std::string_view raw) {
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 1 < raw.size() && std::string_view("_#%&~$").find(raw[i + 1]) != std::string_view::npos) {
      continue;
    }
    if (text::is_space(raw[i])) continue;
    out.push_back(raw[i]);
  }
  return out;
}

class Renderer {
 public:
  Renderer(std::string_view file_name) : file_(file_name), bib_(text::lower(file_name).ends_with(".bib")) {}

  PlainText render(std::string_view source) {
    build_source(source);
    run(0, src_.size());
    return std::move(out_);
  }

 private:
  // Comment-only lines vanish entirely so they cannot fake a paragraph break.
  void build_source(std::string_view source) {
    std::size_t line_no = 1;
    std::size_t pos = 0;
    while (pos <= source.size()) {
      const std::size_t nl = source.find('\n', pos);
      const std::size_t end = nl == std::string_view::npos ? source.size() : nl;
      const std::string_view line = source.substr(pos, end - pos);
      const std::size_t c = comment_start(line);
      const std::string_view kept = line.substr(0, c);
      if (!(c != std::string_view::npos && is_blank(kept))) {
        line_starts_.push_back({src_.size(), line_no});
        src_.append(kept);
        src_.push_back('\n');
      }
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
      ++line_no;
    }
  }

  std::size_t line_at(std::size_t offset) const {
    auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset,
                               [](std::size_t o, const std::pair<std::size_t, std::size_t>& e) { return o < e.first; });
    return it == line_starts_.begin() ? 1 : std::prev(it)->second;
  }

  // Index of the '}' closing the group opened at `open`, or npos.
  std::size_t group_end(std::size_t open, std::size_t limit) const {
    int depth = 0;
    for (std::size_t i = open; i < limit; ++i) {
      const char c = src_[i];
      if (c == '\\') {
        ++i;
        continue;
      }
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) return i;
    }
    return std::string_view::npos;
  }

  std::size_t skip_spaces(std::size_t pos, std::size_t limit) const {
    while (pos < limit && (src_[pos] == ' ' || src_[pos] == '\t')) ++pos;
    return pos;
  }

  std::size_t skip_optional(std::size_t pos, std::size_t limit) const {
    const std::size_t p = skip_spaces(pos, limit);
    if (p < limit && src_[p] == '[') {
      const std::size_t close = src_.find(']', p);
      if (close != std::string::npos && close < limit) return close + 1;
    }
    return pos;
  }

  void warn_unbalanced(std::string_view command, std::size_t offset) const {
    spdlog::warn("{}:{}: unbalanced braces in \\{}, occurrence skipped", file_.empty() ? "<input>" : file_,
                 line_at(offset), command);
  }

  void emit(char c) { out_.text.push_back(c); }

  void newline(std::size_t& pos, std::size_t limit) {
    std::size_t p = pos + 1;
    bool blank_line = false;
    while (p < limit && text::is_space(src_[p])) {
      if (src_[p] == '\n') blank_line = true;
      ++p;
    }
    if (blank_line) {
      out_.text += "\n\n";
      pos = p;
    } else {
      emit(' ');
      pos = pos + 1;
    }
  }

  void run(std::size_t begin, std::size_t limit) {
    std::size_t pos = begin;
    while (pos < limit) {
      const char c = src_[pos];
      if (c == '\\') {
        pos = command(pos, limit);
      } else if (c == '\n') {
        newline(pos, limit);
      } else if (c == '{' || c == '}' || c == '$') {
        ++pos;
      } else if (c == '~') {
        emit(' ');
        ++pos;
      } else if (c == '@' && bib_) {
        out_.text += "\n\n";
        ++pos;
      } else if (c == 'h') {
        BareUrl bare = bare_url_at(std::string_view(src_).substr(0, limit), pos);
        if (bare.begin == std::string_view::npos) {
          emit(c);
          ++pos;
          continue;
        }
        out_.links.push_back({bare.url, "", out_.text.size(), line_at(pos)});
        // keep what trimming removed, e.g. the sentence-final period
        out_.text.append(src_, pos + bare.url.size(), bare.end - pos - bare.url.size());
        pos = bare.end;
      } else {
        emit(c);
        ++pos;
      }
    }
  }

  // Past the first word of an unterminated {argument}, so the bare-link scan
  // does not pick the skipped URL up again.
  std::size_t skip_broken_argument(std::size_t open, std::size_t limit, std::size_t fallback) const {
    if (open >= limit || src_[open] != '{') return fallback;
    std::size_t p = open + 1;
    while (p < limit && !text::is_space(src_[p]) && src_[p] != '{' && src_[p] != '}') ++p;
    return p;
  }

  // pos at a backslash; returns the position after the command.
  std::size_t command(std::size_t pos, std::size_t limit) {
    if (pos + 1 >= limit) return limit;
    const char next = src_[pos + 1];
    if (!std::isalpha(static_cast<unsigned char>(next))) {
      if (std::string_view("%&#_${}").find(next) != std::string_view::npos) {
        emit(next);
      } else if (next == '\\' || next == ' ' || next == ',' || next == ';' || next == '!' || next == '\n') {
        emit(' ');
      }
      return pos + 2;
    }
    std::size_t name_end = pos + 1;
    while (name_end < limit && std::isalpha(static_cast<unsigned char>(src_[name_end]))) ++name_end;
    const std::string name = src_.substr(pos + 1, name_end - pos - 1);

    if (name == "url") {
      const std::size_t open = skip_spaces(name_end, limit);
      const std::size_t close = open < limit && src_[open] == '{' ? group_end(open, limit) : std::string_view::npos;
      if (close == std::string_view::npos) {
        warn_unbalanced(name, pos);
        return skip_broken_argument(open, limit, name_end);
      }
      out_.links.push_back({unescape_url(std::string_view(src_).substr(open + 1, close - open - 1)), "",
                            out_.text.size(), line_at(pos)});
      return close + 1;
    }
    if (name == "href") {
      const std::size_t open1 = skip_spaces(name_end, limit);
      const std::size_t close1 =
          open1 < limit && src_[open1] == '{' ? group_end(open1, limit) : std::string_view::npos;
      const std::size_t open2 = close1 == std::string_view::npos ? limit : skip_spaces(close1 + 1, limit);
      const std::size_t close2 =
          open2 < limit && src_[open2] == '{' ? group_end(open2, limit) : std::string_view::npos;
      if (close1 == std::string_view::npos || close2 == std::string_view::npos) {
        warn_unbalanced(name, pos);
        return skip_broken_argument(open1, limit, name_end);
      }
      const std::size_t link_slot = out_.links.size();
      out_.links.push_back({unescape_url(std::string_view(src_).substr(open1 + 1, close1 - open1 - 1)), "",
                            out_.text.size(), line_at(pos)});
      const std::size_t anchor_begin = out_.text.size();
      run(open2 + 1, close2);
      out_.links[link_slot].anchor = text::normalize_whitespace(std::string_view(out_.text).substr(anchor_begin));
      return close2 + 1;
    }
    if (name == "bibitem") {
      out_.text += "\n\n";
      std::size_t p = skip_optional(name_end, limit);
      p = skip_spaces(p, limit);
      if (p < limit && src_[p] == '{') {
        const std::size_t close = group_end(p, limit);
        if (close != std::string_view::npos) return close + 1;
      }
      return p;
    }
    if (name == "par") {
      out_.text += "\n\n";
      return name_end;
    }
    if (name == "item") {
      emit(' ');
      return skip_optional(name_end, limit);
    }
    if (drops_argument(name)) {
      std::size_t p = skip_optional(name_end, limit);
      p = skip_spaces(p, limit);
      if (p < limit && src_[p] == '{') {
        const std::size_t close = group_end(p, limit);
        if (close != std::string_view::npos) return close + 1;
      }
      return p;
    }
    return skip_optional(name_end, limit);
  }

  std::string file_;
  bool bib_;
  std::string src_;
  std::vector<std::pair<std::size_t, std::size_t>> line_starts_;  // (offset in src_, source line)
  PlainText out_;
};

// Sentence index for a text offset. Offsets in the gap between sentences
// belong to the following sentence unless a paragraph break intervenes.
std::size_t sentence_for(std::string_view text, const std::vector<text::Span>& spans, std::size_t offset) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (offset < spans[i].begin) {
      const bool break_ahead = text.substr(offset, spans[i].begin - offset).find("\n\n") != std::string_view::npos;
      return break_ahead && i > 0 ? i - 1 : i;
    }
    if (offset < spans[i].end) return i;
  }
  return spans.size() - 1;
}

std::string context_for(std::string_view text, const std::vector<text::Span>& spans, std::size_t index,
                        bool clip_to_paragraph) {
  std::size_t lo = index >= kContextRadius ? index - kContextRadius : 0;
  std::size_t hi = std::min(spans.size() - 1, index + kContextRadius);
  if (clip_to_paragraph) {
    auto gap_breaks = [&](std::size_t a, std::size_t b) {
      return text.substr(spans[a].end, spans[b].begin - spans[a].end).find("\n\n") != std::string_view::npos;
    };
    while (lo < index && gap_breaks(lo, lo + 1)) ++lo;
    for (std::size_t i = index; i < hi; ++i) {
      if (gap_breaks(i, i + 1)) {
        hi = i;
        break;
      }
    }
    for (std::size_t i = lo; i < index; ++i) {
      if (gap_breaks(i, i + 1)) lo = i + 1;
    }
  }
  return text::normalize_whitespace(text.substr(spans[lo].begin, spans[hi].end - spans[lo].begin));
}

// Keeps the first-seen order of URLs; a later duplicate replaces the stored
// occurrence only when its context is strictly longer.
class Deduper {
 public:
  void add(UrlCandidate candidate) {
    auto [it, inserted] = slot_.try_emplace(candidate.url, out_.size());
    if (inserted) {
      out_.push_back(std::move(candidate));
    } else if (candidate.context.size() > out_[it->second].context.size()) {
      out_[it->second] = std::move(candidate);
    }
  }
  std::vector<UrlCandidate> take() {
    for (std::size_t i = 0; i < out_.size(); ++i) out_[i].occurrence_index = i;
    return std::move(out_);
  }

 private:
  std::unordered_map<std::string, std::size_t> slot_;
  std::vector<UrlCandidate> out_;
};

}  // namespace

std::string strip_latex_comments(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  std::size_t pos = 0;
  while (pos <= source.size()) {
    const std::size_t nl = source.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? source.size() : nl;
    const std::string_view line = source.substr(pos, end - pos);
    out.append(line.substr(0, comment_start(line)));
    if (nl == std::string_view::npos) break;
    out.push_back('\n');
    pos = nl + 1;
  }
  return out;
}

PlainText render_latex(std::string_view source, std::string_view file_name) {
  return Renderer(file_name).render(source);
}

std::vector<UrlCandidate> extract_candidates(const FileMap& files) {
  Deduper dedup;
  for (const auto& [path, content] : files) {
    const PlainText plain = render_latex(content, path);
    if (plain.links.empty()) continue;
    const std::vector<text::Span> spans = text::sentence_spans(plain.text);
    const std::string lower_path = text::lower(path);
    const bool clip = lower_path.ends_with(".bib") || lower_path.ends_with(".bbl");
    for (const LatexLink& link : plain.links) {
      auto url = normalize_url(link.raw_url);
      if (!url) {
        spdlog::debug("{}:{}: ignoring non-http(s) link '{}'", path, link.line, link.raw_url);
        continue;
      }
      UrlCandidate c;
      c.url = std::move(*url);
      c.anchor = link.anchor;
      c.source_file = path;
      if (!spans.empty()) {
        c.context = context_for(plain.text, spans, sentence_for(plain.text, spans, link.text_offset), clip);
      }
      dedup.add(std::move(c));
    }
  }
  return dedup.take();
}

std::vector<UrlCandidate> extract_candidates_from_sentences(std::span<const docparse::Sentence> sentences) {
  // Each sentence with its URLs cut out, and the URLs it held.
  std::vector<std::string> stripped(sentences.size());
  std::vector<std::vector<std::string>> urls(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::string_view s = sentences[i].text;
    std::size_t pos = 0;
    while (pos < s.size()) {
      BareUrl bare = s[pos] == 'h' ? bare_url_at(s, pos) : BareUrl{};
      if (bare.begin == std::string_view::npos) {
        stripped[i].push_back(s[pos++]);
        continue;
      }
      urls[i].push_back(bare.url);
      stripped[i].append(s.substr(pos + bare.url.size(), bare.end - pos - bare.url.size()));
      pos = bare.end;
    }
  }

  Deduper dedup;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (urls[i].empty()) continue;
    const std::size_t lo = i >= kContextRadius ? i - kContextRadius : 0;
    const std::size_t hi = std::min(sentences.size() - 1, i + kContextRadius);
    std::string joined;
    for (std::size_t j = lo; j <= hi; ++j) {
      joined += stripped[j];
      joined.push_back(' ');
    }
    const std::string context = text::normalize_whitespace(joined);
    for (const std::string& raw : urls[i]) {
      auto url = normalize_url(raw);
      if (!url) continue;
      dedup.add({std::move(*url), "", context, "pdf", 0});
    }
  }
  return dedup.take();
}

}  // namespace dsd::linkextract
