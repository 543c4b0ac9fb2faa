#include <algorithm>
#include <array>

#include "dsd/common/text.hpp"
#include "dsd/linkextract/linkextract.hpp"
#include "dsd/linkextract/url.hpp"

namespace dsd::linkextract {

namespace {

struct Weighted {
  std::string_view key;
  int weight;
};

// host+path substring matches
constexpr std::array<Weighted, 3> kHostPosContains = {{
    {"huggingface.co/datasets", 10},
    {"zenodo.org/record", 9},
    {"kaggle.com/datasets", 8},
}};
// host is the domain or a subdomain of it
constexpr std::array<Weighted, 3> kHostPosDomains = {{
    {"figshare.com", 8},
    {"dataverse.org", 7},
    {"osf.io", 7},
}};
constexpr std::array<Weighted, 6> kHostNegDomains = {{
    {"arxiv.org", -10},
    {"doi.org", -10},
    {"acm.org", -9},
    {"ieeexplore.ieee.org", -9},
    {"researchgate.net", -6},
    {"medium.com", -6},
}};
constexpr int kScholarWeight = -8;  // scholar.google.<any tld>

// Path hints match whole segments: /datasets never fires /data.
struct PathHint {
  std::string_view id;
  std::array<std::string_view, 2> segments;
  int weight;
};
constexpr std::array<PathHint, 6> kPathHints = {{
    {"/dataset", {"dataset", "datasets"}, 3},
    {"/data", {"data", ""}, 2},
    {"/download", {"download", ""}, 2},
    {"/files", {"files", ""}, 2},
    {"/record", {"record", ""}, 2},
    {"/releases", {"releases", ""}, 2},
}};

constexpr std::array<Weighted, 11> kExtensions = {{
    {".csv", 6},
    {".tsv", 6},
    {".json", 6},
    {".parquet", 6},
    {".zip", 5},
    {".tar", 5},
    {".tar.gz", 5},
    {".tgz", 5},
    {".xz", 5},
    {".7z", 5},
    {".rar", 4},
}};

constexpr std::array<Weighted, 4> kLexicalPos = {{
    {"dataset", 2},
    {"our dataset", 2},
    {"we release", 2},
    {"available at", 2},
}};
constexpr std::array<Weighted, 4> kLexicalNeg = {{
    {"code", -2},
    {"source code", -2},
    {"implementation", -2},
    {"bibtex", -2},
}};

constexpr int kSpecialWeight = -3;
constexpr int kGithubRootWeight = -4;

bool host_in_domain(std::string_view host, std::string_view domain) {
  if (host == domain) return true;
  return host.size() > domain.size() && host.ends_with(domain) && host[host.size() - domain.size() - 1] == '.';
}

bool is_scholar_host(std::string_view host) {
  return host.starts_with("scholar.google.") || host.find(".scholar.google.") != std::string_view::npos;
}

std::string host_path(const UrlParts& parts) { return parts.host + text::lower(parts.path); }

std::optional<Weighted> host_pos_match(const UrlParts& parts) {
  const std::string hp = host_path(parts);
  for (const Weighted& w : kHostPosContains) {
    if (hp.find(w.key) != std::string::npos) return w;
  }
  for (const Weighted& w : kHostPosDomains) {
    if (host_in_domain(parts.host, w.key)) return w;
  }
  return std::nullopt;
}

std::optional<Weighted> extension_match(const UrlParts& parts) {
  const std::string path = text::lower(parts.path);
  std::optional<Weighted> best;
  for (const Weighted& w : kExtensions) {
    if (path.size() > w.key.size() && path.ends_with(w.key) && (!best || w.weight > best->weight)) best = w;
  }
  return best;
}

bool is_github_root(const UrlParts& parts) {
  if (parts.host != "github.com" && parts.host != "www.github.com") return false;
  const auto segs = parts.segments();
  if (segs.size() != 2) return false;
  return std::none_of(segs.begin(), segs.end(), [](const std::string& s) { return s == "releases" || s == "data"; });
}

int clamp_lexical_pos(int v) { return std::clamp(v, 0, kLexicalPositiveCap); }
int clamp_lexical_neg(int v) { return std::clamp(v, kLexicalNegativeCap, 0); }

}  // namespace

std::string_view to_string(FeatureGroup group) {
  switch (group) {
    case FeatureGroup::host_pos:
      return "host+";
    case FeatureGroup::host_neg:
      return "host-";
    case FeatureGroup::path_hint:
      return "path";
    case FeatureGroup::file_ext:
      return "ext";
    case FeatureGroup::lexical_pos:
      return "lex+";
    case FeatureGroup::lexical_neg:
      return "lex-";
    case FeatureGroup::special:
      return "special";
    case FeatureGroup::github:
      return "github";
  }
  return "?";
}

bool ScoredCandidate::has_group(FeatureGroup g) const {
  return std::any_of(feature_hits.begin(), feature_hits.end(), [g](const FeatureHit& h) { return h.group == g; });
}

bool is_dataset_first_host(std::string_view url) {
  auto parts = parse_url(url);
  return parts && host_pos_match(*parts).has_value();
}

bool is_direct_file_link(std::string_view url) {
  auto parts = parse_url(url);
  return parts && extension_match(*parts).has_value();
}

int recompute_score(std::span<const FeatureHit> hits) {
  int other = 0;
  int lex_pos = 0;
  int lex_neg = 0;
  for (const FeatureHit& h : hits) {
    const int v = h.weight * h.count;
    if (h.group == FeatureGroup::lexical_pos) {
      lex_pos += v;
    } else if (h.group == FeatureGroup::lexical_neg) {
      lex_neg += v;
    } else {
      other += v;
    }
  }
  return other + clamp_lexical_pos(lex_pos) + clamp_lexical_neg(lex_neg);
}

ScoredCandidate score_candidate(const UrlCandidate& candidate) {
  ScoredCandidate out;
  out.candidate = candidate;
  auto hit = [&](FeatureGroup group, std::string_view key, int weight) {
    out.feature_hits.push_back({std::string(to_string(group)) + ":" + std::string(key), group, weight, 1});
  };

  if (auto parts = parse_url(candidate.url)) {
    if (auto m = host_pos_match(*parts)) hit(FeatureGroup::host_pos, m->key, m->weight);

    for (const Weighted& w : kHostNegDomains) {
      if (host_in_domain(parts->host, w.key)) {
        hit(FeatureGroup::host_neg, w.key, w.weight);
        break;
      }
    }
    if (is_scholar_host(parts->host)) hit(FeatureGroup::host_neg, "scholar.google.*", kScholarWeight);

    const auto segs = parts->segments();
    for (const PathHint& p : kPathHints) {
      const bool present = std::any_of(segs.begin(), segs.end(), [&](const std::string& s) {
        return s == p.segments[0] || (!p.segments[1].empty() && s == p.segments[1]);
      });
      if (present) hit(FeatureGroup::path_hint, p.id, p.weight);
    }

    if (auto m = extension_match(*parts)) hit(FeatureGroup::file_ext, m->key, m->weight);
    if (is_github_root(*parts)) hit(FeatureGroup::github, "repo-root", kGithubRootWeight);
  }

  std::string lexical_text = candidate.anchor;
  lexical_text.push_back(' ');
  lexical_text += candidate.context;
  lexical_text = text::lower(text::normalize_whitespace(lexical_text));
  for (const Weighted& w : kLexicalPos) {
    if (text::contains_at_word_start(lexical_text, w.key)) hit(FeatureGroup::lexical_pos, w.key, w.weight);
  }
  for (const Weighted& w : kLexicalNeg) {
    if (text::contains_at_word_start(lexical_text, w.key)) hit(FeatureGroup::lexical_neg, w.key, w.weight);
  }
  if (text::contains_at_word_start(lexical_text, "we evaluate on") &&
      text::contains_at_word_start(lexical_text, "dataset")) {
    hit(FeatureGroup::special, "we evaluate on+dataset", kSpecialWeight);
  }

  out.score = recompute_score(out.feature_hits);
  return out;
}

}  // namespace dsd::linkextract
