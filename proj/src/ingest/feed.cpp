#include <algorithm>
#include <array>

#include <spdlog/spdlog.h>

#include "dsd/common/errors.hpp"
#include "dsd/common/text.hpp"
#include "dsd/ingest/ingest.hpp"
#include "dsd/xml/dom.hpp"

namespace dsd::ingest {

namespace {

constexpr std::array<std::string_view, 64> kKnownCategories = {
    "cs.AI",   "cs.AR",   "cs.CC",   "cs.CE",    "cs.CG",   "cs.CL",   "cs.CR",   "cs.CV",
    "cs.CY",   "cs.DB",   "cs.DC",   "cs.DL",    "cs.DM",   "cs.DS",   "cs.ET",   "cs.FL",
    "cs.GL",   "cs.GR",   "cs.GT",   "cs.HC",    "cs.IR",   "cs.IT",   "cs.LG",   "cs.LO",
    "cs.MA",   "cs.MM",   "cs.MS",   "cs.NA",    "cs.NE",   "cs.NI",   "cs.OH",   "cs.OS",
    "cs.PF",   "cs.PL",   "cs.RO",   "cs.SC",    "cs.SD",   "cs.SE",   "cs.SI",   "cs.SY",
    "stat.AP", "stat.CO", "stat.ME", "stat.ML",  "stat.OT", "stat.TH", "eess.AS", "eess.IV",
    "eess.SP", "eess.SY", "math.CO", "math.IT",  "math.NA", "math.OC", "math.PR", "math.ST",
    "q-bio.BM", "q-bio.GN", "q-bio.NC", "q-bio.QM", "q-fin.CP", "q-fin.ST", "econ.EM", "physics.soc-ph"};

}  // namespace

bool is_known_category(std::string_view code) {
  return std::find(kKnownCategories.begin(), kKnownCategories.end(), code) != kKnownCategories.end();
}

CategorySet::CategorySet(std::vector<std::string> codes) {
  if (codes.empty()) throw InvalidArgument("category set must not be empty");
  for (auto& code : codes) {
    if (!is_known_category(code)) throw InvalidArgument("unknown arXiv category: " + code);
    if (!contains(code)) codes_.push_back(std::move(code));
  }
}

CategorySet CategorySet::defaults() {
  return CategorySet({"cs.IR", "cs.DB", "cs.AI", "cs.CL", "cs.CV", "cs.MA"});
}

bool CategorySet::contains(std::string_view code) const {
  return std::find(codes_.begin(), codes_.end(), code) != codes_.end();
}

std::string pdf_url_for(std::string_view paper_id) { return "https://arxiv.org/pdf/" + std::string(paper_id); }

std::string source_url_for(std::string_view paper_id) {
  return "https://arxiv.org/e-print/" + std::string(paper_id);
}

std::string abs_url_for(std::string_view paper_id) { return "https://arxiv.org/abs/" + std::string(paper_id); }

std::string paper_id_from_entry_id(std::string_view entry_id) {
  std::string_view id = text::trim(entry_id);
  if (auto pos = id.find("/abs/"); pos != std::string_view::npos) id.remove_prefix(pos + 5);
  while (!id.empty() && id.back() == '/') id.remove_suffix(1);
  // Drop a trailing version marker "v<digits>".
  std::size_t i = id.size();
  while (i > 0 && id[i - 1] >= '0' && id[i - 1] <= '9') --i;
  if (i > 0 && i < id.size() && id[i - 1] == 'v') id = id.substr(0, i - 1);
  return std::string(id);
}

FeedParseResult parse_feed(std::string_view feed_bytes) {
  const xml::Node root = xml::parse(feed_bytes);
  FeedParseResult result;
  for (const xml::Node* entry : root.children_named("entry")) {
    const xml::Node* id_node = entry->child("id");
    std::string paper_id = id_node ? paper_id_from_entry_id(id_node->text_content()) : std::string{};
    if (paper_id.empty()) {
      ++result.skipped_missing_id;
      spdlog::warn("feed entry without an arXiv id skipped");
      continue;
    }
    const xml::Node* title = entry->child("title");
    const xml::Node* summary = entry->child("summary");
    const xml::Node* published = entry->child("published");
    PaperMeta meta;
    meta.paper_id = paper_id;
    if (title) meta.title = text::normalize_whitespace(title->text_content());
    if (summary) meta.abstract = text::normalize_whitespace(summary->text_content());
    if (meta.title.empty() || meta.abstract.empty() || published == nullptr) {
      ++result.skipped_missing_fields;
      spdlog::warn("feed entry {} skipped: missing title, abstract or published date", paper_id);
      continue;
    }
    try {
      meta.submitted_at = parse_timestamp(text::trim(published->text_content()));
    } catch (const InvalidArgument&) {
      ++result.skipped_missing_fields;
      spdlog::warn("feed entry {} skipped: unreadable published date", paper_id);
      continue;
    }
    auto add_category = [&meta](const std::string* term) {
      if (term == nullptr || term->empty()) return;
      if (std::find(meta.categories.begin(), meta.categories.end(), *term) == meta.categories.end()) {
        meta.categories.push_back(*term);
      }
    };
    if (const xml::Node* primary = entry->child("primary_category")) add_category(primary->attribute("term"));
    for (const xml::Node* cat : entry->children_named("category")) add_category(cat->attribute("term"));
    meta.pdf_url = pdf_url_for(paper_id);
    meta.source_url = source_url_for(paper_id);
    result.papers.push_back(std::move(meta));
  }
  return result;
}

}  // namespace dsd::ingest
