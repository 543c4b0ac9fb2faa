#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/common/time.hpp"
#include "dsd/net/http.hpp"

namespace dsd::ingest {

// Ordered, duplicate-free set of arXiv category codes.
class CategorySet {
 public:
  CategorySet() = default;
  // Throws dsd::InvalidArgument on an unknown code or an empty list.
  explicit CategorySet(std::vector<std::string> codes);

  // cs.IR, cs.DB, cs.AI, cs.CL, cs.CV, cs.MA
  static CategorySet defaults();

  const std::vector<std::string>& codes() const { return codes_; }
  bool contains(std::string_view code) const;
  bool empty() const { return codes_.empty(); }
  bool operator==(const CategorySet&) const = default;

 private:
  std::vector<std::string> codes_;
};

// True for codes in the built-in arXiv taxonomy table.
bool is_known_category(std::string_view code);

struct PaperMeta {
  std::string paper_id;  // version suffix stripped, e.g. "2403.01234"
  std::string title;
  std::string abstract;
  std::vector<std::string> categories;
  Timestamp submitted_at{};
  std::string pdf_url;
  std::string source_url;

  bool operator==(const PaperMeta&) const = default;
};

std::string pdf_url_for(std::string_view paper_id);
std::string source_url_for(std::string_view paper_id);
std::string abs_url_for(std::string_view paper_id);

// "http://arxiv.org/abs/2403.01234v2" -> "2403.01234"; empty if no id can be found.
std::string paper_id_from_entry_id(std::string_view entry_id);

struct FeedParseResult {
  std::vector<PaperMeta> papers;
  std::size_t skipped_missing_id = 0;
  std::size_t skipped_missing_fields = 0;  // title, abstract or published absent
};

// Parses an arXiv Atom API response. Titles and abstracts are whitespace
// normalized. Throws dsd::ParseError on non-XML input.
FeedParseResult parse_feed(std::string_view feed_bytes);

struct FeedQuery {
  CategorySet categories = CategorySet::defaults();
  Timestamp window_start{};
  Timestamp window_end{};  // exclusive
  std::size_t page_size = 100;
  std::size_t max_pages = 200;
  std::string feed_url = "http://export.arxiv.org/api/query";
};

std::string page_url(const FeedQuery& query, std::size_t start);

// Returns every paper in [window_start, window_end) listed (primary or
// cross-list) in one of the query categories, deduplicated by paper_id and
// ordered by submission time (ties by paper_id). Each result's `categories`
// is narrowed to the codes in the query set.
//
// Throws dsd::RateLimitedError on 429/503 with Retry-After, dsd::RetryableError
// on transport failure or 5xx, dsd::ParseError on a malformed page.
std::vector<PaperMeta> fetch_new_papers(net::HttpTransport& transport, const FeedQuery& query);

}  // namespace dsd::ingest
