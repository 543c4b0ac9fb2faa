#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <ctime>
#include <unordered_set>

#include "dsd/common/errors.hpp"
#include "dsd/ingest/ingest.hpp"

namespace dsd::ingest {

namespace {

std::string compact_time(Timestamp ts) {
  return fmt::format("{:%Y%m%d%H%M}", fmt::gmtime(std::chrono::system_clock::to_time_t(ts)));
}

std::chrono::seconds retry_after(const net::HttpResponse& response) {
  const auto value = response.header("retry-after");
  long secs = 0;
  if (value) {
    const auto& v = *value;
    std::from_chars(v.data(), v.data() + v.size(), secs);
  }
  return std::chrono::seconds(secs > 0 ? secs : 5);
}

}  // namespace

std::string page_url(const FeedQuery& query, std::size_t start) {
  std::string q = "(";
  for (std::size_t i = 0; i < query.categories.codes().size(); ++i) {
    if (i > 0) q += " OR ";
    q += "cat:" + query.categories.codes()[i];
  }
  q += ") AND submittedDate:[" + compact_time(query.window_start) + " TO " +
       compact_time(query.window_end) + "]";
  return fmt::format("{}?search_query={}&sortBy=submittedDate&sortOrder=descending&start={}&max_results={}",
                     query.feed_url, net::url_encode(q), start, query.page_size);
}

std::vector<PaperMeta> fetch_new_papers(net::HttpTransport& transport, const FeedQuery& query) {
  if (query.window_start > query.window_end) throw InvalidArgument("window_start is after window_end");
  if (query.categories.empty()) throw InvalidArgument("no categories to monitor");
  if (query.page_size == 0) throw InvalidArgument("page_size must be positive");
  if (query.window_start == query.window_end) return {};

  std::vector<PaperMeta> collected;
  std::unordered_set<std::string> seen;
  for (std::size_t page = 0; page < query.max_pages; ++page) {
    const std::string url = page_url(query, page * query.page_size);
    const net::HttpResponse response = transport.get(url);
    if (!response.transport_ok()) throw RetryableError("feed request failed: " + response.failure_detail, url);
    if (response.status == 429 || (response.status == 503 && response.header("retry-after"))) {
      throw RateLimitedError(url, retry_after(response));
    }
    if (response.status >= 500) throw RetryableError("feed returned HTTP " + std::to_string(response.status), url);
    if (response.status != 200) throw Error("feed returned HTTP " + std::to_string(response.status) + " for " + url);

    FeedParseResult parsed = parse_feed(response.body);
    const std::size_t entries =
        parsed.papers.size() + parsed.skipped_missing_id + parsed.skipped_missing_fields;
    bool reached_older = false;
    for (PaperMeta& meta : parsed.papers) {
      if (meta.submitted_at < query.window_start) reached_older = true;
      if (meta.submitted_at < query.window_start || meta.submitted_at >= query.window_end) continue;
      std::vector<std::string> matching;
      for (const auto& c : meta.categories) {
        if (query.categories.contains(c)) matching.push_back(c);
      }
      if (matching.empty()) continue;
      if (!seen.insert(meta.paper_id).second) continue;
      meta.categories = std::move(matching);
      collected.push_back(std::move(meta));
    }
    if (entries < query.page_size || reached_older) break;
    if (page + 1 == query.max_pages) spdlog::warn("feed pagination stopped at max_pages={}", query.max_pages);
  }
  std::sort(collected.begin(), collected.end(), [](const PaperMeta& a, const PaperMeta& b) {
    if (a.submitted_at != b.submitted_at) return a.submitted_at < b.submitted_at;
    return a.paper_id < b.paper_id;
  });
  return collected;
}

}  // namespace dsd::ingest
