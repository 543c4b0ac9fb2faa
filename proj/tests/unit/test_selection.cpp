#include <doctest.h>

#include <json.hpp>

#include "dsd/common/errors.hpp"
#include "dsd/linkextract/linkextract.hpp"
#include "dsd/net/fixture_transport.hpp"
#include "oracles.hpp"

using namespace dsd;
using namespace dsd::linkextract;

namespace {

ScoredCandidate sc(std::string url, int score) {
  ScoredCandidate s;
  s.candidate.url = std::move(url);
  s.score = score;
  return s;
}

SelectionResult rule(std::vector<ScoredCandidate> v, SelectionThresholds t = {}) {
  return select_primary(std::move(v), t, SelectionMode::rule_only);
}

class FakeVerifier final : public LinkVerifier {
 public:
  explicit FakeVerifier(std::optional<std::string> answer) : answer_(std::move(answer)) {}
  std::optional<std::string> choose(std::span<const ScoredCandidate> candidates) override {
    ++calls;
    seen.clear();
    for (const auto& c : candidates) seen.push_back(c.candidate.url);
    return answer_;
  }
  int calls = 0;
  std::vector<std::string> seen;

 private:
  std::optional<std::string> answer_;
};

// Keeps the last POST body.
class CaptureTransport final : public net::HttpTransport {
 public:
  explicit CaptureTransport(net::HttpResponse reply) : reply_(std::move(reply)) {}
  net::HttpResponse get(const std::string&) override { return reply_; }
  net::HttpResponse post(const std::string& url, const std::string& body, const std::string& type) override {
    last_url = url;
    last_body = body;
    last_type = type;
    return reply_;
  }
  std::string last_url, last_body, last_type;

 private:
  net::HttpResponse reply_;
};

net::HttpResponse json_reply(int status, std::string body) {
  net::HttpResponse r;
  r.status = status;
  r.body = std::move(body);
  r.content_type = "application/json";
  return r;
}

const std::string kHf = "https://huggingface.co/datasets/a/b";
const std::string kZen = "https://zenodo.org/record/1";
const std::string kKaggle = "https://www.kaggle.com/datasets/u/x";
const std::string kFigFile = "https://figshare.com/ndownloader/files/9/data.zip";
const std::string kGit = "https://github.com/a/b";
const std::string kSite = "https://lab.example.edu/corpus";

}  // namespace

TEST_CASE("rule-only reason codes") {
  SUBCASE("no candidates") {
    const auto r = rule({});
    CHECK(r.reason == SelectionReason::no_candidates);
    CHECK_FALSE(r.primary_url);
    CHECK(r.considered == 0);
    CHECK(r.mode == SelectionMode::rule_only);
  }
  SUBCASE("single candidate, whatever its score") {
    const auto r = rule({sc(kGit, -4)});
    CHECK(r.reason == SelectionReason::single_candidate);
    CHECK(r.primary_url == kGit);
    CHECK(r.primary_score == -4);
  }
  SUBCASE("high confidence ignores the margin") {
    const auto r = rule({sc(kSite, 21), sc(kHf, 22)});
    CHECK(r.reason == SelectionReason::high_confidence);
    CHECK(r.primary_url == kHf);
    CHECK(r.considered == 2);
  }
  SUBCASE("margin") {
    CHECK(rule({sc(kSite, 18), sc(kGit, 13)}).reason == SelectionReason::margin);
    CHECK(rule({sc(kSite, 18), sc(kGit, 14)}).reason != SelectionReason::margin);
    CHECK(rule({sc(kSite, 15), sc(kGit, 5)}).reason != SelectionReason::margin);
  }
  SUBCASE("preferred host: a landing page beats a higher file link") {
    const auto r = rule({sc(kFigFile, 19), sc(kKaggle, 15), sc(kSite, 17)});
    CHECK(r.reason == SelectionReason::preferred_host);
    CHECK(r.primary_url == kKaggle);
    CHECK(r.primary_score == 15);
  }
  SUBCASE("preferred host: file link when no landing page") {
    const auto r = rule({sc(kSite, 19), sc(kFigFile, 16)});
    CHECK(r.reason == SelectionReason::preferred_host);
    CHECK(r.primary_url == kFigFile);
  }
  SUBCASE("general tie-break") {
    const auto r = rule({sc(kSite, 17), sc(kGit, 15)});
    CHECK(r.reason == SelectionReason::general_tiebreak);
    CHECK(r.primary_url == kSite);
  }
  SUBCASE("dataset host outside the top K does not count") {
    std::vector<ScoredCandidate> v = {sc("https://a.test/1", 17), sc("https://a.test/2", 17),
                                      sc("https://a.test/3", 17), sc("https://a.test/4", 17),
                                      sc("https://a.test/5", 17), sc(kZen, 16)};
    const auto r = rule(v);
    CHECK(r.reason == SelectionReason::general_tiebreak);
    CHECK(r.primary_url == "https://a.test/1");
    SelectionThresholds wide;
    wide.top_k = 6;
    CHECK(rule(v, wide).primary_url == kZen);
  }
  SUBCASE("below the floor") {
    const auto r = rule({sc(kSite, 14), sc(kGit, 13)});
    CHECK(r.reason == SelectionReason::rejected_below_min);
    CHECK_FALSE(r.primary_url);
    CHECK_FALSE(r.primary_score);
    CHECK(r.considered == 2);
    // the preferred host is held to the same floor
    CHECK(rule({sc(kSite, 18), sc(kZen, 14)}).reason == SelectionReason::rejected_below_min);
  }
}

TEST_CASE("ranking ties") {
  std::vector<ScoredCandidate> v = {sc("https://b.test/x", 5), sc("https://a.test/x", 5), sc("https://a.test/xx", 5),
                                    sc("https://z.test", 6)};
  rank_candidates(v);
  CHECK(v[0].candidate.url == "https://z.test");
  CHECK(v[1].candidate.url == "https://a.test/x");
  CHECK(v[2].candidate.url == "https://b.test/x");
  CHECK(v[3].candidate.url == "https://a.test/xx");
}

TEST_CASE("rule-only agrees with the naive oracle") {
  testing::Rng rng(2024);
  std::map<std::string, int> reasons;
  for (int i = 0; i < 5000; ++i) {
    const auto set = testing::random_candidate_set(rng);
    std::vector<ScoredCandidate> scored;
    for (const auto& c : set) {
      REQUIRE(is_dataset_first_host(c.url) == c.dataset_host);
      REQUIRE(is_direct_file_link(c.url) == c.file_link);
      scored.push_back(sc(c.url, c.score));
    }
    const auto expected = testing::naive_rule_select(set);
    const auto got = rule(scored);
    CAPTURE(i);
    CHECK(got.primary_url == expected.url);
    CHECK(std::string(to_string(got.reason)) == expected.reason);
    ++reasons[expected.reason];
  }
  CHECK(reasons.size() == 7);
}

TEST_CASE("raising the selected candidate keeps it selected") {
  testing::Rng rng(99);
  for (int i = 0; i < 3000; ++i) {
    const auto set = testing::random_candidate_set(rng);
    std::vector<ScoredCandidate> scored;
    for (const auto& c : set) scored.push_back(sc(c.url, c.score));
    const auto before = rule(scored);
    if (!before.primary_url) continue;
    for (auto& s : scored) {
      if (s.candidate.url == *before.primary_url) s.score += rng.uniform(1, 10);
    }
    CHECK(rule(scored).primary_url == before.primary_url);
  }
}

TEST_CASE("verifier modes") {
  const std::vector<ScoredCandidate> v = {sc(kSite, 17), sc(kZen, 12), sc(kGit, -4), sc("https://doi.org/1", 0)};
  const SelectionThresholds t;

  SUBCASE("hybrid drops non-positive scores before asking") {
    FakeVerifier ver(kZen);
    const auto r = select_primary(v, t, SelectionMode::hybrid, &ver);
    CHECK(ver.seen == std::vector<std::string>{kSite, kZen});
    CHECK(r.reason == SelectionReason::llm_choice);
    CHECK(r.primary_url == kZen);
    CHECK(r.primary_score == 12);
    CHECK(r.considered == 2);
    CHECK(r.mode == SelectionMode::hybrid);
  }
  SUBCASE("llm_only sees everything") {
    FakeVerifier ver(kGit);
    const auto r = select_primary(v, t, SelectionMode::llm_only, &ver);
    CHECK(ver.seen.size() == 4);
    CHECK(r.reason == SelectionReason::llm_choice);
    CHECK(r.primary_url == kGit);
  }
  SUBCASE("uncertain falls back to the rules") {
    FakeVerifier ver(std::nullopt);
    const auto r = select_primary(v, t, SelectionMode::hybrid, &ver);
    CHECK(r.reason == SelectionReason::llm_fallback);
    CHECK(r.primary_url == kSite);
    FakeVerifier low(std::nullopt);
    const auto rejected = select_primary({sc(kSite, 9), sc(kZen, 8)}, t, SelectionMode::hybrid, &low);
    CHECK(rejected.reason == SelectionReason::rejected_below_min);
  }
  SUBCASE("a choice outside the list is uncertain") {
    FakeVerifier ver(std::string("https://elsewhere.test/"));
    CHECK(select_primary(v, t, SelectionMode::llm_only, &ver).reason == SelectionReason::llm_fallback);
  }
  SUBCASE("no verifier configured") {
    CHECK(select_primary(v, t, SelectionMode::hybrid, nullptr).reason == SelectionReason::llm_fallback);
  }
  SUBCASE("nothing positive") {
    FakeVerifier ver(kGit);
    const auto r = select_primary({sc(kGit, -4), sc("https://doi.org/1", 0)}, t, SelectionMode::hybrid, &ver);
    CHECK(ver.calls == 0);
    CHECK(r.reason == SelectionReason::no_candidates);
  }
}

TEST_CASE("HTTP verifier wire format") {
  std::vector<ScoredCandidate> v = {sc(kZen, 12), sc(kSite, 3)};
  v[0].candidate.anchor = "our data";
  v[0].candidate.context = "We release our data.";

  CaptureTransport ok(json_reply(200, nlohmann::json{{"choice", kZen}}.dump()));
  HttpLinkVerifier verifier(ok, "http://verifier.test/choose");
  CHECK(verifier.choose(v) == kZen);
  CHECK(ok.last_url == "http://verifier.test/choose");
  CHECK(ok.last_type == "application/json");
  const auto body = nlohmann::json::parse(ok.last_body);
  REQUIRE(body["candidates"].size() == 2);
  CHECK(body["candidates"][0] ==
        nlohmann::json{{"url", kZen}, {"anchor", "our data"}, {"context", "We release our data."}, {"score", 12}});

  for (const auto& reply : {json_reply(200, R"({"choice":"uncertain"})"), json_reply(500, ""),
                            json_reply(200, "not json"), json_reply(200, R"({"choice":3})")}) {
    CaptureTransport t(reply);
    HttpLinkVerifier ver(t, "http://verifier.test/choose");
    CHECK_FALSE(ver.choose(v).has_value());
  }

  net::FixtureRoute r;
  r.method = "POST";
  r.url = "http://verifier.test/choose";
  net::FixtureReply timeout;
  timeout.failure = net::TransportFailure::timeout;
  r.replies.push_back(timeout);
  net::FixtureTransport slow({r});
  HttpLinkVerifier ver(slow, "http://verifier.test/choose");
  CHECK_FALSE(ver.choose(v).has_value());
}

TEST_CASE("threshold and enum plumbing") {
  SelectionThresholds t;
  CHECK_NOTHROW(t.validate());
  t.tau_min = 16;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t = {};
  t.delta = 0;
  CHECK_THROWS_AS(select_primary({}, t, SelectionMode::rule_only), InvalidArgument);
  t = {};
  t.top_k = 0;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);

  for (auto m : {SelectionMode::rule_only, SelectionMode::llm_only, SelectionMode::hybrid}) {
    CHECK(selection_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(selection_mode_from_string("llm"), InvalidArgument);
  for (auto r : {SelectionReason::single_candidate, SelectionReason::llm_fallback, SelectionReason::no_candidates}) {
    CHECK(selection_reason_from_string(to_string(r)) == r);
  }
  CHECK_THROWS_AS(selection_reason_from_string("margin "), InvalidArgument);
}
