// One line per acceptance criterion: PASS/FAIL, name, detail, wall time.
// Exit status is non-zero if any criterion fails.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/core.h>
#include <spdlog/spdlog.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dsd/cli/cli.hpp"
#include "dsd/descextract/descextract.hpp"
#include "dsd/gate/gate.hpp"
#include "dsd/ingest/ingest.hpp"
#include "dsd/linkextract/linkextract.hpp"
#include "dsd/net/fixture_transport.hpp"
#include "dsd/recordindex/index.hpp"
#include "dsd/service/crawl.hpp"
#include "dsd/service/http_api.hpp"
#include "oracles.hpp"
#include "scoring_cases.hpp"
#include "test_support.hpp"

using namespace dsd;
using nlohmann::json;
using Steady = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

double seconds_since(Steady::time_point t0) { return std::chrono::duration<double>(Steady::now() - t0).count(); }

// ---- scoring -------------------------------------------------------------------

Outcome scoring_exactness() {
  using namespace linkextract;
  const auto& cases = testing::scoring_cases();
  Outcome o;
  std::set<std::string> ids;
  bool neg_cap_binds = false;
  bool pos_at_cap = false;
  int mismatches = 0;
  for (const auto& c : cases) {
    UrlCandidate cand;
    cand.url = c.url;
    cand.anchor = c.anchor;
    cand.context = c.context;
    const auto s = score_candidate(cand);
    if (s.score != c.expected) {
      ++mismatches;
      o.detail += fmt::format(" [{} got {} want {} = {}]", c.url, s.score, c.expected, c.sum);
    }
    int lex_pos = 0, lex_neg = 0;
    for (const auto& h : s.feature_hits) {
      ids.insert(h.id);
      if (h.group == FeatureGroup::lexical_pos) lex_pos += h.weight * h.count;
      if (h.group == FeatureGroup::lexical_neg) lex_neg += h.weight * h.count;
    }
    neg_cap_binds |= lex_neg < kLexicalNegativeCap;
    pos_at_cap |= lex_pos >= kLexicalPositiveCap;
  }
  // every weight-table row must be exercised by some case
  const std::vector<std::string> rows = {
      "host+:huggingface.co/datasets", "host+:zenodo.org/record", "host+:kaggle.com/datasets", "host+:figshare.com",
      "host+:dataverse.org", "host+:osf.io", "host-:arxiv.org", "host-:doi.org", "host-:acm.org",
      "host-:ieeexplore.ieee.org", "host-:researchgate.net", "host-:medium.com", "host-:scholar.google.*",
      "path:/dataset", "path:/data", "path:/download", "path:/files", "path:/record", "path:/releases",
      "lex+:dataset", "lex+:our dataset", "lex+:we release", "lex+:available at", "lex-:code", "lex-:source code",
      "lex-:implementation", "lex-:bibtex", "special:we evaluate on+dataset", "github:repo-root"};
  std::vector<std::string> missing;
  for (const auto& r : rows) {
    if (!ids.count(r)) missing.push_back(r);
  }
  int ext_classes = 0;
  for (const char* e : {"ext:.csv", "ext:.zip", "ext:.rar"}) ext_classes += ids.count(e) ? 1 : 0;
  for (const auto& m : missing) o.detail += " missing:" + m;
  o.ok = cases.size() >= 25 && mismatches == 0 && missing.empty() && ext_classes == 3 && neg_cap_binds &&
         pos_at_cap;
  o.detail = fmt::format("{} cases, {} mismatches, {} table rows covered, caps {}/{}{}", cases.size(), mismatches,
                         rows.size() - missing.size(), pos_at_cap ? "+" : "", neg_cap_binds ? "-" : "", o.detail);
  return o;
}

// ---- selection -----------------------------------------------------------------

Outcome selection_conformance() {
  using namespace linkextract;
  testing::Rng rng(20240301);
  std::map<std::string, int> reasons;
  int disagreements = 0;
  std::string first;
  for (int i = 0; i < 10000; ++i) {
    const auto set = testing::random_candidate_set(rng);
    std::vector<ScoredCandidate> scored;
    for (const auto& c : set) {
      ScoredCandidate s;
      s.candidate.url = c.url;
      s.score = c.score;
      scored.push_back(std::move(s));
    }
    const auto want = testing::naive_rule_select(set);
    const auto got = select_primary(std::move(scored), SelectionThresholds{}, SelectionMode::rule_only);
    ++reasons[want.reason];
    if (got.primary_url != want.url || std::string(to_string(got.reason)) != want.reason) {
      if (disagreements++ == 0) first = fmt::format(" first at set {}", i);
    }
  }
  std::string seen;
  for (const auto& [r, n] : reasons) seen += fmt::format(" {}={}", r, n);
  const bool all_reasons = reasons.size() == 7 && reasons.count("rejected_below_min");
  return {disagreements == 0 && all_reasons,
          fmt::format("10000 sets, {} disagreements{};{}", disagreements, first, seen)};
}

// ---- windows -------------------------------------------------------------------

Outcome window_oracle() {
  testing::Rng rng(7);
  int failures = 0;
  std::size_t windows_checked = 0;
  std::string first;
  auto fail = [&](int doc, const std::string& why) {
    if (failures++ == 0) first = fmt::format(" first: doc {} {}", doc, why);
  };
  for (int d = 0; d < 1000; ++d) {
    const auto n = static_cast<std::size_t>(rng.uniform(0, 40));
    std::vector<std::size_t> tokens(n);
    std::vector<bool> labels(n);
    for (auto& t : tokens) t = static_cast<std::size_t>(rng.uniform(1, 120));
    const double density = rng.real(0, 0.6);
    for (std::size_t i = 0; i < n; ++i) labels[i] = rng.chance(density);
    const auto budget = static_cast<std::size_t>(rng.uniform(20, 500));

    const auto sentences = testing::sentences_with_tokens(tokens);
    std::unique_ptr<bool[]> flags(new bool[n + 1]);
    for (std::size_t i = 0; i < n; ++i) flags[i] = labels[i];
    const auto got = descextract::generate_training_windows(sentences, std::span<const bool>(flags.get(), n), budget);
    const auto want = testing::naive_training_windows(tokens, labels, budget, descextract::kDefaultSeedRadius);
    windows_checked += got.size();

    if (got.size() != want.size()) {
      fail(d, fmt::format("count {} vs {}", got.size(), want.size()));
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      const auto& g = got[i];
      const auto& w = want[i];
      if (g.target_index != w.target || g.left != w.left || g.right != w.right || g.token_total != w.total ||
          g.over_budget != w.over_budget || g.label != labels[g.target_index]) {
        fail(d, fmt::format("window {} differs", i));
      }
      // budget safety
      std::size_t sum = 0;
      for (std::size_t j = g.left; j <= g.right; ++j) sum += tokens[j];
      if (sum != g.token_total) fail(d, "token_total");
      if (g.over_budget ? (g.left != g.right || tokens[g.target_index] <= budget) : sum > budget) {
        fail(d, fmt::format("budget at window {}", i));
      }
      if (!g.contains(g.target_index)) fail(d, "target outside window");
    }
    // stride rule over the walk prefix
    std::size_t walk = 0;
    std::size_t expect_target = 0;
    while (walk < got.size() && got[walk].target_index == expect_target && expect_target < n) {
      const auto& g = got[walk];
      bool any_pos = false;
      for (std::size_t j = g.left; j <= g.right; ++j) any_pos |= labels[j];
      expect_target += std::max<std::size_t>(1, g.size() / (any_pos ? 3 : 2));
      ++walk;
    }
    if (expect_target < n) fail(d, "walk stopped early");
    for (std::size_t i = walk; i < got.size(); ++i) {
      if (!labels[got[i].target_index]) fail(d, "extra window on a negative");
    }
    // positive coverage
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] && std::none_of(got.begin(), got.end(), [&](const auto& w) { return w.contains(i); })) {
        fail(d, fmt::format("positive {} uncovered", i));
      }
    }
  }
  return {failures == 0, fmt::format("1000 documents, {} windows, {} failures{}", windows_checked, failures, first)};
}

// ---- end-to-end fixtures -------------------------------------------------------

service::CrawlConfig e2e_config() { return service::load_config_file(testing::e2e_dir() / "config.json"); }

std::vector<std::string> normalized(std::vector<std::string> lines) {
  std::vector<std::string> out;
  for (auto& l : lines) {
    if (!l.empty()) out.push_back(testing::strip_timestamps(l));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> expected_records() {
  return normalized(testing::read_lines(testing::e2e_dir() / "expected_records.jsonl"));
}

Outcome zero_positive_reclassification() {
  auto transport = net::FixtureTransport::from_directory(testing::e2e_dir());
  const auto config = e2e_config();
  recordindex::RecordIndex index(recordindex::IndexOptions{.dimension = config.index.dimension});
  service::PipelineServices services(config, *transport, index, service::make_embedder(config.index, *transport));
  services.set_retry_sleep([](std::chrono::milliseconds) {});

  ingest::FeedQuery query;
  query.categories = config.ingest.categories;
  query.window_start = *config.crawl.window_start;
  query.window_end = *config.crawl.window_end;
  query.feed_url = config.ingest.feed_url;
  const auto papers = ingest::fetch_new_papers(*transport, query);
  service::BatchOptions options;
  options.workers = config.crawl.worker_count;
  const auto outcomes = service::process_papers(papers, services, options);

  const auto dispositions = json::parse(testing::read_file(testing::e2e_dir() / "expected_dispositions.json"));
  int zero_docs = 0, violations = 0, wrong_disposition = 0;
  std::string first;
  for (const auto& o : outcomes) {
    const bool parsed_zero = o.gate_positive && o.parse_source.has_value() && o.positive_sentences == 0;
    const bool reclassified = o.disposition == service::Disposition::reclassified_negative && !o.record &&
                              !index.get(o.paper_id) && !o.description_extracted;
    zero_docs += parsed_zero;
    if (parsed_zero != reclassified) {
      if (violations++ == 0) first = " first: " + o.paper_id;
    }
    if (!dispositions.contains(o.paper_id) ||
        dispositions[o.paper_id].get<std::string>() != service::to_string(o.disposition)) {
      ++wrong_disposition;
    }
  }
  const bool ok = outcomes.size() == dispositions.size() && zero_docs > 0 && violations == 0 && wrong_disposition == 0;
  return {ok, fmt::format("{} papers, {} zero-positive documents, {} biconditional violations, {} unexpected "
                          "dispositions{}",
                          outcomes.size(), zero_docs, violations, wrong_disposition, first)};
}

Outcome e2e_fixture_run() {
  const auto want = expected_records();

  std::ostringstream out, err;
  const int code = cli::run({"dsd", "crawl", "--config", (testing::e2e_dir() / "config.json").string(), "--fixtures",
                             testing::e2e_dir().string()},
                            out, err);
  std::vector<std::string> cli_lines;
  {
    std::istringstream in(out.str());
    for (std::string l; std::getline(in, l);) cli_lines.push_back(l);
  }
  const auto from_cli = normalized(cli_lines);

  auto transport = net::FixtureTransport::from_directory(testing::e2e_dir());
  service::CrawlController controller(*transport, e2e_config());
  controller.set_retry_sleep([](std::chrono::milliseconds) {});
  const service::HttpApi api(controller);
  const auto started = api.handle({"POST", "/crawl/start", {}, {}});
  controller.wait();
  const auto page = api.handle({"GET", "/records", {{"limit", "1000"}}, {}});
  std::vector<std::string> api_lines;
  if (page.status == 200) {
    const auto body = nlohmann::ordered_json::parse(page.body);
    for (const auto& r : body["records"]) api_lines.push_back(r.dump());
  }
  const auto from_api = normalized(api_lines);
  const auto status = controller.status();

  const bool ok = code == 0 && want.size() == 4 && from_cli == want && started.status == 202 &&
                  page.status == 200 && from_api == want && status.papers_seen == 10 && status.records_written == 4;
  return {ok, fmt::format("expected {} records; cli exit {} with {} lines ({}); service {} lines ({}), {} seen",
                          want.size(), code, from_cli.size(), from_cli == want ? "identical" : "DIFFERENT",
                          from_api.size(), from_api == want ? "identical" : "DIFFERENT", status.papers_seen)};
}

// ---- retrieval -----------------------------------------------------------------

Outcome retrieval_oracle() {
  constexpr std::size_t dim = 64;
  constexpr std::size_t count = 1000;
  testing::Rng rng(11);
  recordindex::RecordIndex index(recordindex::IndexOptions{.dimension = dim});
  std::vector<std::vector<float>> vectors;
  std::vector<std::string> ids;
  auto random_unit = [&] {
    std::vector<float> v(dim);
    double norm = 0;
    for (float& x : v) {
      x = rng.gauss();
      norm += double(x) * x;
    }
    for (float& x : v) x = static_cast<float>(x / std::sqrt(norm));
    return v;
  };
  for (std::size_t i = 0; i < count; ++i) {
    // exact duplicates exercise the tie rule
    const std::vector<float> v = i % 97 == 13 ? vectors[rng.index(vectors.size())] : random_unit();
    char id[16];
    std::snprintf(id, sizeof id, "v%04zu", (i * 389) % count);
    ids.push_back(id);
    vectors.push_back(v);
    recordindex::DatasetRecord r;
    r.paper_id = id;
    r.paper_url = std::string("https://arxiv.org/abs/") + id;
    r.description = "vector";
    r.gate_score = 0.5;
    index.upsert_embedded(std::move(r), v);
  }

  std::size_t compared = 0, exact = 0, near_tie_swaps = 0, mismatches = 0;
  double worst_self = 0.0;
  auto compare = [&](const std::vector<float>& q) {
    for (std::size_t k : {1u, 5u, 10u, 100u}) {
      const auto want = testing::naive_top_k(vectors, ids, q, k);
      const auto got = index.search_vector(q, k);
      if (got.size() != want.size()) {
        ++mismatches;
        continue;
      }
      for (std::size_t i = 0; i < got.size(); ++i) {
        ++compared;
        const double diff = std::abs(got[i].similarity - want[i].similarity);
        if (got[i].record.paper_id == want[i].id && got[i].rank == i + 1 && diff <= 1e-6) {
          ++exact;
        } else if (got[i].record.paper_id != want[i].id && diff <= 1e-6) {
          ++near_tie_swaps;
        } else {
          ++mismatches;
        }
      }
    }
  };
  for (int q = 0; q < 100; ++q) {
    std::vector<float> query(dim);
    for (float& x : query) x = rng.gauss();
    compare(query);
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 10 == 0) compare(vectors[i]);
    const auto self = index.search_vector(vectors[i], 1);
    worst_self = std::max(worst_self, self.empty() ? 1.0 : std::abs(self[0].similarity - 1.0));
  }
  const bool ok = mismatches == 0 && worst_self <= 1e-6;
  return {ok, fmt::format("{} ranked positions: {} exact, {} float near-tie swaps (|d| <= 1e-6), {} mismatches; "
                          "worst self-similarity error {:.2e}",
                          compared, exact, near_tie_swaps, mismatches, worst_self)};
}

// ---- gate throughput -----------------------------------------------------------

Outcome gate_throughput() {
  testing::Rng rng(3);
  const std::vector<std::string> cues = {"we release", "a new dataset", "benchmark", "annotated", "corpus",
                                         "we collect", "publicly available", "images", "questions", "crowdsourced"};
  std::vector<ingest::PaperMeta> papers(2000);
  for (std::size_t i = 0; i < papers.size(); ++i) {
    auto& p = papers[i];
    p.paper_id = fmt::format("2403.{:05}", i);
    for (int w = 0; w < 10; ++w) p.title += rng.word(3, 9) + " ";
    const int words = rng.uniform(120, 260);
    for (int w = 0; w < words; ++w) {
      p.abstract += rng.chance(0.03) ? cues[rng.index(cues.size())] : rng.word(2, 11);
      p.abstract += rng.chance(0.08) ? ". " : " ";
    }
  }
  const gate::HeuristicGateBackend backend;
  std::size_t positives = 0, classified = 0;
  const auto t0 = Steady::now();
  for (int round = 0; round < 10; ++round) {
    for (const auto& p : papers) {
      positives += gate::classify(p, backend).positive;
      ++classified;
    }
  }
  const double secs = seconds_since(t0);
  const double rate = classified / secs;
  return {rate >= 1000.0, fmt::format("{} papers in {:.3f} s single-threaded = {:.0f} papers/s ({} positive)",
                                      classified, secs, rate, positives)};
}

// ---- durability ----------------------------------------------------------------

recordindex::DatasetRecord durable_record(std::uint32_t i) {
  recordindex::DatasetRecord r;
  r.paper_id = fmt::format("2403.{:05}", i);
  r.paper_url = "https://arxiv.org/abs/" + r.paper_id;
  r.title = "Paper " + r.paper_id;
  r.dataset_url = "https://zenodo.org/record/" + std::to_string(i);
  r.description = fmt::format("Description number {}.", i);
  r.categories = {"cs.CL"};
  r.gate_score = 0.9;
  r.link_score = 19;
  r.selection_reason = linkextract::SelectionReason::margin;
  return r;
}

std::vector<float> durable_vector(std::uint32_t i) {
  std::vector<float> v(8, 0.0f);
  v[i % 8] = 1.0f;
  v[(i / 8) % 8] += 0.5f;
  return v;
}

recordindex::IndexOptions durable_options(const std::filesystem::path& dir) {
  recordindex::IndexOptions o;
  o.directory = dir;
  o.dimension = 8;
  o.compact_every = 150;  // kills also land inside compactions
  return o;
}

// Child: ingest `total` records, writing each index to `fd` once upsert returns.
[[noreturn]] void ingest_child(const std::filesystem::path& dir, std::uint32_t total, int fd) {
  try {
    recordindex::RecordIndex index(durable_options(dir));
    for (std::uint32_t i = 0; i < total; ++i) {
      index.upsert_embedded(durable_record(i), durable_vector(i));
      if (::write(fd, &i, sizeof i) != sizeof i) _exit(3);
    }
  } catch (...) {
    _exit(2);
  }
  _exit(0);
}

struct KillTrial {
  std::uint32_t kill_after = 0;  // acks read before SIGKILL; 0 lets the child finish
  std::size_t acked = 0;
  std::size_t recovered = 0;
  std::size_t lost = 0;
  bool restart_ok = false;
};

KillTrial run_kill_trial(std::uint32_t kill_after, std::uint32_t total) {
  KillTrial t;
  t.kill_after = kill_after;
  testing::TempDir dir;
  int fds[2];
  if (::pipe(fds) != 0) return t;
  const pid_t pid = ::fork();
  if (pid == 0) {
    ::close(fds[0]);
    ingest_child(dir.path(), total, fds[1]);
  }
  ::close(fds[1]);
  std::set<std::uint32_t> acked;
  std::uint32_t i = 0;
  bool killed = false;
  while (::read(fds[0], &i, sizeof i) == sizeof i) {
    acked.insert(i);
    if (!killed && kill_after != 0 && acked.size() >= kill_after) {
      ::kill(pid, SIGKILL);
      killed = true;
    }
  }
  ::close(fds[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  t.acked = acked.size();

  try {
    recordindex::RecordIndex index(durable_options(dir.path()));
    t.recovered = index.size();
    for (const auto id : acked) {
      const auto r = index.get(durable_record(id).paper_id);
      if (!r || r->description != durable_record(id).description) ++t.lost;
    }
    // the reopened index accepts the rest of the ingest and survives another restart
    for (std::uint32_t j = 0; j < total; ++j) {
      if (!index.get(durable_record(j).paper_id)) index.upsert_embedded(durable_record(j), durable_vector(j));
    }
  } catch (const std::exception&) {
    t.lost = t.acked;
    return t;
  }
  try {
    recordindex::RecordIndex again(durable_options(dir.path()));
    t.restart_ok = again.size() == total && again.pending_count() == 0;
  } catch (const std::exception&) {
    t.restart_ok = false;
  }
  return t;
}

Outcome durability() {
  constexpr std::uint32_t total = 1000;
  Outcome o;
  std::size_t lost = 0;
  for (const std::uint32_t kill_after : {1u, 149u, 150u, 437u, 900u, 0u}) {
    const auto t = run_kill_trial(kill_after, total);
    lost += t.lost;
    o.ok = o.ok && t.lost == 0 && t.restart_ok && t.recovered >= t.acked;
    o.detail += fmt::format(" [kill@{}: acked {}, recovered {}, lost {}{}]",
                            kill_after ? std::to_string(kill_after) : std::string("none"), t.acked, t.recovered,
                            t.lost, t.restart_ok ? "" : ", restart FAILED");
  }
  o.detail = fmt::format("{} acknowledged records lost;", lost) + o.detail;
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> check;
  double limit_seconds;  // 0: no time bound
};

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  // durability forks, so it runs before anything starts a thread
  const std::vector<Criterion> criteria = {
      {"durability (kill -9 during a 1000-record ingest)", durability, 0},
      {"scoring exactness", scoring_exactness, 1},
      {"selection conformance", selection_conformance, 5},
      {"window oracle", window_oracle, 10},
      {"zero-positive reclassification", zero_positive_reclassification, 0},
      {"retrieval oracle", retrieval_oracle, 5},
      {"end-to-end fixture run (cli and service)", e2e_fixture_run, 30},
      {"gate throughput floor", gate_throughput, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Steady::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      o.ok = false;
      o.detail += fmt::format(" (over the {:.0f} s bound)", c.limit_seconds);
    }
    failed += o.ok ? 0 : 1;
    fmt::print("{} {}: {} [{:.2f} s]\n", o.ok ? "PASS" : "FAIL", c.name, o.detail, secs);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
