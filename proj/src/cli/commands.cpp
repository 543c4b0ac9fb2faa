#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "dsd/cli/cli.hpp"
#include "dsd/common/text.hpp"
#include "dsd/linkextract/url.hpp"
#include "dsd/net/fixture_transport.hpp"
#include "dsd/service/crawl.hpp"
#include "dsd/service/http_api.hpp"

namespace dsd::cli {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

// Routes spdlog to `err` for the duration of one run.
class LogScope {
 public:
  LogScope(std::ostream& err, const std::string& level) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("dsd", sink);
    logger->set_pattern("[%Y-%m-%d %H:%M:%S] [%l] %v");
    logger->set_level(spdlog::level::from_str(level));
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

std::unique_ptr<net::HttpTransport> make_transport(const std::string& fixtures) {
  if (!fixtures.empty()) return net::FixtureTransport::from_directory(fixtures);
  return std::make_unique<net::HttplibTransport>();
}

service::CrawlConfig load_config(const std::string& path) {
  if (!path.empty()) return service::load_config_file(path);
  if (const char* env = std::getenv("AUTODATASET_CONFIG"); env && *env) return service::load_config_file(env);
  return {};
}

std::vector<std::string> split_categories(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const std::string& item : raw) {
    std::size_t pos = 0;
    while (pos <= item.size()) {
      const std::size_t comma = item.find(',', pos);
      const std::string_view part = text::trim(std::string_view(item).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (!part.empty()) out.emplace_back(part);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  return out;
}

// At most `max_bytes` bytes, never splitting a UTF-8 sequence.
std::string utf8_prefix(std::string_view s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return std::string(s);
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return std::string(s.substr(0, cut));
}

struct CrawlFlags {
  std::vector<std::string> categories;
  std::string since;
  std::string until;
  std::string config;
  std::string out;
  std::string fixtures;
  std::size_t workers = 0;
};

int cmd_crawl(const CrawlFlags& flags, std::ostream& out) {
  service::CrawlConfig config;
  try {
    config = load_config(flags.config);
    if (!flags.categories.empty()) config.ingest.categories = ingest::CategorySet(split_categories(flags.categories));
    if (flags.since.empty() != flags.until.empty()) throw UsageError("--since and --until must be given together");
    if (!flags.since.empty()) {
      config.crawl.window_start = parse_timestamp(flags.since);
      config.crawl.window_end = parse_timestamp(flags.until);
    }
    if (!config.crawl.window_start) throw UsageError("crawl needs a window: pass --since/--until or set crawl.window_*");
    if (*config.crawl.window_start > *config.crawl.window_end) throw UsageError("--since is after --until");
    if (flags.workers > 0) config.crawl.worker_count = flags.workers;
    config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  auto transport = make_transport(flags.fixtures);
  recordindex::IndexOptions index_options;
  index_options.directory = config.index.path;
  index_options.dimension = config.index.dimension;
  recordindex::RecordIndex index(index_options);
  service::PipelineServices services(config, *transport, index, service::make_embedder(config.index, *transport));

  ingest::FeedQuery query;
  query.categories = config.ingest.categories;
  query.window_start = *config.crawl.window_start;
  query.window_end = *config.crawl.window_end;
  query.page_size = config.ingest.page_size;
  query.feed_url = config.ingest.feed_url;
  const auto papers = ingest::fetch_new_papers(*transport, query);
  spdlog::info("{} paper(s) in window", papers.size());

  service::AuditLog audit = config.service.audit_log.empty() ? service::AuditLog()
                                                             : service::AuditLog(config.service.audit_log);
  service::CrawlCounters counters;
  service::BatchOptions batch;
  batch.workers = config.crawl.worker_count;
  batch.audit = &audit;
  batch.counters = &counters;
  const auto outcomes = service::process_papers(papers, services, batch);

  std::ofstream file;
  std::ostream* sink = &out;
  if (!flags.out.empty()) {
    file.open(flags.out, std::ios::trunc);
    if (!file) throw Error("cannot write " + flags.out);
    sink = &file;
  }
  for (const auto& o : outcomes) {
    if (o.record) *sink << recordindex::to_json(*o.record).dump() << '\n';
  }
  sink->flush();

  service::CrawlStatus status;
  counters.snapshot(status);
  spdlog::info("papers {} gate+ {} described {} links {} records {} reclassified {} errors {}", status.papers_seen,
               status.gate_positives, status.descriptions_extracted, status.links_selected, status.records_written,
               status.reclassified_negatives, status.errors_count);
  return kOk;
}

int cmd_score_url(const std::string& url, const std::string& anchor, const std::string& context, std::ostream& out) {
  auto normalized = linkextract::normalize_url(url);
  if (!normalized) throw UsageError("not an http(s) URL: " + url);
  const linkextract::ScoredCandidate scored =
      linkextract::score_candidate({*normalized, anchor, context, "", 0});
  out << scored.score << '\n';
  for (const auto& hit : scored.feature_hits) out << hit.id << '\t' << hit.weight << '\t' << hit.count << '\n';
  return kOk;
}

int cmd_search(const std::string& query, std::size_t k, const std::string& index_dir, const std::string& config_path,
               const std::string& fixtures, std::ostream& out) {
  if (k == 0) throw UsageError("--k must be at least 1");
  const std::filesystem::path dir(index_dir);
  const auto meta_path = dir / "meta.json";
  if (!std::filesystem::exists(meta_path)) throw Error("no index at " + index_dir);
  std::ifstream meta_in(meta_path);
  const auto meta = nlohmann::json::parse(meta_in, nullptr, false);
  if (meta.is_discarded() || !meta.contains("dimension")) throw Error("unreadable " + meta_path.string());

  service::CrawlConfig config;
  try {
    config = load_config(config_path);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  config.index.dimension = meta["dimension"].get<std::size_t>();
  auto transport = make_transport(fixtures);
  const auto embedder = service::make_embedder(config.index, *transport);

  recordindex::IndexOptions options;
  options.directory = dir;
  options.dimension = config.index.dimension;
  options.compact_every = 0;
  const recordindex::RecordIndex index(options);
  for (const auto& hit : index.search(query, k, *embedder)) {
    out << hit.rank << '\t' << std::fixed << std::setprecision(4) << hit.similarity << '\t' << hit.record.paper_id
        << '\t' << hit.record.dataset_url.value_or("-") << '\t' << utf8_prefix(hit.record.description, 80) << '\n';
  }
  return kOk;
}

int cmd_serve(const std::string& host, int port, const std::string& config_path, const std::string& static_dir,
              const std::string& fixtures) {
  service::CrawlConfig config;
  try {
    config = load_config(config_path);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  auto transport = make_transport(fixtures);
  service::CrawlController controller(*transport, config);
  service::ServeOptions options;
  options.host = host;
  options.port = port;
  if (!static_dir.empty()) options.static_dir = static_dir;
  service::serve(controller, options);
  return kOk;
}

// Input: JSON lines {"paper_id": "...", "sentences": [{"text": "...", "label": true}, ...]}
int cmd_windows(const std::string& input, std::size_t budget, std::size_t radius, std::ostream& out) {
  std::ifstream in(input);
  if (!in) throw Error("cannot read " + input);
  const docparse::WhitespaceTokenizer tokenizer;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("sentences") || !j["sentences"].is_array()) {
      throw Error(input + ":" + std::to_string(line_no) + ": expected {\"paper_id\", \"sentences\": [...]}");
    }
    const std::size_t n = j["sentences"].size();
    std::vector<docparse::Sentence> sentences;
    auto labels = std::make_unique<bool[]>(n);
    for (const auto& s : j["sentences"]) {
      const std::string t = s.value("text", "");
      labels[sentences.size()] = s.value("label", false);
      sentences.push_back({sentences.size(), t, std::nullopt, std::max<std::size_t>(1, tokenizer.count(t))});
    }
    const auto windows =
        descextract::generate_training_windows(sentences, std::span<const bool>(labels.get(), n), budget, radius);
    descextract::write_windows_jsonl(out, j.value("paper_id", ""), windows);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset discovery pipeline: crawl arXiv, extract dataset descriptions and links, search them."};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  CrawlFlags crawl;
  auto* crawl_cmd = app.add_subcommand("crawl", "Process one time window and print records as JSON lines");
  crawl_cmd->add_option("--categories", crawl.categories, "Category codes, comma separated")->delimiter(',');
  crawl_cmd->add_option("--since", crawl.since, "Window start (inclusive), e.g. 2024-03-01");
  crawl_cmd->add_option("--until", crawl.until, "Window end (exclusive)");
  crawl_cmd->add_option("--config", crawl.config, "Config file (JSON)");
  crawl_cmd->add_option("--out", crawl.out, "Write records here instead of stdout");
  crawl_cmd->add_option("--fixtures", crawl.fixtures, "Serve all HTTP from a recorded fixture directory");
  crawl_cmd->add_option("--workers", crawl.workers, "Worker threads (overrides crawl.worker_count)");

  std::string url, anchor, context;
  auto* score_cmd = app.add_subcommand("score-url", "Print the rule score of one link and its feature hits");
  score_cmd->add_option("--url", url, "Link to score")->required();
  score_cmd->add_option("--anchor", anchor, "Anchor text");
  score_cmd->add_option("--context", context, "Surrounding sentences");

  std::string query, index_dir, search_config, search_fixtures;
  std::size_t k = 10;
  auto* search_cmd = app.add_subcommand("search", "Semantic search over an index directory");
  search_cmd->add_option("--query", query, "Natural-language query")->required();
  search_cmd->add_option("--k", k, "Number of results");
  search_cmd->add_option("--index", index_dir, "Index directory")->required();
  search_cmd->add_option("--config", search_config, "Config file for the embedder settings");
  search_cmd->add_option("--fixtures", search_fixtures, "Recorded fixture directory for a remote embedder");

  std::string host = "127.0.0.1", serve_config, static_dir, serve_fixtures;
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP control plane");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port");
  serve_cmd->add_option("--config", serve_config, "Config file (default: $AUTODATASET_CONFIG)");
  serve_cmd->add_option("--static-dir", static_dir, "Directory served under /");
  serve_cmd->add_option("--fixtures", serve_fixtures, "Serve all HTTP from a recorded fixture directory");

  std::string windows_input;
  std::size_t budget = 512, radius = 2;
  auto* windows_cmd = app.add_subcommand("windows", "Export labelled training windows as JSON lines");
  windows_cmd->add_option("--input", windows_input, "JSON lines of labelled sentences")->required();
  windows_cmd->add_option("--budget", budget, "Token budget per window");
  windows_cmd->add_option("--radius", radius, "Seed radius");

  std::vector<std::string> argv_storage = args.empty() ? std::vector<std::string>{"dsd"} : args;
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUsage;
  }

  LogScope logs(err, log_level);
  try {
    if (*crawl_cmd) return cmd_crawl(crawl, out);
    if (*score_cmd) return cmd_score_url(url, anchor, context, out);
    if (*search_cmd) return cmd_search(query, k, index_dir, search_config, search_fixtures, out);
    if (*serve_cmd) return cmd_serve(host, port, serve_config, static_dir, serve_fixtures);
    if (*windows_cmd) return cmd_windows(windows_input, budget, radius, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace dsd::cli
