#include "dsd/service/crawl.hpp"

#include <deque>
#include <spdlog/spdlog.h>

namespace dsd::service {

namespace {

// Bounded MPMC queue; close() wakes everyone and makes pop() drain then fail.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

  bool push(T value) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  // Drops everything not yet taken and closes.
  void abandon() {
    std::lock_guard lock(mu_);
    items_.clear();
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

bool is_error(Disposition d) {
  return d == Disposition::pdf_unavailable || d == Disposition::unprocessable || d == Disposition::backend_error;
}

}  // namespace

std::string_view to_string(CrawlState state) {
  switch (state) {
    case CrawlState::idle:
      return "idle";
    case CrawlState::running:
      return "running";
    case CrawlState::stopping:
      return "stopping";
  }
  return "?";
}

nlohmann::ordered_json to_json(const CrawlStatus& s) {
  auto time_or_null = [](const std::optional<Timestamp>& t) {
    return t ? nlohmann::ordered_json(format_timestamp(*t)) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["state"] = to_string(s.state);
  j["run_id"] = s.run_id;
  j["papers_seen"] = s.papers_seen;
  j["gate_positives"] = s.gate_positives;
  j["descriptions_extracted"] = s.descriptions_extracted;
  j["links_selected"] = s.links_selected;
  j["records_written"] = s.records_written;
  j["reclassified_negatives"] = s.reclassified_negatives;
  j["errors_count"] = s.errors_count;
  j["started_at"] = time_or_null(s.started_at);
  j["last_activity"] = time_or_null(s.last_activity);
  return j;
}

void CrawlCounters::reset() {
  records_ = 0;
  links_ = 0;
  descriptions_ = 0;
  gate_positives_ = 0;
  papers_seen_ = 0;
  reclassified_ = 0;
  errors_ = 0;
  last_activity_ = 0;
  active_ = false;
}

void CrawlCounters::record(const PipelineOutcome& o, Timestamp at) {
  papers_seen_.fetch_add(1);
  if (o.gate_positive) gate_positives_.fetch_add(1);
  if (o.description_extracted) descriptions_.fetch_add(1);
  if (o.selection && o.selection->primary_url) links_.fetch_add(1);
  if (o.disposition == Disposition::record_written) records_.fetch_add(1);
  if (o.disposition == Disposition::reclassified_negative) reclassified_.fetch_add(1);
  if (is_error(o.disposition)) errors_.fetch_add(1);
  last_activity_ = at.time_since_epoch().count();
  active_ = true;
}

void CrawlCounters::add_error(Timestamp at) {
  errors_.fetch_add(1);
  last_activity_ = at.time_since_epoch().count();
  active_ = true;
}

void CrawlCounters::snapshot(CrawlStatus& s) const {
  s.records_written = records_.load();
  s.links_selected = links_.load();
  s.descriptions_extracted = descriptions_.load();
  s.gate_positives = gate_positives_.load();
  s.papers_seen = papers_seen_.load();
  s.reclassified_negatives = reclassified_.load();
  s.errors_count = errors_.load();
  if (active_.load()) s.last_activity = Timestamp(std::chrono::seconds(last_activity_.load()));
}

std::vector<PipelineOutcome> process_papers(const std::vector<ingest::PaperMeta>& papers,
                                            PipelineServices& services, const BatchOptions& options) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, std::max<std::size_t>(1, papers.size())));
  const Clock clock = options.clock ? options.clock : Clock(system_now);
  BoundedQueue<std::size_t> queue(options.queue_capacity ? options.queue_capacity : 2 * workers);
  std::vector<std::optional<PipelineOutcome>> results(papers.size());
  std::mutex error_mu;
  std::exception_ptr failure;

  auto stopping = [&] { return options.stop && options.stop->load(); };
  auto worker = [&] {
    while (auto index = queue.pop()) {
      try {
        PipelineOutcome outcome = run_pipeline(papers[*index], services);
        const Timestamp now = clock();
        if (options.counters) options.counters->record(outcome, now);
        if (options.audit) options.audit->write(outcome, now);
        results[*index] = std::move(outcome);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!failure) failure = std::current_exception();
        queue.abandon();
      }
      if (stopping()) queue.abandon();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (std::size_t i = 0; i < papers.size(); ++i) {
    if (stopping() || !queue.push(i)) break;
  }
  queue.close();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<PipelineOutcome> out;
  out.reserve(papers.size());
  for (auto& r : results) {
    if (r) out.push_back(std::move(*r));
  }
  return out;
}

CrawlController::CrawlController(net::HttpTransport& transport, CrawlConfig config, Clock clock)
    : transport_(transport), clock_(clock ? std::move(clock) : Clock(system_now)), config_(std::move(config)) {
  config_.validate();
  open_index();
}

CrawlController::~CrawlController() {
  stop();
  wait();
}

void CrawlController::open_index() {
  recordindex::IndexOptions options;
  options.directory = config_.index.path;
  options.dimension = config_.index.dimension;
  options.clock = clock_;
  index_.reset();
  index_ = std::make_shared<recordindex::RecordIndex>(options);
  embedder_ = make_embedder(config_.index, transport_);
}

CrawlConfig CrawlController::config() const {
  std::lock_guard lock(mu_);
  return config_;
}

void CrawlController::set_config(const CrawlConfig& config) {
  config.validate();
  std::lock_guard lock(mu_);
  if (state_.load() != CrawlState::idle) throw Conflict("configuration cannot change while a crawl is running");
  const bool reopen = !(config.index == config_.index);
  const CrawlConfig previous = config_;
  config_ = config;
  if (reopen) {
    try {
      open_index();
    } catch (...) {
      config_ = previous;
      open_index();
      throw;
    }
  }
}

std::uint64_t CrawlController::start() {
  std::lock_guard lock(mu_);
  if (state_.load() != CrawlState::idle) throw Conflict("a crawl is already running");
  if (runner_.joinable()) runner_.join();
  stop_requested_ = false;
  counters_.reset();
  started_at_ = clock_();
  const std::uint64_t id = ++run_id_;
  state_ = CrawlState::running;
  runner_ = std::thread([this, config = config_, id] { run(config, id); });
  return id;
}

void CrawlController::stop() {
  {
    std::lock_guard lock(mu_);
    if (state_.load() == CrawlState::idle) return;
    stop_requested_ = true;
    CrawlState expected = CrawlState::running;
    state_.compare_exchange_strong(expected, CrawlState::stopping);
  }
  stop_cv_.notify_all();
}

void CrawlController::wait() {
  std::thread runner;
  {
    std::lock_guard lock(mu_);
    runner = std::move(runner_);
  }
  if (runner.joinable()) runner.join();
}

CrawlStatus CrawlController::status() const {
  CrawlStatus s;
  counters_.snapshot(s);
  s.state = state_.load();
  std::lock_guard lock(mu_);
  s.run_id = run_id_;
  s.started_at = started_at_;
  return s;
}

std::shared_ptr<recordindex::RecordIndex> CrawlController::index() const {
  std::lock_guard lock(mu_);
  return index_;
}

std::shared_ptr<const recordindex::Embedder> CrawlController::embedder() const {
  std::lock_guard lock(mu_);
  return embedder_;
}

void CrawlController::set_retry_sleep(std::function<void(std::chrono::milliseconds)> sleep) {
  std::lock_guard lock(mu_);
  retry_sleep_ = std::move(sleep);
}

bool CrawlController::wait_or_stop(std::chrono::seconds delay) {
  std::unique_lock lock(mu_);
  return stop_cv_.wait_for(lock, delay, [&] { return stop_requested_.load(); });
}

void CrawlController::process_window(PipelineServices& services, const CrawlConfig& config, Timestamp start,
                                     Timestamp end, AuditLog& audit) {
  ingest::FeedQuery query;
  query.categories = config.ingest.categories;
  query.window_start = start;
  query.window_end = end;
  query.page_size = config.ingest.page_size;
  query.feed_url = config.ingest.feed_url;
  const std::vector<ingest::PaperMeta> papers = ingest::fetch_new_papers(transport_, query);
  spdlog::info("crawl window [{}, {}): {} paper(s)", format_timestamp(start), format_timestamp(end), papers.size());

  BatchOptions options;
  options.workers = config.crawl.worker_count;
  options.counters = &counters_;
  options.audit = &audit;
  options.stop = &stop_requested_;
  options.clock = clock_;
  process_papers(papers, services, options);
}

void CrawlController::run(CrawlConfig config, std::uint64_t run_id) {
  std::shared_ptr<recordindex::RecordIndex> index;
  std::shared_ptr<const recordindex::Embedder> embedder;
  std::function<void(std::chrono::milliseconds)> sleep;
  {
    std::lock_guard lock(mu_);
    index = index_;
    embedder = embedder_;
    sleep = retry_sleep_;
  }
  try {
    PipelineServices services(config, transport_, *index, embedder);
    if (sleep) services.set_retry_sleep(sleep);
    AuditLog audit = config.service.audit_log.empty() ? AuditLog() : AuditLog(config.service.audit_log);

    if (config.crawl.window_start) {
      process_window(services, config, *config.crawl.window_start, *config.crawl.window_end, audit);
    } else {
      const auto interval = std::chrono::seconds(config.ingest.poll_interval_secs);
      Timestamp last_end = clock_() - interval;
      while (!stop_requested_) {
        const Timestamp end = clock_();
        std::chrono::seconds delay = interval;
        try {
          process_window(services, config, last_end, end, audit);
          last_end = end;
        } catch (const RateLimitedError& e) {
          spdlog::warn("feed rate limited, backing off {}s", e.retry_after().count());
          counters_.add_error(clock_());
          delay = std::max(delay, e.retry_after());
        } catch (const Error& e) {
          spdlog::warn("feed poll failed: {}", e.what());
          counters_.add_error(clock_());
        }
        if (wait_or_stop(delay)) break;
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("crawl run {} failed: {}", run_id, e.what());
    counters_.add_error(clock_());
  }
  state_ = CrawlState::idle;
  spdlog::info("crawl run {} finished", run_id);
}

}  // namespace dsd::service
