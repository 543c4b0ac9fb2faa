#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dsd/service/config.hpp"
#include "dsd/service/pipeline.hpp"

namespace dsd::service {

// Request conflicts with the current crawl state (start while running, config
// change while running).
class Conflict : public Error {
 public:
  using Error::Error;
};

enum class CrawlState { idle, running, stopping };
std::string_view to_string(CrawlState state);

struct CrawlStatus {
  CrawlState state = CrawlState::idle;
  std::uint64_t run_id = 0;
  std::uint64_t papers_seen = 0;
  std::uint64_t gate_positives = 0;
  std::uint64_t descriptions_extracted = 0;
  std::uint64_t links_selected = 0;
  std::uint64_t records_written = 0;
  std::uint64_t reclassified_negatives = 0;
  std::uint64_t errors_count = 0;
  std::optional<Timestamp> started_at;
  std::optional<Timestamp> last_activity;
};

nlohmann::ordered_json to_json(const CrawlStatus& status);

// Lock-free run counters. Stages bump counters downstream-last and snapshots
// read them downstream-first, so every snapshot satisfies
// records_written <= descriptions_extracted <= gate_positives <= papers_seen.
class CrawlCounters {
 public:
  void reset();
  void record(const PipelineOutcome& outcome, Timestamp at);
  void add_error(Timestamp at);
  // Fills the counter fields of `status`.
  void snapshot(CrawlStatus& status) const;

 private:
  std::atomic<std::uint64_t> papers_seen_{0};
  std::atomic<std::uint64_t> gate_positives_{0};
  std::atomic<std::uint64_t> descriptions_{0};
  std::atomic<std::uint64_t> links_{0};
  std::atomic<std::uint64_t> records_{0};
  std::atomic<std::uint64_t> reclassified_{0};
  std::atomic<std::uint64_t> errors_{0};
  std::atomic<std::int64_t> last_activity_{0};
  std::atomic<bool> active_{false};
};

struct BatchOptions {
  std::size_t workers = 1;
  std::size_t queue_capacity = 0;  // 0: 2 * workers
  CrawlCounters* counters = nullptr;
  AuditLog* audit = nullptr;
  const std::atomic<bool>* stop = nullptr;  // queued papers are dropped once set
  Clock clock = system_now;
};

// Runs the pipeline over `papers` on a worker pool fed through a bounded
// queue. Returns one outcome per processed paper, in input order.
std::vector<PipelineOutcome> process_papers(const std::vector<ingest::PaperMeta>& papers,
                                            PipelineServices& services, const BatchOptions& options);

// Owns the configuration, the record index and at most one crawl run.
class CrawlController {
 public:
  CrawlController(net::HttpTransport& transport, CrawlConfig config, Clock clock = system_now);
  ~CrawlController();

  CrawlConfig config() const;
  // Throws Conflict while a run is active, InvalidArgument on a bad config.
  void set_config(const CrawlConfig& config);

  // Throws Conflict unless idle. Returns the run id.
  std::uint64_t start();
  // Asks the run to finish its in-flight papers. No-op when idle.
  void stop();
  // Blocks until the current run (if any) has finished.
  void wait();
  CrawlStatus status() const;

  std::shared_ptr<recordindex::RecordIndex> index() const;
  std::shared_ptr<const recordindex::Embedder> embedder() const;

  // Test hook: replaces the retry sleep of every run's download policy.
  void set_retry_sleep(std::function<void(std::chrono::milliseconds)> sleep);

 private:
  void open_index();
  void run(CrawlConfig config, std::uint64_t run_id);
  void process_window(PipelineServices& services, const CrawlConfig& config, Timestamp start, Timestamp end,
                      AuditLog& audit);
  bool wait_or_stop(std::chrono::seconds delay);

  net::HttpTransport& transport_;
  Clock clock_;

  mutable std::mutex mu_;
  std::condition_variable stop_cv_;
  CrawlConfig config_;
  std::shared_ptr<recordindex::RecordIndex> index_;
  std::shared_ptr<const recordindex::Embedder> embedder_;
  std::function<void(std::chrono::milliseconds)> retry_sleep_;
  std::thread runner_;
  std::atomic<CrawlState> state_{CrawlState::idle};
  std::atomic<bool> stop_requested_{false};
  std::uint64_t run_id_ = 0;
  std::optional<Timestamp> started_at_;
  CrawlCounters counters_;
};

}  // namespace dsd::service
