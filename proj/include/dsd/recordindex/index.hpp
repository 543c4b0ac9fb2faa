#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsd/common/time.hpp"
#include "dsd/recordindex/embedding.hpp"
#include "dsd/recordindex/record.hpp"

namespace dsd::recordindex {

struct SearchHit {
  DatasetRecord record;
  double similarity = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct IndexEntry {
  DatasetRecord record;
  std::optional<std::vector<float>> embedding;  // absent while pending
};

// Immutable point-in-time state, ordered by paper_id.
struct IndexView {
  std::vector<std::shared_ptr<const IndexEntry>> entries;
  std::size_t pending = 0;

  std::shared_ptr<const IndexEntry> find(std::string_view paper_id) const;
};

struct IndexOptions {
  // Empty: memory only. Otherwise the directory holds meta.json,
  // snapshot.jsonl and journal.jsonl.
  std::filesystem::path directory;
  std::size_t dimension = ReferenceEmbedder::kDefaultDimension;
  // Rewrite the snapshot and truncate the journal after this many writes (0 = never).
  std::size_t compact_every = 1000;
  bool sync_writes = true;
  Clock clock = system_now;
};

// Single writer, many readers. Writers serialize on a mutex; readers take the
// current view and never block writers. A write returns only after its journal
// line has been flushed to disk.
class RecordIndex {
 public:
  // Replays snapshot then journal. A torn final journal line is dropped.
  // Throws InvalidArgument if the directory was built with another dimension,
  // ParseError on corruption elsewhere.
  explicit RecordIndex(IndexOptions options);
  ~RecordIndex();
  RecordIndex(const RecordIndex&) = delete;
  RecordIndex& operator=(const RecordIndex&) = delete;

  std::size_t dimension() const { return options_.dimension; }

  // Embeds the description and stores record plus vector, replacing any record
  // with the same paper_id. first_seen is kept from the old record, last_seen
  // is set from the clock. If the embedder is unavailable the record is stored
  // as pending. Returns the record id (the paper_id).
  std::string upsert(DatasetRecord record, const Embedder& embedder);

  // Same with a precomputed vector (normalized here); nullopt stores a pending record.
  std::string upsert_embedded(DatasetRecord record, std::optional<std::vector<float>> embedding);

  // Advances last_seen of an existing record. Returns false if it is absent.
  bool touch(std::string_view paper_id);

  // Re-embeds pending records. Returns how many were repaired.
  std::size_t repair_pending(const Embedder& embedder);

  // Exact cosine top-k over non-pending records. Ties: ascending paper_id.
  // Throws EmbedderUnavailable if the query cannot be embedded.
  std::vector<SearchHit> search(std::string_view query, std::size_t k, const Embedder& embedder) const;
  std::vector<SearchHit> search_vector(std::span<const float> query, std::size_t k) const;

  std::shared_ptr<const IndexView> view() const;
  std::size_t size() const { return view()->entries.size(); }
  std::size_t pending_count() const { return view()->pending; }
  std::optional<DatasetRecord> get(std::string_view paper_id) const;
  // Records ordered by paper_id.
  std::vector<DatasetRecord> records(std::size_t offset = 0, std::size_t limit = SIZE_MAX) const;

  // Writes a fresh snapshot and empties the journal.
  void compact();

 private:
  void open_storage();
  void replay_file(const std::filesystem::path& path, bool tolerate_torn_tail,
                   std::vector<std::shared_ptr<const IndexEntry>>& entries);
  std::string write_entry(DatasetRecord record, std::optional<std::vector<float>> embedding, bool touch);
  void append_journal(const IndexEntry& entry);
  void publish(std::shared_ptr<const IndexEntry> entry);
  void compact_locked();
  void check_dimension(std::span<const float> v) const;

  IndexOptions options_;
  std::mutex write_mu_;
  mutable std::mutex view_mu_;
  std::shared_ptr<const IndexView> view_;
  int journal_fd_ = -1;
  std::size_t writes_since_compaction_ = 0;
};

}  // namespace dsd::recordindex
