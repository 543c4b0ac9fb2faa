#include "dsd/recordindex/index.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <fstream>
#include <map>
#include <spdlog/spdlog.h>
#include <system_error>

#include "dsd/simd/kernels.hpp"

namespace dsd::recordindex {

namespace fs = std::filesystem;

namespace {

constexpr int kFormat = 1;

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno(what);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void sync_fd(int fd, const std::string& what) {
  if (::fdatasync(fd) != 0) throw_errno(what);
}

void sync_directory(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// tmp file, fsync, rename, fsync directory
void replace_file(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + tmp.string());
  try {
    write_all(fd, content, "write " + tmp.string());
    sync_fd(fd, "sync " + tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  fs::rename(tmp, path);
  sync_directory(path.parent_path());
}

std::string entry_line(const IndexEntry& e) {
  nlohmann::ordered_json j = to_json(e.record);
  j["embedding"] = e.embedding ? nlohmann::ordered_json(*e.embedding) : nlohmann::ordered_json(nullptr);
  std::string line = j.dump();
  line.push_back('\n');
  return line;
}

}  // namespace

std::shared_ptr<const IndexEntry> IndexView::find(std::string_view paper_id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), paper_id,
                             [](const std::shared_ptr<const IndexEntry>& e, std::string_view id) {
                               return e->record.paper_id < id;
                             });
  if (it != entries.end() && (*it)->record.paper_id == paper_id) return *it;
  return nullptr;
}

RecordIndex::RecordIndex(IndexOptions options) : options_(std::move(options)) {
  if (options_.dimension == 0) throw InvalidArgument("index dimension must be positive");
  if (!options_.clock) options_.clock = system_now;
  view_ = std::make_shared<const IndexView>();
  if (!options_.directory.empty()) open_storage();
}

RecordIndex::~RecordIndex() {
  if (journal_fd_ >= 0) ::close(journal_fd_);
}

void RecordIndex::open_storage() {
  const fs::path& dir = options_.directory;
  fs::create_directories(dir);

  const fs::path meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    const auto meta = nlohmann::json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.contains("dimension")) throw ParseError("unreadable " + meta_path.string(), 0);
    const auto dim = meta["dimension"].get<std::size_t>();
    if (dim != options_.dimension) {
      throw InvalidArgument("index at " + dir.string() + " holds " + std::to_string(dim) +
                            "-dimensional vectors but the embedder produces " + std::to_string(options_.dimension) +
                            "; rebuild the index for the new backend");
    }
  } else {
    const nlohmann::ordered_json meta = {{"format", kFormat}, {"dimension", options_.dimension}};
    replace_file(meta_path, meta.dump() + "\n");
  }

  std::vector<std::shared_ptr<const IndexEntry>> loaded;
  replay_file(dir / "snapshot.jsonl", false, loaded);
  replay_file(dir / "journal.jsonl", true, loaded);

  // Later lines win.
  std::map<std::string, std::shared_ptr<const IndexEntry>, std::less<>> latest;
  for (auto& e : loaded) latest[e->record.paper_id] = std::move(e);
  auto view = std::make_shared<IndexView>();
  for (auto& [id, e] : latest) {
    if (!e->embedding) ++view->pending;
    view->entries.push_back(std::move(e));
  }
  view_ = std::move(view);

  const fs::path journal = dir / "journal.jsonl";
  journal_fd_ = ::open(journal.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (journal_fd_ < 0) throw_errno("open " + journal.string());
  spdlog::debug("index {}: {} record(s), {} pending", dir.string(), view_->entries.size(), view_->pending);
}

void RecordIndex::replay_file(const fs::path& path, bool tolerate_torn_tail,
                              std::vector<std::shared_ptr<const IndexEntry>>& entries) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::size_t good_end = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string_view line(content.data() + pos, (complete ? nl : content.size()) - pos);
    const std::size_t next = complete ? nl + 1 : content.size();
    const bool last = next >= content.size();
    try {
      if (!complete) throw ParseError("line not terminated", pos);
      if (!line.empty()) {
        const auto j = nlohmann::json::parse(line);
        IndexEntry e{record_from_json(j), std::nullopt};
        if (j.contains("embedding") && !j["embedding"].is_null()) {
          auto v = j["embedding"].get<std::vector<float>>();
          if (v.size() != options_.dimension) throw ParseError("embedding has the wrong dimension", pos);
          e.embedding = std::move(v);
        }
        entries.push_back(std::make_shared<const IndexEntry>(std::move(e)));
      }
    } catch (const std::exception& ex) {
      if (tolerate_torn_tail && last) {
        spdlog::warn("{}: dropping torn final line ({})", path.string(), ex.what());
        fs::resize_file(path, good_end);
        return;
      }
      throw ParseError(path.string() + ": corrupt line: " + ex.what(), pos);
    }
    pos = next;
    good_end = next;
  }
}

void RecordIndex::check_dimension(std::span<const float> v) const {
  if (v.size() != options_.dimension) {
    throw InvalidArgument("vector has " + std::to_string(v.size()) + " components, index expects " +
                          std::to_string(options_.dimension));
  }
}

void RecordIndex::append_journal(const IndexEntry& entry) {
  if (journal_fd_ < 0) return;
  write_all(journal_fd_, entry_line(entry), "append journal");
  if (options_.sync_writes) sync_fd(journal_fd_, "sync journal");
}

void RecordIndex::publish(std::shared_ptr<const IndexEntry> entry) {
  const std::shared_ptr<const IndexView> current = view();
  auto next = std::make_shared<IndexView>(*current);
  auto it = std::lower_bound(next->entries.begin(), next->entries.end(), entry->record.paper_id,
                             [](const std::shared_ptr<const IndexEntry>& e, const std::string& id) {
                               return e->record.paper_id < id;
                             });
  if (it != next->entries.end() && (*it)->record.paper_id == entry->record.paper_id) {
    if (!(*it)->embedding) --next->pending;
    *it = std::move(entry);
    if (!(*it)->embedding) ++next->pending;
  } else {
    if (!entry->embedding) ++next->pending;
    next->entries.insert(it, std::move(entry));
  }
  std::lock_guard lock(view_mu_);
  view_ = std::move(next);
}

std::shared_ptr<const IndexView> RecordIndex::view() const {
  std::lock_guard lock(view_mu_);
  return view_;
}

std::string RecordIndex::write_entry(DatasetRecord record, std::optional<std::vector<float>> embedding, bool touch) {
  if (embedding) {
    check_dimension(*embedding);
    if (!normalize(*embedding)) throw InvalidArgument("cannot store a zero embedding");
  }
  std::lock_guard lock(write_mu_);
  if (touch) {
    const Timestamp now = options_.clock();
    const auto existing = view()->find(record.paper_id);
    record.first_seen = existing ? existing->record.first_seen : now;
    record.last_seen = existing ? std::max(now, existing->record.last_seen) : now;
  }
  record.validate();
  auto entry = std::make_shared<const IndexEntry>(IndexEntry{std::move(record), std::move(embedding)});
  append_journal(*entry);
  std::string id = entry->record.paper_id;
  publish(std::move(entry));
  if (options_.compact_every != 0 && ++writes_since_compaction_ >= options_.compact_every) compact_locked();
  return id;
}

std::string RecordIndex::upsert_embedded(DatasetRecord record, std::optional<std::vector<float>> embedding) {
  return write_entry(std::move(record), std::move(embedding), true);
}

std::string RecordIndex::upsert(DatasetRecord record, const Embedder& embedder) {
  if (embedder.dimension() != options_.dimension) {
    throw InvalidArgument("embedder dimension " + std::to_string(embedder.dimension()) + " does not match index dimension " +
                          std::to_string(options_.dimension));
  }
  std::optional<std::vector<float>> embedding;
  try {
    embedding = embedder.embed(record.description);
  } catch (const EmbedderUnavailable& e) {
    spdlog::warn("record {} stored without embedding: {}", record.paper_id, e.what());
  }
  return write_entry(std::move(record), std::move(embedding), true);
}

bool RecordIndex::touch(std::string_view paper_id) {
  const auto current = view()->find(paper_id);
  if (!current) return false;
  write_entry(current->record, current->embedding, true);
  return true;
}

std::size_t RecordIndex::repair_pending(const Embedder& embedder) {
  std::size_t repaired = 0;
  const auto snapshot = view();
  for (const auto& entry : snapshot->entries) {
    if (entry->embedding) continue;
    std::vector<float> v;
    try {
      v = embedder.embed(entry->record.description);
    } catch (const EmbedderUnavailable& e) {
      spdlog::warn("repair of {} deferred: {}", entry->record.paper_id, e.what());
      continue;
    }
    // A newer write may have replaced the record since the snapshot.
    const auto current = view()->find(entry->record.paper_id);
    if (!current || current->embedding) continue;
    write_entry(current->record, std::move(v), false);
    ++repaired;
  }
  return repaired;
}

std::vector<SearchHit> RecordIndex::search_vector(std::span<const float> query, std::size_t k) const {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  check_dimension(query);
  std::vector<float> q(query.begin(), query.end());
  const bool nonzero = normalize(q);

  const auto snapshot = view();
  struct Scored {
    double similarity;
    const IndexEntry* entry;
  };
  std::vector<Scored> scored;
  scored.reserve(snapshot->entries.size());
  for (const auto& e : snapshot->entries) {
    if (!e->embedding) continue;
    const double s = nonzero ? std::clamp(simd::dot(q, *e->embedding), -1.0, 1.0) : 0.0;
    scored.push_back({s, e.get()});
  }
  const auto before = [](const Scored& a, const Scored& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.entry->record.paper_id < b.entry->record.paper_id;
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), before);

  std::vector<SearchHit> hits;
  hits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) hits.push_back({scored[i].entry->record, scored[i].similarity, i + 1});
  return hits;
}

std::vector<SearchHit> RecordIndex::search(std::string_view query, std::size_t k, const Embedder& embedder) const {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (embedder.dimension() != options_.dimension) {
    throw InvalidArgument("embedder dimension does not match index dimension");
  }
  const std::vector<float> q = embedder.embed(query);
  return search_vector(q, k);
}

std::optional<DatasetRecord> RecordIndex::get(std::string_view paper_id) const {
  if (auto e = view()->find(paper_id)) return e->record;
  return std::nullopt;
}

std::vector<DatasetRecord> RecordIndex::records(std::size_t offset, std::size_t limit) const {
  const auto snapshot = view();
  std::vector<DatasetRecord> out;
  for (std::size_t i = offset; i < snapshot->entries.size() && out.size() < limit; ++i) {
    out.push_back(snapshot->entries[i]->record);
  }
  return out;
}

void RecordIndex::compact() {
  std::lock_guard lock(write_mu_);
  compact_locked();
}

void RecordIndex::compact_locked() {
  writes_since_compaction_ = 0;
  if (options_.directory.empty()) return;
  const auto snapshot = view();
  std::string content;
  for (const auto& e : snapshot->entries) content += entry_line(*e);
  replace_file(options_.directory / "snapshot.jsonl", content);
  // Replaying the journal over the new snapshot is idempotent, so a crash
  // before this truncation loses nothing.
  if (::ftruncate(journal_fd_, 0) != 0) throw_errno("truncate journal");
  sync_fd(journal_fd_, "sync journal");
}

}  // namespace dsd::recordindex
