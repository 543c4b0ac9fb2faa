#include "dsd/service/config.hpp"

#include <fstream>

namespace dsd::service {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json optional_time(const std::optional<Timestamp>& t) {
  return t ? ordered_json(format_timestamp(*t)) : ordered_json(nullptr);
}

// Reads the keys of one section, rejecting anything it does not know.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) throw InvalidArgument(std::string("config: '") + name + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.push_back(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument("config: " + path(key) + " has the wrong type");
    }
  }

  template <typename T>
  void read_unsigned(const char* key, T& out) {
    seen_.push_back(key);
    if (!node_ || !node_->contains(key)) return;
    const json& v = node_->at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw InvalidArgument("config: " + path(key) + " must be a non-negative integer");
    }
    out = v.get<T>();
  }

  void read_time(const char* key, std::optional<Timestamp>& out) {
    seen_.push_back(key);
    if (!node_ || !node_->contains(key)) return;
    const json& v = node_->at(key);
    if (v.is_null()) {
      out.reset();
    } else if (v.is_string()) {
      out = parse_timestamp(v.get<std::string>());
    } else {
      throw InvalidArgument("config: " + path(key) + " must be a timestamp string or null");
    }
  }

  const json* child(const char* key) {
    seen_.push_back(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  std::string path(const char* key) const { return std::string(name_) + "." + key; }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw InvalidArgument("config: unknown key " + std::string(name_) + "." + key);
      }
    }
  }

 private:
  const char* name_;
  const json* node_ = nullptr;
  std::vector<std::string> seen_;
};

void require_backend(const std::string& key, const std::string& backend, const std::string& url) {
  if (backend != "heuristic" && backend != "remote") {
    throw InvalidArgument("config: " + key + ".backend must be 'heuristic' or 'remote'");
  }
  if (backend == "remote" && url.empty()) throw InvalidArgument("config: " + key + ".remote_url is required for the remote backend");
}

}  // namespace

void CrawlConfig::validate() const {
  if (ingest.categories.empty()) throw InvalidArgument("config: ingest.categories must not be empty");
  if (ingest.poll_interval_secs < 1) throw InvalidArgument("config: ingest.poll_interval_secs must be >= 1");
  if (ingest.page_size < 1 || ingest.page_size > 2000) throw InvalidArgument("config: ingest.page_size must be in [1, 2000]");
  if (ingest.feed_url.empty()) throw InvalidArgument("config: ingest.feed_url must not be empty");
  if (crawl.window_start.has_value() != crawl.window_end.has_value()) {
    throw InvalidArgument("config: crawl.window_start and crawl.window_end must be set together");
  }
  if (crawl.window_start && *crawl.window_start > *crawl.window_end) {
    throw InvalidArgument("config: crawl.window_start is after crawl.window_end");
  }
  if (crawl.worker_count < 1) throw InvalidArgument("config: crawl.worker_count must be >= 1");
  if (!(gate.threshold >= 0.0 && gate.threshold <= 1.0)) throw InvalidArgument("config: gate.threshold must be in [0, 1]");
  require_backend("gate", gate.backend, gate.remote_url);
  if (docparse.max_downloads < 1) throw InvalidArgument("config: docparse.max_downloads must be >= 1");
  if (docparse.token_budget < 1) throw InvalidArgument("config: docparse.token_budget must be >= 1");
  if (docparse.retry_cap < 0) throw InvalidArgument("config: docparse.retry_cap must be >= 0");
  if (!(desc.threshold >= 0.0 && desc.threshold <= 1.0)) throw InvalidArgument("config: desc.threshold must be in [0, 1]");
  require_backend("desc", desc.backend, desc.remote_url);
  try {
    link.thresholds.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("config: link.thresholds: ") + e.what());
  }
  if (link.verifier_enabled && link.verifier_url.empty()) {
    throw InvalidArgument("config: link.verifier_url is required when link.verifier_enabled is true");
  }
  if (link.max_decompressed_mb < 1) throw InvalidArgument("config: link.max_decompressed_mb must be >= 1");
  if (index.embedder != "reference" && index.embedder != "remote") {
    throw InvalidArgument("config: index.embedder must be 'reference' or 'remote'");
  }
  if (index.embedder == "remote" && index.remote_url.empty()) {
    throw InvalidArgument("config: index.remote_url is required for the remote embedder");
  }
  if (index.dimension < 1) throw InvalidArgument("config: index.dimension must be >= 1");
}

ordered_json to_json(const CrawlConfig& c) {
  ordered_json j;
  j["ingest"] = {{"categories", c.ingest.categories.codes()},
                 {"poll_interval_secs", c.ingest.poll_interval_secs},
                 {"page_size", c.ingest.page_size},
                 {"feed_url", c.ingest.feed_url}};
  j["crawl"] = {{"window_start", optional_time(c.crawl.window_start)},
                {"window_end", optional_time(c.crawl.window_end)},
                {"worker_count", c.crawl.worker_count}};
  j["gate"] = {{"threshold", c.gate.threshold}, {"backend", c.gate.backend}, {"remote_url", c.gate.remote_url}};
  j["docparse"] = {{"service_url", c.docparse.service_url},
                   {"max_downloads", c.docparse.max_downloads},
                   {"token_budget", c.docparse.token_budget},
                   {"retry_cap", c.docparse.retry_cap}};
  j["desc"] = {{"threshold", c.desc.threshold},
               {"seed_radius", c.desc.seed_radius},
               {"backend", c.desc.backend},
               {"remote_url", c.desc.remote_url}};
  const auto& t = c.link.thresholds;
  j["link"] = {{"mode", linkextract::to_string(c.link.mode)},
               {"thresholds",
                {{"tau_high", t.tau_high}, {"tau_mid", t.tau_mid}, {"delta", t.delta}, {"top_k", t.top_k}, {"tau_min", t.tau_min}}},
               {"verifier_url", c.link.verifier_url},
               {"verifier_enabled", c.link.verifier_enabled},
               {"max_decompressed_mb", c.link.max_decompressed_mb}};
  j["index"] = {{"path", c.index.path},
                {"embedder", c.index.embedder},
                {"dimension", c.index.dimension},
                {"remote_url", c.index.remote_url}};
  j["service"] = {{"audit_log", c.service.audit_log}};
  return j;
}

CrawlConfig config_from_json(const json& j, const CrawlConfig& base) {
  if (!j.is_object()) throw InvalidArgument("config: top level must be a JSON object");
  static constexpr const char* kSections[] = {"ingest", "crawl", "gate", "docparse", "desc", "link", "index", "service"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kSections), std::end(kSections), [&](const char* s) { return key == s; }) ==
        std::end(kSections)) {
      throw InvalidArgument("config: unknown section '" + key + "'");
    }
  }
  CrawlConfig c = base;
  try {
    Section ingest(j, "ingest");
    if (const json* cats = ingest.child("categories")) {
      std::vector<std::string> codes;
      try {
        codes = cats->get<std::vector<std::string>>();
      } catch (const json::exception&) {
        throw InvalidArgument("config: ingest.categories must be a list of strings");
      }
      c.ingest.categories = ingest::CategorySet(std::move(codes));
    }
    ingest.read("poll_interval_secs", c.ingest.poll_interval_secs);
    ingest.read_unsigned("page_size", c.ingest.page_size);
    ingest.read("feed_url", c.ingest.feed_url);
    ingest.finish();

    Section crawl(j, "crawl");
    crawl.read_time("window_start", c.crawl.window_start);
    crawl.read_time("window_end", c.crawl.window_end);
    crawl.read_unsigned("worker_count", c.crawl.worker_count);
    crawl.finish();

    Section gate(j, "gate");
    gate.read("threshold", c.gate.threshold);
    gate.read("backend", c.gate.backend);
    gate.read("remote_url", c.gate.remote_url);
    gate.finish();

    Section docparse(j, "docparse");
    docparse.read("service_url", c.docparse.service_url);
    docparse.read_unsigned("max_downloads", c.docparse.max_downloads);
    docparse.read_unsigned("token_budget", c.docparse.token_budget);
    docparse.read("retry_cap", c.docparse.retry_cap);
    docparse.finish();

    Section desc(j, "desc");
    desc.read("threshold", c.desc.threshold);
    desc.read_unsigned("seed_radius", c.desc.seed_radius);
    desc.read("backend", c.desc.backend);
    desc.read("remote_url", c.desc.remote_url);
    desc.finish();

    Section link(j, "link");
    std::string mode(linkextract::to_string(c.link.mode));
    link.read("mode", mode);
    c.link.mode = linkextract::selection_mode_from_string(mode);
    if (const json* th = link.child("thresholds")) {
      if (!th->is_object()) throw InvalidArgument("config: link.thresholds must be an object");
      json wrapper = {{"thresholds", *th}};
      Section t(wrapper, "thresholds");
      t.read("tau_high", c.link.thresholds.tau_high);
      t.read("tau_mid", c.link.thresholds.tau_mid);
      t.read("delta", c.link.thresholds.delta);
      t.read("top_k", c.link.thresholds.top_k);
      t.read("tau_min", c.link.thresholds.tau_min);
      t.finish();
    }
    link.read("verifier_url", c.link.verifier_url);
    link.read("verifier_enabled", c.link.verifier_enabled);
    link.read_unsigned("max_decompressed_mb", c.link.max_decompressed_mb);
    link.finish();

    Section index(j, "index");
    index.read("path", c.index.path);
    index.read("embedder", c.index.embedder);
    index.read_unsigned("dimension", c.index.dimension);
    index.read("remote_url", c.index.remote_url);
    index.finish();

    Section service(j, "service");
    service.read("audit_log", c.service.audit_log);
    service.finish();
  } catch (const InvalidArgument&) {
    throw;
  } catch (const Error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

CrawlConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InvalidArgument("config file " + path.string() + " is not valid JSON");
  return config_from_json(j);
}

}  // namespace dsd::service
