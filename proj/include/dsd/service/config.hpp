#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "dsd/common/time.hpp"
#include "dsd/ingest/ingest.hpp"
#include "dsd/linkextract/linkextract.hpp"

namespace dsd::service {

struct IngestSettings {
  ingest::CategorySet categories = ingest::CategorySet::defaults();
  int poll_interval_secs = 600;
  std::size_t page_size = 100;
  std::string feed_url = "http://export.arxiv.org/api/query";
  bool operator==(const IngestSettings&) const = default;
};

struct CrawlSettings {
  // Both set: one pass over [start, end). Both absent: poll continuously.
  std::optional<Timestamp> window_start;
  std::optional<Timestamp> window_end;
  std::size_t worker_count = 4;
  bool operator==(const CrawlSettings&) const = default;
};

struct GateSettings {
  double threshold = 0.5;
  std::string backend = "heuristic";  // heuristic | remote
  std::string remote_url;
  bool operator==(const GateSettings&) const = default;
};

struct DocparseSettings {
  std::string service_url;  // empty: PDF text extraction only
  std::size_t max_downloads = 4;
  std::size_t token_budget = 512;
  int retry_cap = 3;
  bool operator==(const DocparseSettings&) const = default;
};

struct DescSettings {
  double threshold = 0.5;
  std::size_t seed_radius = 2;
  std::string backend = "heuristic";  // heuristic | remote
  std::string remote_url;
  bool operator==(const DescSettings&) const = default;
};

struct LinkSettings {
  linkextract::SelectionMode mode = linkextract::SelectionMode::hybrid;
  linkextract::SelectionThresholds thresholds;
  std::string verifier_url;
  bool verifier_enabled = false;
  std::size_t max_decompressed_mb = 200;
  bool operator==(const LinkSettings&) const = default;
};

struct IndexSettings {
  std::string path;  // empty: in memory
  std::string embedder = "reference";  // reference | remote
  std::size_t dimension = 256;
  std::string remote_url;
  bool operator==(const IndexSettings&) const = default;
};

struct ServiceSettings {
  std::string audit_log;  // empty: no audit file
  bool operator==(const ServiceSettings&) const = default;
};

// The one configuration document shared by the CLI (--config), the service
// startup file and PUT /config.
struct CrawlConfig {
  IngestSettings ingest;
  CrawlSettings crawl;
  GateSettings gate;
  DocparseSettings docparse;
  DescSettings desc;
  LinkSettings link;
  IndexSettings index;
  ServiceSettings service;

  // Throws InvalidArgument naming the first offending key.
  void validate() const;
  bool operator==(const CrawlConfig&) const = default;
};

nlohmann::ordered_json to_json(const CrawlConfig& config);

// Applies the keys present in `j` on top of `base` and validates the result.
// Unknown keys and mistyped values throw InvalidArgument.
CrawlConfig config_from_json(const nlohmann::json& j, const CrawlConfig& base = {});

// Reads a config file (same schema). Throws InvalidArgument.
CrawlConfig load_config_file(const std::filesystem::path& path);

}  // namespace dsd::service
