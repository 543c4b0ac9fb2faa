#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsd/common/time.hpp"
#include "dsd/linkextract/linkextract.hpp"

namespace dsd::recordindex {

struct DatasetRecord {
  std::string paper_id;
  std::string paper_url;
  std::string title;
  std::optional<std::string> dataset_url;
  std::string description;
  std::vector<std::string> categories;
  double gate_score = 0.0;
  std::optional<int> link_score;
  linkextract::SelectionReason selection_reason = linkextract::SelectionReason::no_candidates;
  Timestamp first_seen{};
  Timestamp last_seen{};

  // Throws InvalidArgument when a field breaks the record invariants: empty
  // paper_id or description, gate_score outside [0, 1], a dataset_url that
  // disagrees with the selection reason, or last_seen before first_seen.
  void validate() const;
  bool operator==(const DatasetRecord&) const = default;
};

// Field order is fixed: paper_id, paper_url, title, dataset_url, description,
// categories, gate_score, link_score, selection_reason, first_seen, last_seen.
nlohmann::ordered_json to_json(const DatasetRecord& record);
// Throws ParseError (offset 0) on missing or mistyped fields.
DatasetRecord record_from_json(const nlohmann::json& j);

}  // namespace dsd::recordindex
