#include "dsd/recordindex/record.hpp"

namespace dsd::recordindex {

namespace {

bool url_expected(linkextract::SelectionReason reason) {
  return reason != linkextract::SelectionReason::rejected_below_min &&
         reason != linkextract::SelectionReason::no_candidates;
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("record field '") + key + "' missing", 0);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("record field '") + key + "' has the wrong type", 0);
  }
}

}  // namespace

void DatasetRecord::validate() const {
  if (paper_id.empty()) throw InvalidArgument("record without paper_id");
  if (description.empty()) throw InvalidArgument("record " + paper_id + " has an empty description");
  if (!(gate_score >= 0.0 && gate_score <= 1.0)) throw InvalidArgument("record " + paper_id + ": gate_score outside [0, 1]");
  if (dataset_url.has_value() != url_expected(selection_reason)) {
    throw InvalidArgument("record " + paper_id + ": dataset_url disagrees with selection_reason " +
                          std::string(linkextract::to_string(selection_reason)));
  }
  if (link_score.has_value() != dataset_url.has_value()) {
    throw InvalidArgument("record " + paper_id + ": link_score present without dataset_url or vice versa");
  }
  if (last_seen < first_seen) throw InvalidArgument("record " + paper_id + ": last_seen precedes first_seen");
}

nlohmann::ordered_json to_json(const DatasetRecord& r) {
  nlohmann::ordered_json j;
  j["paper_id"] = r.paper_id;
  j["paper_url"] = r.paper_url;
  j["title"] = r.title;
  j["dataset_url"] = r.dataset_url ? nlohmann::ordered_json(*r.dataset_url) : nlohmann::ordered_json(nullptr);
  j["description"] = r.description;
  j["categories"] = r.categories;
  j["gate_score"] = r.gate_score;
  j["link_score"] = r.link_score ? nlohmann::ordered_json(*r.link_score) : nlohmann::ordered_json(nullptr);
  j["selection_reason"] = linkextract::to_string(r.selection_reason);
  j["first_seen"] = format_timestamp(r.first_seen);
  j["last_seen"] = format_timestamp(r.last_seen);
  return j;
}

DatasetRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object", 0);
  DatasetRecord r;
  r.paper_id = required<std::string>(j, "paper_id");
  r.paper_url = required<std::string>(j, "paper_url");
  r.title = required<std::string>(j, "title");
  if (j.contains("dataset_url") && !j["dataset_url"].is_null()) r.dataset_url = required<std::string>(j, "dataset_url");
  r.description = required<std::string>(j, "description");
  r.categories = required<std::vector<std::string>>(j, "categories");
  r.gate_score = required<double>(j, "gate_score");
  if (j.contains("link_score") && !j["link_score"].is_null()) r.link_score = required<int>(j, "link_score");
  try {
    r.selection_reason = linkextract::selection_reason_from_string(required<std::string>(j, "selection_reason"));
    r.first_seen = parse_timestamp(required<std::string>(j, "first_seen"));
    r.last_seen = parse_timestamp(required<std::string>(j, "last_seen"));
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 0);
  }
  return r;
}

}  // namespace dsd::recordindex
