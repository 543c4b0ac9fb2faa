#include "dsd/service/http_api.hpp"

#include <charconv>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace dsd::service {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kDefaultK = 10;
constexpr std::size_t kDefaultRecordLimit = 100;
constexpr std::size_t kMaxRecordLimit = 1000;

ApiResponse json_response(int status, const ordered_json& body) { return {status, body.dump(), {}}; }

// Missing -> fallback; present but not a non-negative integer -> nullopt.
std::optional<std::size_t> size_param(const ApiRequest& r, const std::string& name, std::size_t fallback) {
  auto it = r.params.find(name);
  if (it == r.params.end() || it->second.empty()) return fallback;
  std::size_t value = 0;
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

}  // namespace

ApiResponse error_response(int status, std::string_view code, std::string_view message) {
  return json_response(status, ordered_json{{"code", code}, {"message", message}});
}

ApiResponse HttpApi::handle(const ApiRequest& r) const {
  try {
    if (r.path == "/config") {
      if (r.method == "GET") return get_config();
      if (r.method == "PUT") return put_config(r);
    } else if (r.path == "/crawl/start") {
      if (r.method == "POST") return start_crawl();
    } else if (r.path == "/crawl/stop") {
      if (r.method == "POST") return stop_crawl();
    } else if (r.path == "/crawl/status") {
      if (r.method == "GET") return crawl_status();
    } else if (r.path == "/search") {
      if (r.method == "GET") return search(r);
    } else if (r.path == "/records") {
      if (r.method == "GET") return list_records(r);
    } else {
      return error_response(404, "not_found", "no route for " + r.path);
    }
    return error_response(405, "method_not_allowed", r.method + " is not supported on " + r.path);
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", r.method, r.path, e.what());
    return error_response(500, "internal", e.what());
  }
}

ApiResponse HttpApi::get_config() const { return json_response(200, to_json(controller_.config())); }

ApiResponse HttpApi::put_config(const ApiRequest& r) const {
  const json body = json::parse(r.body, nullptr, false);
  if (body.is_discarded()) return error_response(400, "invalid_json", "request body is not valid JSON");
  try {
    const CrawlConfig next = config_from_json(body, controller_.config());
    controller_.set_config(next);
  } catch (const Conflict& e) {
    return error_response(409, "conflict", e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, "invalid_config", e.what());
  }
  return get_config();
}

ApiResponse HttpApi::start_crawl() const {
  try {
    const std::uint64_t id = controller_.start();
    return json_response(202, ordered_json{{"run_id", id}, {"state", "running"}});
  } catch (const Conflict& e) {
    return error_response(409, "conflict", e.what());
  }
}

ApiResponse HttpApi::stop_crawl() const {
  controller_.stop();
  return json_response(200, ordered_json{{"acknowledged", true}, {"state", to_string(controller_.status().state)}});
}

ApiResponse HttpApi::crawl_status() const { return json_response(200, to_json(controller_.status())); }

ApiResponse HttpApi::search(const ApiRequest& r) const {
  auto q = r.params.find("q");
  if (q == r.params.end() || q->second.empty()) return error_response(400, "invalid_request", "missing query parameter q");
  const auto k = size_param(r, "k", kDefaultK);
  if (!k || *k == 0) return error_response(400, "invalid_request", "k must be a positive integer");

  const auto index = controller_.index();
  const auto embedder = controller_.embedder();
  std::vector<recordindex::SearchHit> hits;
  try {
    hits = index->search(q->second, *k, *embedder);
  } catch (const recordindex::EmbedderUnavailable& e) {
    ApiResponse resp = error_response(503, "embedder_unavailable", std::string(e.what()) + "; retry later");
    resp.headers["Retry-After"] = "5";
    return resp;
  }
  ordered_json out;
  out["query"] = q->second;
  out["k"] = *k;
  out["hits"] = ordered_json::array();
  for (const auto& h : hits) {
    const auto& rec = h.record;
    out["hits"].push_back({{"rank", h.rank},
                           {"similarity", h.similarity},
                           {"paper_id", rec.paper_id},
                           {"title", rec.title},
                           {"description", rec.description},
                           {"paper_url", rec.paper_url},
                           {"dataset_url", rec.dataset_url ? ordered_json(*rec.dataset_url) : ordered_json(nullptr)},
                           {"selection_reason", linkextract::to_string(rec.selection_reason)},
                           {"last_seen", format_timestamp(rec.last_seen)}});
  }
  return json_response(200, out);
}

ApiResponse HttpApi::list_records(const ApiRequest& r) const {
  const auto offset = size_param(r, "offset", 0);
  const auto limit = size_param(r, "limit", kDefaultRecordLimit);
  if (!offset || !limit || *limit == 0 || *limit > kMaxRecordLimit) {
    return error_response(400, "invalid_request",
                          "offset must be >= 0 and limit in [1, " + std::to_string(kMaxRecordLimit) + "]");
  }
  const auto index = controller_.index();
  ordered_json out;
  out["total"] = index->size();
  out["offset"] = *offset;
  out["limit"] = *limit;
  out["records"] = ordered_json::array();
  for (const auto& rec : index->records(*offset, *limit)) out["records"].push_back(recordindex::to_json(rec));
  return json_response(200, out);
}

void HttpApi::mount(httplib::Server& server, const std::optional<std::filesystem::path>& static_dir) const {
  auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    r.body = req.body;
    const ApiResponse out = handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, "application/json; charset=utf-8");
  };
  for (const char* path : {"/config", "/crawl/start", "/crawl/stop", "/crawl/status", "/search", "/records"}) {
    server.Get(path, adapt);
    server.Put(path, adapt);
    server.Post(path, adapt);
  }
  if (static_dir) {
    if (!server.set_mount_point("/", static_dir->string())) {
      throw InvalidArgument("static directory " + static_dir->string() + " does not exist");
    }
  }
}

void serve(CrawlController& controller, const ServeOptions& options) {
  httplib::Server server;
  HttpApi api(controller);
  api.mount(server, options.static_dir);
  spdlog::info("listening on http://{}:{}", options.host, options.port);
  if (!server.listen(options.host, options.port)) {
    throw Error("cannot listen on " + options.host + ":" + std::to_string(options.port));
  }
}

}  // namespace dsd::service
