#include "dsd/net/fixture_transport.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dsd/common/errors.hpp"
#include "dsd/common/text.hpp"

namespace dsd::net {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read fixture file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FixtureReply parse_reply(const nlohmann::json& j, const std::filesystem::path& dir) {
  FixtureReply reply;
  reply.status = j.value("status", 200);
  reply.content_type = j.value("content_type", "");
  reply.repeat = j.value("repeat", 1);
  if (j.contains("file")) {
    reply.body = read_file(dir / j.at("file").get<std::string>());
  } else {
    reply.body = j.value("body", "");
  }
  if (j.contains("headers")) {
    for (const auto& [k, v] : j.at("headers").items()) reply.headers[text::lower(k)] = v.get<std::string>();
  }
  const std::string failure = j.value("failure", "");
  if (failure == "timeout") {
    reply.failure = TransportFailure::timeout;
  } else if (failure == "connection") {
    reply.failure = TransportFailure::connection;
  } else if (!failure.empty()) {
    throw Error("unknown fixture failure kind: " + failure);
  }
  return reply;
}

}  // namespace

FixtureTransport::FixtureTransport(std::vector<FixtureRoute> routes) {
  routes_.reserve(routes.size());
  for (auto& r : routes) {
    if (r.replies.empty()) r.replies.push_back(FixtureReply{});
    routes_.push_back({std::move(r), 0});
  }
}

std::unique_ptr<FixtureTransport> FixtureTransport::from_directory(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid fixture manifest " + manifest_path.string() + ": " + e.what());
  }
  std::vector<FixtureRoute> routes;
  for (const auto& jr : manifest.at("routes")) {
    FixtureRoute route;
    route.method = jr.value("method", "GET");
    route.url = jr.at("url").get<std::string>();
    route.prefix = jr.value("match", "exact") == "prefix";
    route.body_contains = jr.value("body_contains", "");
    if (jr.contains("replies")) {
      for (const auto& reply : jr.at("replies")) route.replies.push_back(parse_reply(reply, dir));
    } else {
      route.replies.push_back(parse_reply(jr, dir));
    }
    routes.push_back(std::move(route));
  }
  return std::make_unique<FixtureTransport>(std::move(routes));
}

HttpResponse FixtureTransport::get(const std::string& url) { return serve("GET", url, {}); }

HttpResponse FixtureTransport::post(const std::string& url, const std::string& body,
                                    const std::string&) {
  return serve("POST", url, body);
}

std::vector<std::string> FixtureTransport::request_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

HttpResponse FixtureTransport::serve(const std::string& method, const std::string& url,
                                     const std::string& body) {
  std::lock_guard lock(mutex_);
  log_.push_back(method + " " + url);
  for (auto& state : routes_) {
    const FixtureRoute& r = state.route;
    if (r.method != method) continue;
    const bool url_match = r.prefix ? url.rfind(r.url, 0) == 0 : url == r.url;
    if (!url_match) continue;
    if (!r.body_contains.empty() && body.find(r.body_contains) == std::string::npos) continue;

    std::size_t n = state.served++;
    const FixtureReply* reply = &r.replies.back();
    for (const auto& candidate : r.replies) {
      const auto times = static_cast<std::size_t>(std::max(candidate.repeat, 1));
      if (n < times) {
        reply = &candidate;
        break;
      }
      n -= times;
    }
    HttpResponse out;
    out.failure = reply->failure;
    if (!out.transport_ok()) {
      out.failure_detail = "fixture " + std::string(reply->failure == TransportFailure::timeout ? "timeout" : "connection failure");
      return out;
    }
    out.status = reply->status;
    out.body = reply->body;
    out.content_type = reply->content_type;
    out.headers = reply->headers;
    if (!out.content_type.empty()) out.headers["content-type"] = out.content_type;
    return out;
  }
  HttpResponse missing;
  missing.status = 404;
  missing.body = "no fixture route for " + method + " " + url;
  missing.content_type = "text/plain";
  return missing;
}

}  // namespace dsd::net
