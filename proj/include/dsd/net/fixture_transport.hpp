#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dsd/net/http.hpp"

namespace dsd::net {

// One canned reply. `repeat` > 1 serves the same reply that many times before
// the route advances to its next reply; the last reply repeats forever.
struct FixtureReply {
  int status = 200;
  std::string body;
  std::string content_type;
  std::map<std::string, std::string> headers;
  TransportFailure failure = TransportFailure::none;
  int repeat = 1;
};

struct FixtureRoute {
  std::string method = "GET";
  std::string url;
  bool prefix = false;           // match url as a prefix instead of exactly
  std::string body_contains;     // POST only: request body must contain this
  std::vector<FixtureReply> replies;
};

// Offline transport replaying recorded responses. Unmatched requests get 404.
//
// Directory form: <dir>/manifest.json
//   {"routes": [{"method": "GET", "url": "...", "match": "exact"|"prefix",
//                "body_contains": "...",
//                "replies": [{"status": 200, "content_type": "...", "file": "rel/path",
//                             "body": "inline", "headers": {...},
//                             "failure": "timeout"|"connection", "repeat": 1}]}]}
// A route may give the reply fields inline instead of a "replies" array.
class FixtureTransport final : public HttpTransport {
 public:
  explicit FixtureTransport(std::vector<FixtureRoute> routes);
  static std::unique_ptr<FixtureTransport> from_directory(const std::filesystem::path& dir);

  HttpResponse get(const std::string& url) override;
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::string& content_type) override;

  // Requests seen so far, as "METHOD url".
  std::vector<std::string> request_log() const;

 private:
  HttpResponse serve(const std::string& method, const std::string& url, const std::string& body);

  struct RouteState {
    FixtureRoute route;
    std::size_t served = 0;
  };
  mutable std::mutex mutex_;
  std::vector<RouteState> routes_;
  std::vector<std::string> log_;
};

}  // namespace dsd::net
