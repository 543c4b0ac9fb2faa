#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "dsd/service/crawl.hpp"

namespace httplib {
class Server;
}

namespace dsd::service {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
  std::map<std::string, std::string> headers;
};

// JSON control plane:
//   GET/PUT /config, POST /crawl/start, POST /crawl/stop, GET /crawl/status,
//   GET /search?q=..&k=.., GET /records?offset=..&limit=..
// Errors are {"code": "...", "message": "..."}.
class HttpApi {
 public:
  explicit HttpApi(CrawlController& controller) : controller_(controller) {}

  ApiResponse handle(const ApiRequest& request) const;

  // Registers every route on `server`; static_dir, when given, is served under /.
  void mount(httplib::Server& server, const std::optional<std::filesystem::path>& static_dir = std::nullopt) const;

 private:
  ApiResponse get_config() const;
  ApiResponse put_config(const ApiRequest& request) const;
  ApiResponse start_crawl() const;
  ApiResponse stop_crawl() const;
  ApiResponse crawl_status() const;
  ApiResponse search(const ApiRequest& request) const;
  ApiResponse list_records(const ApiRequest& request) const;

  CrawlController& controller_;
};

ApiResponse error_response(int status, std::string_view code, std::string_view message);

// Blocks serving on host:port until stop_server() or process exit.
struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
};
void serve(CrawlController& controller, const ServeOptions& options);

}  // namespace dsd::service
