#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace dsd::net {

enum class TransportFailure { none, timeout, connection };

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
  std::map<std::string, std::string> headers;  // names lower-cased
  TransportFailure failure = TransportFailure::none;
  std::string failure_detail;

  bool transport_ok() const { return failure == TransportFailure::none; }
  bool ok() const { return transport_ok() && status >= 200 && status < 300; }
  std::optional<std::string> header(std::string_view name) const;
};

// Everything that talks to the network goes through this, so the whole
// pipeline can run against recorded fixtures.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url) = 0;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::string& content_type) = 0;
};

struct TransportOptions {
  std::chrono::milliseconds connect_timeout{10'000};
  std::chrono::milliseconds read_timeout{60'000};
  std::string user_agent = "dataset-discovery/0.1";
};

// Live transport over cpp-httplib (http, and https when built with OpenSSL).
class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(TransportOptions options = {});
  HttpResponse get(const std::string& url) override;
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::string& content_type) override;

 private:
  TransportOptions options_;
};

struct UrlSplit {
  std::string origin;  // scheme://host[:port]
  std::string target;  // path?query, at least "/"
};

// Splits an absolute http(s) URL for client construction. Throws dsd::InvalidArgument.
UrlSplit split_origin(const std::string& url);

// multipart/form-data body with one file field followed by plain fields.
struct MultipartBody {
  std::string content_type;
  std::string body;
};
MultipartBody make_multipart(const std::string& file_field, const std::string& filename,
                             const std::string& file_content_type, std::string_view data,
                             const std::map<std::string, std::string>& fields = {});

std::string url_encode(std::string_view s);

}  // namespace dsd::net
