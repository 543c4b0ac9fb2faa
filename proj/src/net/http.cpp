#include "dsd/net/http.hpp"

#include <httplib.h>

#include "dsd/common/errors.hpp"
#include "dsd/common/text.hpp"

namespace dsd::net {

namespace {

HttpResponse from_result(httplib::Result&& result) {
  HttpResponse out;
  if (!result) {
    const auto err = result.error();
    out.failure = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                      ? TransportFailure::timeout
                      : TransportFailure::connection;
    out.failure_detail = httplib::to_string(err);
    return out;
  }
  out.status = result->status;
  out.body = std::move(result->body);
  for (const auto& [name, value] : result->headers) out.headers[text::lower(name)] = value;
  if (auto it = out.headers.find("content-type"); it != out.headers.end()) out.content_type = it->second;
  return out;
}

httplib::Client make_client(const UrlSplit& split, const TransportOptions& options) {
  httplib::Client client(split.origin);
  const auto ct = options.connect_timeout.count();
  const auto rt = options.read_timeout.count();
  client.set_connection_timeout(ct / 1000, (ct % 1000) * 1000);
  client.set_read_timeout(rt / 1000, (rt % 1000) * 1000);
  client.set_follow_location(true);
  client.set_default_headers({{"User-Agent", options.user_agent}});
  return client;
}

}  // namespace

std::optional<std::string> HttpResponse::header(std::string_view name) const {
  auto it = headers.find(text::lower(name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

UrlSplit split_origin(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("not an absolute URL: " + url);
  const std::string scheme = text::lower(url.substr(0, scheme_end));
  if (scheme != "http" && scheme != "https") throw InvalidArgument("unsupported URL scheme: " + url);
  const auto path_begin = url.find_first_of("/?#", scheme_end + 3);
  UrlSplit split;
  split.origin = url.substr(0, path_begin);
  if (split.origin.size() <= scheme_end + 3) throw InvalidArgument("URL without host: " + url);
  split.target = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  if (auto hash = split.target.find('#'); hash != std::string::npos) split.target.resize(hash);
  if (split.target.empty() || split.target.front() != '/') split.target.insert(0, "/");
  return split;
}

HttplibTransport::HttplibTransport(TransportOptions options) : options_(std::move(options)) {}

HttpResponse HttplibTransport::get(const std::string& url) {
  const UrlSplit split = split_origin(url);
  auto client = make_client(split, options_);
  return from_result(client.Get(split.target));
}

HttpResponse HttplibTransport::post(const std::string& url, const std::string& body,
                                    const std::string& content_type) {
  const UrlSplit split = split_origin(url);
  auto client = make_client(split, options_);
  return from_result(client.Post(split.target, body, content_type));
}

MultipartBody make_multipart(const std::string& file_field, const std::string& filename,
                             const std::string& file_content_type, std::string_view data,
                             const std::map<std::string, std::string>& fields) {
  const std::string boundary = "----dsd-boundary-7f3a9c1e52b84d06";
  MultipartBody out;
  out.content_type = "multipart/form-data; boundary=" + boundary;
  std::string& b = out.body;
  b.reserve(data.size() + 512);
  b += "--" + boundary + "\r\n";
  b += "Content-Disposition: form-data; name=\"" + file_field + "\"; filename=\"" + filename + "\"\r\n";
  b += "Content-Type: " + file_content_type + "\r\n\r\n";
  b.append(data);
  b += "\r\n";
  for (const auto& [name, value] : fields) {
    b += "--" + boundary + "\r\n";
    b += "Content-Disposition: form-data; name=\"" + name + "\"\r\n\r\n";
    b += value + "\r\n";
  }
  b += "--" + boundary + "--\r\n";
  return out;
}

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size() * 3);
  for (unsigned char c : s) {
    if (text::is_alnum(static_cast<char>(c)) || c == '-' || c == '_' || c == '.' || c == '~' ||
        c == ':') {
      out.push_back(static_cast<char>(c));
    } else if (c == ' ') {
      out.push_back('+');
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

}  // namespace dsd::net
