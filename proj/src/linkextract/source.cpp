#include <zlib.h>

#include <algorithm>
#include <spdlog/spdlog.h>

#include "dsd/common/text.hpp"
#include "dsd/docparse/pdf_text.hpp"
#include "dsd/linkextract/linkextract.hpp"

namespace dsd::linkextract {

namespace {

constexpr std::size_t kBlock = 512;

bool is_gzip(std::string_view data) {
  return data.size() >= 2 && static_cast<unsigned char>(data[0]) == 0x1f &&
         static_cast<unsigned char>(data[1]) == 0x8b;
}

std::string gunzip(std::string_view data, std::size_t max_bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw SourceUnavailable("inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buffer[64 * 1024];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      const std::string msg = zs.msg ? zs.msg : "corrupt data";
      inflateEnd(&zs);
      throw SourceUnavailable("gzip: " + msg);
    }
    out.append(buffer, sizeof(buffer) - zs.avail_out);
    if (out.size() > max_bytes) {
      inflateEnd(&zs);
      throw ArchiveTooLarge("decompressed source exceeds " + std::to_string(max_bytes) + " bytes");
    }
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw SourceUnavailable("gzip: truncated stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::string_view field(std::string_view header, std::size_t offset, std::size_t len) {
  std::string_view f = header.substr(offset, len);
  if (auto nul = f.find('\0'); nul != std::string_view::npos) f = f.substr(0, nul);
  return f;
}

std::optional<std::size_t> parse_octal(std::string_view f) {
  std::size_t value = 0;
  bool any = false;
  for (char c : f) {
    if (c == ' ' || c == '\0') {
      if (any) break;
      continue;
    }
    if (c < '0' || c > '7') return std::nullopt;
    value = value * 8 + static_cast<std::size_t>(c - '0');
    any = true;
  }
  if (!any) return std::size_t{0};
  return value;
}

bool valid_header(std::string_view header) {
  auto stored = parse_octal(header.substr(148, 8));
  if (!stored) return false;
  std::size_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(header[i]);
  }
  return sum == *stored;
}

bool is_tar(std::string_view data) {
  if (data.size() < kBlock) return false;
  const std::string_view header = data.substr(0, kBlock);
  if (header.substr(257, 5) == "ustar") return true;
  return header[0] != '\0' && valid_header(header);
}

// "NN path=value\n" records
std::optional<std::string> pax_path(std::string_view body) {
  std::optional<std::string> path;
  while (!body.empty()) {
    const auto space = body.find(' ');
    if (space == std::string_view::npos) break;
    std::size_t len = 0;
    for (char c : body.substr(0, space)) {
      if (c < '0' || c > '9') return path;
      len = len * 10 + static_cast<std::size_t>(c - '0');
    }
    if (len <= space + 1 || len > body.size()) break;
    std::string_view record = body.substr(space + 1, len - space - 1);
    if (!record.empty() && record.back() == '\n') record.remove_suffix(1);
    if (record.substr(0, 5) == "path=") path = std::string(record.substr(5));
    body.remove_prefix(len);
  }
  return path;
}

bool wanted(std::string_view path) {
  const std::string p = text::lower(path);
  auto ends = [&](std::string_view ext) { return p.size() > ext.size() && p.ends_with(ext); };
  return ends(".tex") || ends(".bib") || ends(".bbl");
}

std::string clean_path(std::string path) {
  while (path.starts_with("./")) path.erase(0, 2);
  return path;
}

FileMap untar(std::string_view data) {
  FileMap files;
  std::size_t pos = 0;
  std::optional<std::string> long_name;
  while (pos + kBlock <= data.size()) {
    const std::string_view header = data.substr(pos, kBlock);
    if (std::all_of(header.begin(), header.end(), [](char c) { return c == '\0'; })) break;
    if (!valid_header(header)) throw SourceUnavailable("tar: bad header checksum at offset " + std::to_string(pos));
    const auto size = parse_octal(header.substr(124, 12));
    if (!size) throw SourceUnavailable("tar: bad size field at offset " + std::to_string(pos));
    const char type = header[156];
    const std::size_t body_begin = pos + kBlock;
    if (body_begin + *size > data.size()) throw SourceUnavailable("tar: truncated entry");
    const std::string_view body = data.substr(body_begin, *size);
    pos = body_begin + (*size + kBlock - 1) / kBlock * kBlock;

    if (type == 'L') {
      long_name = std::string(field(body, 0, body.size()));
      continue;
    }
    if (type == 'x') {
      if (auto p = pax_path(body)) long_name = std::move(p);
      continue;
    }
    if (type == 'g') continue;

    std::string name;
    if (long_name) {
      name = std::move(*long_name);
      long_name.reset();
    } else {
      name = std::string(field(header, 0, 100));
      const std::string_view prefix = field(header, 345, 155);
      if (header.substr(257, 5) == "ustar" && !prefix.empty()) name = std::string(prefix) + "/" + name;
    }
    if (type != '0' && type != '\0') continue;
    name = clean_path(std::move(name));
    if (wanted(name)) files[name] = std::string(body);
  }
  return files;
}

bool looks_like_text(std::string_view data) {
  const std::string_view head = data.substr(0, 8192);
  return !data.empty() && head.find('\0') == std::string_view::npos;
}

}  // namespace

FileMap unpack_source(std::string_view body, std::size_t max_bytes) {
  if (docparse::looks_like_pdf(body)) throw SourceUnavailable("e-print is a PDF, no LaTeX source");
  std::string inflated;
  std::string_view data = body;
  if (is_gzip(body)) {
    inflated = gunzip(body, max_bytes);
    data = inflated;
  } else if (body.size() > max_bytes) {
    throw ArchiveTooLarge("source exceeds " + std::to_string(max_bytes) + " bytes");
  }
  if (docparse::looks_like_pdf(data)) throw SourceUnavailable("e-print is a PDF, no LaTeX source");

  if (is_tar(data)) {
    FileMap files = untar(data);
    if (files.empty()) throw SourceUnavailable("archive holds no .tex/.bib/.bbl files");
    return files;
  }
  if (looks_like_text(data)) return FileMap{{"main.tex", std::string(data)}};
  throw SourceUnavailable("unrecognized e-print format");
}

FileMap fetch_source(const ingest::PaperMeta& meta, net::HttpTransport& transport, std::size_t max_bytes) {
  if (meta.source_url.empty()) throw InvalidArgument("paper " + meta.paper_id + " has no source url");
  const net::HttpResponse response = transport.get(meta.source_url);
  if (!response.transport_ok()) {
    throw SourceUnavailable("source download failed: " + response.failure_detail);
  }
  if (!response.ok()) {
    throw SourceUnavailable("source download returned HTTP " + std::to_string(response.status));
  }
  if (text::lower(response.content_type).find("application/pdf") != std::string::npos) {
    throw SourceUnavailable("e-print is a PDF, no LaTeX source");
  }
  FileMap files = unpack_source(response.body, max_bytes);
  spdlog::debug("source {}: {} file(s)", meta.paper_id, files.size());
  return files;
}

}  // namespace dsd::linkextract
