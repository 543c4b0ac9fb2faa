#include "dsd/common/time.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <charconv>
#include <ctime>

#include "dsd/common/errors.hpp"

namespace dsd {

namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw InvalidArgument("timestamp too short: " + std::string(text));
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw InvalidArgument("bad timestamp field in: " + std::string(text));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw InvalidArgument("malformed timestamp: " + std::string(text));
  }
}

}  // namespace

Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const int y = read_int(text, 0, 4);
  expect(text, 4, '-');
  const int mo = read_int(text, 5, 2);
  expect(text, 7, '-');
  const int d = read_int(text, 8, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw InvalidArgument("invalid calendar date: " + std::string(text));
  sys_seconds ts = sys_days{ymd};
  std::size_t pos = 10;
  if (pos == text.size()) return ts;

  if (text[pos] != 'T' && text[pos] != 't' && text[pos] != ' ') {
    throw InvalidArgument("malformed timestamp: " + std::string(text));
  }
  const int hh = read_int(text, pos + 1, 2);
  expect(text, pos + 3, ':');
  const int mm = read_int(text, pos + 4, 2);
  int ss = 0;
  pos += 6;
  if (pos < text.size() && text[pos] == ':') {
    ss = read_int(text, pos + 1, 2);
    pos += 3;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) throw InvalidArgument("invalid time of day: " + std::string(text));
  ts += hours{hh} + minutes{mm} + seconds{ss};

  if (pos == text.size()) return ts;
  if ((text[pos] == 'Z' || text[pos] == 'z') && pos + 1 == text.size()) return ts;
  if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
    const int oh = read_int(text, pos + 1, 2);
    expect(text, pos + 3, ':');
    const int om = read_int(text, pos + 4, 2);
    const auto offset = hours{oh} + minutes{om};
    return text[pos] == '+' ? ts - offset : ts + offset;
  }
  throw InvalidArgument("malformed timestamp suffix: " + std::string(text));
}

std::string format_timestamp(Timestamp ts) {
  const std::time_t t = std::chrono::system_clock::to_time_t(ts);
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}Z", fmt::gmtime(t));
}

}  // namespace dsd
