#include "test_support.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace dsd::testing {

std::filesystem::path fixture_root() { return DSD_FIXTURE_DIR; }
std::filesystem::path e2e_dir() { return fixture_root() / "e2e"; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

TempDir::TempDir() {
  std::string templ = (std::filesystem::temp_directory_path() / "dsd-test-XXXXXX").string();
  if (mkdtemp(templ.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = templ;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string Rng::word(std::size_t min_len, std::size_t max_len) {
  const auto len = static_cast<std::size_t>(uniform(static_cast<int>(min_len), static_cast<int>(max_len)));
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + uniform(0, 25)));
  return w;
}

std::vector<docparse::Sentence> sentences_with_tokens(const std::vector<std::size_t>& tokens) {
  std::vector<docparse::Sentence> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    docparse::Sentence s;
    s.index = i;
    s.text = "s" + std::to_string(i) + ".";
    s.token_count = tokens[i];
    out.push_back(s);
  }
  return out;
}

std::string strip_timestamps(const std::string& record_line) {
  static const std::regex ts(R"(,"first_seen":"[^"]*","last_seen":"[^"]*")");
  return std::regex_replace(record_line, ts, "");
}

}  // namespace dsd::testing
