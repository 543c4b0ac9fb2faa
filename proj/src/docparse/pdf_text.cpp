#include "dsd/docparse/pdf_text.hpp"

#include <zlib.h>

#include <cstdlib>
#include <vector>

#include "dsd/common/errors.hpp"

namespace dsd::docparse {

namespace {

bool is_pdf_space(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
}

bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
         c == '}' || c == '/' || c == '%';
}

void append_latin1(std::string& out, std::string_view bytes) {
  for (unsigned char c : bytes) {
    if (c < 0x80) {
      if (c == '\r' || c == '\n' || c == '\t') {
        out.push_back(' ');
      } else if (c >= 0x20) {
        out.push_back(static_cast<char>(c));
      }
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
}

struct Operand {
  enum class Kind { string, number, array, other } kind = Kind::other;
  std::string str;
  double num = 0.0;
  std::vector<Operand> items;
};

class ContentScanner {
 public:
  explicit ContentScanner(std::string_view data) : data_(data) {}

  void run(std::string& out) {
    std::vector<Operand> stack;
    while (true) {
      skip_space();
      if (pos_ >= data_.size()) break;
      const char c = data_[pos_];
      if (c == '[') {
        ++pos_;
        stack.push_back(read_array());
      } else if (c == '(' || (c == '<' && peek(1) != '<')) {
        Operand op;
        op.kind = Operand::Kind::string;
        op.str = c == '(' ? read_literal() : read_hex();
        stack.push_back(std::move(op));
      } else if (c == '<' || c == '>') {
        pos_ += 2;  // dictionary delimiters in inline images / marked content
      } else if (c == '/') {
        ++pos_;
        read_word();
        stack.push_back(Operand{});
      } else if (c == '+' || c == '-' || c == '.' || (c >= '0' && c <= '9')) {
        Operand op;
        op.kind = Operand::Kind::number;
        op.num = std::strtod(std::string(read_word()).c_str(), nullptr);
        stack.push_back(std::move(op));
      } else if (c == ']' || c == ')' || c == '{' || c == '}') {
        ++pos_;
      } else {
        const std::string_view word = read_word();
        if (word.empty()) {
          ++pos_;
          continue;
        }
        apply(word, stack, out);
        stack.clear();
        if (word == "ID") skip_inline_image();
      }
    }
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < data_.size() ? data_[pos_ + ahead] : '\0';
  }

  void skip_space() {
    while (pos_ < data_.size()) {
      if (is_pdf_space(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '%') {
        while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view read_word() {
    const std::size_t begin = pos_;
    while (pos_ < data_.size() && !is_pdf_space(data_[pos_]) && !is_delimiter(data_[pos_])) ++pos_;
    return data_.substr(begin, pos_ - begin);
  }

  std::string read_literal() {
    std::string s;
    ++pos_;  // '('
    int depth = 1;
    while (pos_ < data_.size()) {
      char c = data_[pos_++];
      if (c == '\\') {
        if (pos_ >= data_.size()) break;
        char e = data_[pos_++];
        switch (e) {
          case 'n': s.push_back('\n'); break;
          case 'r': s.push_back('\r'); break;
          case 't': s.push_back('\t'); break;
          case 'b': s.push_back('\b'); break;
          case 'f': s.push_back('\f'); break;
          case '\r':
            if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
            break;
          case '\n': break;
          default:
            if (e >= '0' && e <= '7') {
              int value = e - '0';
              for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++k) {
                value = value * 8 + (data_[pos_++] - '0');
              }
              s.push_back(static_cast<char>(value & 0xFF));
            } else {
              s.push_back(e);
            }
        }
        continue;
      }
      if (c == '(') ++depth;
      if (c == ')' && --depth == 0) break;
      s.push_back(c);
    }
    return s;
  }

  std::string read_hex() {
    std::string s;
    ++pos_;  // '<'
    int nibble = -1;
    while (pos_ < data_.size() && data_[pos_] != '>') {
      const char c = data_[pos_++];
      int v = -1;
      if (c >= '0' && c <= '9') v = c - '0';
      if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
      if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
      if (v < 0) continue;
      if (nibble < 0) {
        nibble = v;
      } else {
        s.push_back(static_cast<char>(nibble * 16 + v));
        nibble = -1;
      }
    }
    if (nibble >= 0) s.push_back(static_cast<char>(nibble * 16));
    ++pos_;  // '>'
    return s;
  }

  Operand read_array() {
    Operand arr;
    arr.kind = Operand::Kind::array;
    while (true) {
      skip_space();
      if (pos_ >= data_.size()) break;
      const char c = data_[pos_];
      if (c == ']') {
        ++pos_;
        break;
      }
      Operand item;
      if (c == '(') {
        item.kind = Operand::Kind::string;
        item.str = read_literal();
      } else if (c == '<') {
        item.kind = Operand::Kind::string;
        item.str = read_hex();
      } else if (c == '[') {
        ++pos_;
        item = read_array();
      } else {
        if (c == '/') ++pos_;
        const std::string word(read_word());
        if (word.empty()) {
          ++pos_;
          continue;
        }
        char* end = nullptr;
        const double v = std::strtod(word.c_str(), &end);
        if (end == word.c_str() + word.size()) {
          item.kind = Operand::Kind::number;
          item.num = v;
        }
      }
      arr.items.push_back(std::move(item));
    }
    return arr;
  }

  void skip_inline_image() {
    const auto end = data_.find("EI", pos_);
    pos_ = end == std::string_view::npos ? data_.size() : end + 2;
  }

  static void newline(std::string& out) {
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  }

  static void show(std::string& out, const Operand& op) {
    if (op.kind == Operand::Kind::string) append_latin1(out, op.str);
  }

  static void apply(std::string_view op, const std::vector<Operand>& stack, std::string& out) {
    if (op == "Tj") {
      if (!stack.empty()) show(out, stack.back());
    } else if (op == "TJ") {
      if (stack.empty() || stack.back().kind != Operand::Kind::array) return;
      for (const Operand& item : stack.back().items) {
        if (item.kind == Operand::Kind::number && item.num < -250.0) {
          out.push_back(' ');
        } else {
          show(out, item);
        }
      }
    } else if (op == "'") {
      newline(out);
      if (!stack.empty()) show(out, stack.back());
    } else if (op == "\"") {
      newline(out);
      if (!stack.empty()) show(out, stack.back());
    } else if (op == "T*" || op == "Tm" || op == "ET") {
      newline(out);
    } else if (op == "Td" || op == "TD") {
      if (stack.size() >= 2 && stack[stack.size() - 1].kind == Operand::Kind::number &&
          stack[stack.size() - 1].num != 0.0) {
        newline(out);
      } else if (!out.empty() && out.back() != ' ' && out.back() != '\n') {
        out.push_back(' ');
      }
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

bool dict_has(std::string_view dict, std::string_view key) { return dict.find(key) != std::string_view::npos; }

}  // namespace

std::string inflate_zlib(std::string_view data, std::size_t max_output) {
  z_stream zs{};
  // 32 + MAX_WBITS: auto-detect zlib or gzip headers.
  if (inflateInit2(&zs, 32 + MAX_WBITS) != Z_OK) throw Error("inflateInit failed");
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
      inflateEnd(&zs);
      throw Error(std::string("inflate failed: ") + (zs.msg ? zs.msg : "corrupt data"));
    }
    out.append(buffer, sizeof(buffer) - zs.avail_out);
    if (out.size() > max_output) {
      inflateEnd(&zs);
      throw Error("inflated data exceeds limit of " + std::to_string(max_output) + " bytes");
    }
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) break;  // truncated input
  }
  inflateEnd(&zs);
  return out;
}

std::string extract_pdf_text(std::string_view pdf) {
  if (!looks_like_pdf(pdf)) throw ParseError("not a PDF document", 0);
  constexpr std::size_t kMaxStream = 64u << 20;
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t kw = pdf.find("stream", pos);
    if (kw == std::string_view::npos) break;
    if (kw >= 3 && pdf.substr(kw - 3, 3) == "end") {
      pos = kw + 6;
      continue;
    }
    std::size_t data_begin = kw + 6;
    if (pdf.substr(data_begin, 2) == "\r\n") {
      data_begin += 2;
    } else if (data_begin < pdf.size() && (pdf[data_begin] == '\n' || pdf[data_begin] == '\r')) {
      data_begin += 1;
    } else {
      pos = kw + 6;
      continue;
    }
    const std::size_t data_end = pdf.find("endstream", data_begin);
    if (data_end == std::string_view::npos) break;
    const std::size_t obj = pdf.rfind(" obj", kw);
    const std::string_view dict = pdf.substr(obj == std::string_view::npos ? 0 : obj, kw - (obj == std::string_view::npos ? 0 : obj));
    pos = data_end + 9;

    if (dict_has(dict, "/Image") || dict_has(dict, "/Length1") || dict_has(dict, "/FontFile") ||
        dict_has(dict, "/Type1C") || dict_has(dict, "/XRef") || dict_has(dict, "/ObjStm") ||
        dict_has(dict, "/Metadata")) {
      continue;
    }
    std::string_view data = pdf.substr(data_begin, data_end - data_begin);
    std::string inflated;
    if (dict_has(dict, "/FlateDecode")) {
      try {
        inflated = inflate_zlib(data, kMaxStream);
      } catch (const Error&) {
        continue;
      }
      data = inflated;
    } else if (dict_has(dict, "/Filter")) {
      continue;
    }
    ContentScanner(data).run(out);
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  }
  return out;
}

}  // namespace dsd::docparse
