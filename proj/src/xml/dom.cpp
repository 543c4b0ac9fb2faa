#include "dsd/xml/dom.hpp"

#include <expat.h>

#include <memory>

#include "dsd/common/errors.hpp"

namespace dsd::xml {

namespace {

constexpr char kNsSeparator = '\x1f';

std::string local_name(const XML_Char* qualified) {
  std::string_view q(qualified);
  if (auto pos = q.rfind(kNsSeparator); pos != std::string_view::npos) q.remove_prefix(pos + 1);
  if (auto pos = q.rfind(':'); pos != std::string_view::npos) q.remove_prefix(pos + 1);
  return std::string(q);
}

struct Builder {
  std::vector<Node> stack;
  Node root;
  bool have_root = false;

  static void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<Builder*>(user);
    Node node;
    node.name = local_name(name);
    for (int i = 0; atts[i] != nullptr; i += 2) node.attributes.emplace_back(local_name(atts[i]), atts[i + 1]);
    self->stack.push_back(std::move(node));
  }

  static void on_end(void* user, const XML_Char*) {
    auto* self = static_cast<Builder*>(user);
    Node done = std::move(self->stack.back());
    self->stack.pop_back();
    if (self->stack.empty()) {
      self->root = std::move(done);
      self->have_root = true;
    } else {
      self->stack.back().children.push_back(std::move(done));
    }
  }

  static void on_text(void* user, const XML_Char* s, int len) {
    auto* self = static_cast<Builder*>(user);
    if (self->stack.empty()) return;
    auto& children = self->stack.back().children;
    if (!children.empty() && children.back().kind == Node::Kind::text) {
      children.back().text.append(s, static_cast<std::size_t>(len));
      return;
    }
    Node t;
    t.kind = Node::Kind::text;
    t.text.assign(s, static_cast<std::size_t>(len));
    children.push_back(std::move(t));
  }
};

void append_text(const Node& node, std::string& out) {
  if (node.kind == Node::Kind::text) {
    out += node.text;
    return;
  }
  for (const Node& c : node.children) append_text(c, out);
}

}  // namespace

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Node* Node::child(std::string_view child_name) const {
  for (const Node& c : children) {
    if (c.is_element(child_name)) return &c;
  }
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view child_name) const {
  std::vector<const Node*> out;
  for (const Node& c : children) {
    if (c.is_element(child_name)) out.push_back(&c);
  }
  return out;
}

std::string Node::text_content() const {
  std::string out;
  append_text(*this, out);
  return out;
}

Node parse(std::string_view bytes) {
  std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(
      XML_ParserCreateNS(nullptr, kNsSeparator), &XML_ParserFree);
  if (!parser) throw Error("cannot allocate XML parser");
  Builder builder;
  XML_SetUserData(parser.get(), &builder);
  XML_SetElementHandler(parser.get(), &Builder::on_start, &Builder::on_end);
  XML_SetCharacterDataHandler(parser.get(), &Builder::on_text);

  if (XML_Parse(parser.get(), bytes.data(), static_cast<int>(bytes.size()), XML_TRUE) == XML_STATUS_ERROR) {
    const auto offset = XML_GetCurrentByteIndex(parser.get());
    throw ParseError(std::string("XML: ") + XML_ErrorString(XML_GetErrorCode(parser.get())),
                     offset < 0 ? 0 : static_cast<std::size_t>(offset));
  }
  if (!builder.have_root) throw ParseError("XML: no root element", bytes.size());
  return std::move(builder.root);
}

}  // namespace dsd::xml
