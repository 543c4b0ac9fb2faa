#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dsd::xml {

// Minimal owning DOM over expat. Element names are namespace-local
// ("arxiv:primary_category" -> "primary_category").
struct Node {
  enum class Kind { element, text };

  Kind kind = Kind::element;
  std::string name;  // element only
  std::string text;  // text only
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;

  bool is_element() const { return kind == Kind::element; }
  bool is_element(std::string_view n) const { return kind == Kind::element && name == n; }

  const std::string* attribute(std::string_view key) const;

  // First direct child element with the given name, or nullptr.
  const Node* child(std::string_view child_name) const;
  std::vector<const Node*> children_named(std::string_view child_name) const;

  // Concatenation of all descendant text in document order.
  std::string text_content() const;
};

// Parses a complete document and returns its root element.
// Throws dsd::ParseError carrying the byte offset of the failure.
Node parse(std::string_view bytes);

}  // namespace dsd::xml
