#include <spdlog/spdlog.h>

#include "dsd/common/text.hpp"
#include "dsd/docparse/docparse.hpp"
#include "dsd/docparse/pdf_text.hpp"
#include "dsd/xml/dom.hpp"

namespace dsd::docparse {

namespace {

struct TeiWalker {
  std::string_view unit;  // "s" or "p"
  std::vector<TeiSentence> out;

  void add(const xml::Node& node, const std::optional<std::string>& section) {
    const std::string content = node.text_content();
    if (unit == "s") {
      out.push_back({text::normalize_whitespace(content), section});
    } else {
      for (auto& s : text::split_sentences(content)) out.push_back({std::move(s), section});
    }
  }

  // Header content other than the abstract (titles, affiliations) is skipped.
  void visit(const xml::Node& node, const std::optional<std::string>& section, bool in_header,
             bool in_abstract) {
    if (!node.is_element()) return;
    if (node.name == unit) {
      if (!in_header || in_abstract) add(node, section);
      return;
    }
    std::optional<std::string> current = section;
    if (node.name == "abstract") {
      current = "abstract";
      in_abstract = true;
    } else if (node.name == "div" && !in_abstract) {
      if (const xml::Node* head = node.child("head")) {
        std::string label = text::normalize_whitespace(head->text_content());
        if (const std::string* n = head->attribute("n"); n && !n->empty()) label = *n + " " + label;
        if (!label.empty()) current = std::move(label);
      }
    }
    in_header = in_header || node.name == "teiHeader";
    for (const xml::Node& child : node.children) {
      if (child.is_element("head")) continue;
      visit(child, current, in_header, in_abstract);
    }
  }
};

}  // namespace

std::string_view to_string(ParseSource source) {
  return source == ParseSource::structured_service ? "structured_service" : "plaintext_fallback";
}

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
  return text::count_whitespace_tokens(text);
}

GrobidClient::GrobidClient(net::HttpTransport& transport, std::string service_url)
    : transport_(transport) {
  while (!service_url.empty() && service_url.back() == '/') service_url.pop_back();
  endpoint_ = service_url + "/api/processFulltextDocument";
}

std::string GrobidClient::process_fulltext(std::string_view pdf_bytes) {
  const auto form = net::make_multipart("input", "paper.pdf", "application/pdf", pdf_bytes,
                                        {{"segmentSentences", "1"}, {"consolidateHeader", "0"}});
  const net::HttpResponse response = transport_.post(endpoint_, form.body, form.content_type);
  if (!response.transport_ok()) throw ServiceUnavailable("parse service: " + response.failure_detail, endpoint_);
  if (response.status != 200) {
    throw ServiceUnavailable("parse service returned HTTP " + std::to_string(response.status), endpoint_);
  }
  return response.body;
}

std::vector<TeiSentence> sentences_from_tei(std::string_view tei) {
  const xml::Node root = xml::parse(tei);
  for (std::string_view unit : {"s", "p"}) {
    TeiWalker walker{unit, {}};
    walker.visit(root, std::nullopt, false, false);
    std::erase_if(walker.out, [](const TeiSentence& s) { return s.text.empty(); });
    if (!walker.out.empty()) return std::move(walker.out);
  }
  return {};
}

std::vector<Sentence> make_sentences(const std::vector<TeiSentence>& raw, const Tokenizer& tokenizer) {
  std::vector<Sentence> out;
  out.reserve(raw.size());
  for (const TeiSentence& r : raw) {
    std::string normalized = text::normalize_whitespace(r.text);
    if (normalized.empty()) continue;
    Sentence s;
    s.index = out.size();
    s.token_count = std::max<std::size_t>(1, tokenizer.count(normalized));
    s.text = std::move(normalized);
    s.section = r.section;
    out.push_back(std::move(s));
  }
  return out;
}

ParsedDocument parse_sentences(std::string_view paper_id, std::string_view pdf_bytes,
                               StructuredParseClient* service, const Tokenizer& tokenizer) {
  ParsedDocument doc;
  doc.paper_id = std::string(paper_id);
  std::string service_problem = "no structured-parse service configured";
  if (service != nullptr) {
    try {
      const std::string tei = service->process_fulltext(pdf_bytes);
      doc.sentences = make_sentences(sentences_from_tei(tei), tokenizer);
      if (!doc.sentences.empty()) {
        doc.parse_source = ParseSource::structured_service;
        return doc;
      }
      service_problem = "structured parse produced no sentences";
    } catch (const ServiceUnavailable& e) {
      service_problem = e.what();
    } catch (const ParseError& e) {
      service_problem = std::string("malformed TEI: ") + e.what();
    }
  }
  spdlog::info("{}: using plaintext fallback ({})", paper_id, service_problem);

  std::string body;
  try {
    body = extract_pdf_text(pdf_bytes);
  } catch (const Error& e) {
    throw UnprocessableDocument(std::string(paper_id) + ": " + service_problem + "; PDF text extraction failed: " +
                                e.what());
  }
  std::vector<TeiSentence> raw;
  for (auto& s : text::split_sentences(body)) raw.push_back({std::move(s), std::nullopt});
  doc.sentences = make_sentences(raw, tokenizer);
  doc.parse_source = ParseSource::plaintext_fallback;
  if (doc.sentences.empty()) {
    throw UnprocessableDocument(std::string(paper_id) + ": " + service_problem + "; no text in PDF");
  }
  return doc;
}

}  // namespace dsd::docparse
