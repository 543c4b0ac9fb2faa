#pragma once

#include <string>
#include <string_view>

namespace dsd::docparse {

inline bool looks_like_pdf(std::string_view bytes) { return bytes.substr(0, 5) == "%PDF-"; }

// Best-effort text extraction: walks every content stream (inflating
// FlateDecode), and collects the strings shown by Tj, TJ, ' and ". Line moves
// become newlines, large negative TJ kerning becomes a space. Simple-font
// bytes are decoded as Latin-1 and returned as UTF-8. No ToUnicode maps, so
// CID-keyed fonts yield nothing useful.
//
// Throws dsd::ParseError if the input is not a PDF.
std::string extract_pdf_text(std::string_view pdf_bytes);

// zlib inflate of a raw or zlib-wrapped deflate stream; max_output bounds the result.
// Throws dsd::Error on corrupt data or when the bound is exceeded.
std::string inflate_zlib(std::string_view data, std::size_t max_output);

}  // namespace dsd::docparse
