#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mtlab::utf8 {

bool is_valid(std::string_view text);

/// Decodes `text` into code points. Throws Error(kInvalidEncoding) on
/// malformed input.
std::u32string decode(std::string_view text);

std::string encode(char32_t code_point);
std::string encode(std::u32string_view code_points);

std::size_t length(std::string_view text);

bool is_space(char32_t c);

/// Splits on runs of Unicode whitespace; no empty fields are produced.
std::vector<std::string> split_whitespace(std::string_view text);

/// Removes every Unicode whitespace code point.
std::u32string strip_whitespace(std::u32string_view text);

/// Strips trailing Unicode whitespace (including CR).
std::string rstrip(std::string_view text);

}  // namespace mtlab::utf8
