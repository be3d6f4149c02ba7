#pragma once

#include <string>
#include <string_view>

namespace ifc::unicode {

// NFC-normalize UTF-8 text. Invalid sequences are replaced with U+FFFD.
std::string nfc(std::string_view utf8);

// Decode UTF-8 into Unicode scalar values (no normalization).
std::u32string decode(std::string_view utf8);

std::string encode(std::u32string_view text);

bool is_whitespace(char32_t c);

// CJK ideographs (Han, including compatibility ideographs).
bool is_ideograph(char32_t c);

bool is_alnum(char32_t c);

// Trims ASCII and Unicode whitespace from both ends.
std::string_view trim(std::string_view text);

std::u32string_view trim(std::u32string_view text);

} // namespace ifc::unicode
