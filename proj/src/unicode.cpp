#include "ifc/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace ifc::unicode {

std::string nfc(std::string_view utf8)
{
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status))
    throw std::runtime_error("ICU NFC normalizer unavailable");

  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString normalized = norm->normalize(source, status);
  if (U_FAILURE(status))
    throw std::runtime_error("NFC normalization failed");

  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::u32string decode(std::string_view utf8)
{
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length)
  {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

std::string encode(std::u32string_view text)
{
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text)
  {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error)
    {
      n = 0;
      U8_APPEND_UNSAFE(buf, n, 0xFFFD);
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<size_t>(n));
  }
  return out;
}

bool is_whitespace(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

bool is_ideograph(char32_t c)
{
  return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_IDEOGRAPHIC) &&
         u_getIntPropertyValue(static_cast<UChar32>(c), UCHAR_SCRIPT) == USCRIPT_HAN;
}

bool is_alnum(char32_t c) { return u_isalnum(static_cast<UChar32>(c)); }

std::string_view trim(std::string_view text)
{
  // Walk byte offsets so the result stays a view into the input.
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t begin = 0;
  while (begin < length)
  {
    int32_t next = begin;
    UChar32 c;
    U8_NEXT(s, next, length, c);
    if (c < 0 || !u_isUWhiteSpace(c))
      break;
    begin = next;
  }
  int32_t end = length;
  while (end > begin)
  {
    int32_t prev = end;
    UChar32 c;
    U8_PREV(s, 0, prev, c);
    if (c < 0 || !u_isUWhiteSpace(c))
      break;
    end = prev;
  }
  return text.substr(static_cast<size_t>(begin), static_cast<size_t>(end - begin));
}

std::u32string_view trim(std::u32string_view text)
{
  size_t begin = 0;
  while (begin < text.size() && is_whitespace(text[begin]))
    ++begin;
  size_t end = text.size();
  while (end > begin && is_whitespace(text[end - 1]))
    --end;
  return text.substr(begin, end - begin);
}

} // namespace ifc::unicode
