#include "forge/text.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cctype>

#include "forge/error.h"

namespace forge {
namespace {

// Decodes one code point at `offset`, advancing it. Invalid bytes decode as
// a negative value and are treated as non-letters.
UChar32 NextCodePoint(std::string_view text, int32_t& offset) {
  UChar32 c;
  U8_NEXT(reinterpret_cast<const uint8_t*>(text.data()), offset,
          static_cast<int32_t>(text.size()), c);
  return c;
}

}  // namespace

CapsShape ClassifyShape(std::string_view text) {
  int letters = 0;
  int upper = 0;
  bool first_upper = false;
  bool rest_lower = true;
  int32_t offset = 0;
  while (offset < static_cast<int32_t>(text.size())) {
    UChar32 c = NextCodePoint(text, offset);
    if (c < 0 || !u_isalpha(c)) continue;
    bool is_upper = u_isupper(c);
    if (letters == 0) {
      first_upper = is_upper;
    } else if (is_upper) {
      rest_lower = false;
    }
    upper += is_upper ? 1 : 0;
    ++letters;
  }
  if (letters == 0) return CapsShape::kNonAlpha;
  if (upper == 0) return CapsShape::kAllLower;
  if (first_upper && rest_lower) return CapsShape::kInitCap;
  if (upper == letters) return CapsShape::kAllCaps;
  return CapsShape::kMixed;
}

std::string_view ShapeName(CapsShape shape) {
  switch (shape) {
    case CapsShape::kAllLower: return "allLower";
    case CapsShape::kInitCap: return "initCap";
    case CapsShape::kAllCaps: return "allCaps";
    case CapsShape::kMixed: return "mixed";
    case CapsShape::kNonAlpha: return "nonAlpha";
  }
  return "nonAlpha";
}

std::string Utf8Lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  int32_t offset = 0;
  while (offset < static_cast<int32_t>(text.size())) {
    int32_t start = offset;
    UChar32 c = NextCodePoint(text, offset);
    if (c < 0) {
      out.append(text.substr(start, offset - start));
      continue;
    }
    if (c < 0x80) {
      out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
      continue;
    }
    UChar32 lower = u_tolower(c);
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    U8_APPEND_UNSAFE(reinterpret_cast<uint8_t*>(buf), len, lower);
    out.append(buf, len);
  }
  return out;
}

std::string NormalizeNfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (nfc->isNormalized(source, status) && U_SUCCESS(status)) {
    std::string out;
    source.toUTF8String(out);
    return out;
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

bool IsPunctuationToken(std::string_view text) {
  if (text.empty()) return false;
  int32_t offset = 0;
  while (offset < static_cast<int32_t>(text.size())) {
    UChar32 c = NextCodePoint(text, offset);
    if (c >= 0 && u_isalnum(c)) return false;
  }
  return true;
}

bool StartsUppercase(std::string_view text) {
  if (text.empty()) return false;
  int32_t offset = 0;
  UChar32 c = NextCodePoint(text, offset);
  return c >= 0 && u_isupper(c);
}

bool StartsUppercaseOrDigit(std::string_view text) {
  if (text.empty()) return false;
  int32_t offset = 0;
  UChar32 c = NextCodePoint(text, offset);
  return c >= 0 && (u_isupper(c) || u_isdigit(c));
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> Split(std::string_view text, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string Trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

}  // namespace forge
