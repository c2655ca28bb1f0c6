#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace forge {

enum class CapsShape { kAllLower, kInitCap, kAllCaps, kMixed, kNonAlpha };

// Shape of a token from its letters: no letters -> kNonAlpha; first letter
// upper and the rest lower -> kInitCap (a lone uppercase letter included);
// two or more letters all upper -> kAllCaps.
CapsShape ClassifyShape(std::string_view text);
std::string_view ShapeName(CapsShape shape);

// Per-code-point simple lowercase mapping of UTF-8 text.
std::string Utf8Lower(std::string_view text);

// NFC normalization; invalid UTF-8 sequences are replaced by U+FFFD.
std::string NormalizeNfc(std::string_view text);

// True when the text contains no letter or digit.
bool IsPunctuationToken(std::string_view text);

// True when the first code point is an uppercase letter.
bool StartsUppercase(std::string_view text);
// True when the first code point is an uppercase letter or a digit.
bool StartsUppercaseOrDigit(std::string_view text);

std::vector<std::string> SplitWhitespace(std::string_view text);
std::vector<std::string> Split(std::string_view text, char delimiter);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);
std::string Trim(std::string_view text);

}  // namespace forge
