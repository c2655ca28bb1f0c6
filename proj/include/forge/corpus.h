#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/text.h"

namespace forge {

struct Token {
  std::string text;
  std::string lower;
  // Byte offsets into the text the token was cut from; [char_start, char_end).
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  CapsShape shape = CapsShape::kNonAlpha;
};

struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  std::vector<Token> tokens;

  std::vector<std::string> Texts() const;
  std::vector<std::string> Lowers() const;
};

Token MakeToken(std::string text, std::size_t start);

// Splits on ASCII whitespace, then peels leading and trailing punctuation
// code points off each chunk as one-character tokens. Interior punctuation
// stays ("Epstein-Barr", "H5N1/2009").
std::vector<Token> Tokenize(std::string_view text);

struct SegmenterOptions {
  // Lowercased words (without their final period) after which a period does
  // not end a sentence.
  std::set<std::string> abbreviations = DefaultAbbreviations();

  static std::set<std::string> DefaultAbbreviations();
};

// Tokenizes the document and splits after '.', '?' or '!' tokens that are
// followed by whitespace and a token starting with an uppercase letter or a
// digit. A period glued to an abbreviation never splits. Token offsets refer
// to `document`.
std::vector<Sentence> SegmentSentences(std::string_view document,
                                       const SegmenterOptions& options = {});

struct VocabStats {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total_tokens = 0;
};

// Streaming type counter. Merge is associative and commutative.
class VocabCounter {
 public:
  void Add(const Sentence& sentence);
  void Merge(const VocabCounter& other);
  // Keeps the top_k most frequent types; ties at the cutoff go to the
  // lexicographically smaller type.
  VocabStats Finish(std::size_t top_k) const;

 private:
  std::map<std::string, std::uint64_t> counts_;
};

VocabStats BuildVocab(const std::vector<Sentence>& sentences, std::size_t top_k);

// A corpus is either a directory of text files (one document each, visited in
// file-name order) or a single file holding one document per line.
class CorpusReader {
 public:
  explicit CorpusReader(std::filesystem::path path, SegmenterOptions options = {});

  void ForEachDocument(
      const std::function<void(const std::string& doc_id, const std::string& text)>& fn) const;
  void ForEachSentence(const std::function<void(const Sentence&)>& fn) const;

  // Files read by this corpus, in visiting order.
  std::vector<std::filesystem::path> Files() const;

 private:
  std::filesystem::path path_;
  SegmenterOptions options_;
};

// One sentence per line: doc_id, sentence index, then one token per field.
void WriteTokenLine(std::ostream& out, const Sentence& sentence);

}  // namespace forge
