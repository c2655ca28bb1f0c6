#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/corpus.h"
#include "forge/dictionary.h"
#include "forge/phrase_matcher.h"

namespace forge {

// Label order B < I < O is also the decoder's tie-break order.
enum class Tag : std::uint8_t { kB = 0, kI = 1, kO = 2 };
inline constexpr std::size_t kNumTags = 3;

char TagChar(Tag tag);
// Accepts "B", "I", "O" and typed forms such as "B-Virus".
Tag ParseTag(std::string_view text);

// I never follows O or starts a sentence.
bool IsWellFormed(const std::vector<Tag>& tags);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  auto operator<=>(const Span&) const = default;
};

// Entity spans of a tag sequence. A stray I opens a new span.
std::set<Span> ExtractSpans(const std::vector<Tag>& tags);

// Exact dictionary matching: longest match, leftmost first, no overlaps.
class DictionaryTagger {
 public:
  explicit DictionaryTagger(const Dictionary& dictionary, bool case_sensitive = false);

  std::vector<Tag> Apply(const std::vector<std::string>& tokens) const;
  std::vector<Tag> Apply(const Sentence& sentence) const;

 private:
  PhraseMatcher matcher_;
  bool case_sensitive_;
};

std::vector<Tag> TagWithDictionary(const Sentence& sentence, const Dictionary& dictionary,
                                   bool case_sensitive = false);

struct LabeledSentence {
  std::vector<std::string> tokens;
  std::vector<Tag> tags;

  // Tokens laid out with single spaces so offsets are valid.
  Sentence ToSentence() const;
};

// CoNLL-style: first column token, last column tag, blank line between
// sentences.
struct GoldCorpus {
  std::vector<LabeledSentence> sentences;

  void Validate() const;
  static GoldCorpus LoadConll(const std::filesystem::path& path);
  void SaveConll(const std::filesystem::path& path) const;
};

struct EvalReport {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;
  void Add(const EvalReport& other);
};

// Exact-extent span matching against gold.
EvalReport EvaluateSentence(const std::vector<Tag>& predicted, const std::vector<Tag>& gold);
EvalReport Evaluate(const std::vector<std::vector<Tag>>& predicted, const GoldCorpus& gold);
EvalReport EvaluateDictionary(const Dictionary& dictionary, const GoldCorpus& gold,
                              bool case_sensitive = false);

// Set overlap of dictionary keys against a reference phrase list
// (normalized like dictionary keys).
EvalReport CompareToTruth(const Dictionary& dictionary, const std::set<std::string>& truth);

std::string ReportJson(const EvalReport& report, const Dictionary* dictionary = nullptr);

}  // namespace forge
