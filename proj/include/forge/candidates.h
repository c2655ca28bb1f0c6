#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "forge/corpus.h"

namespace forge {

enum class PatternKind { kBetween, kAfterTrigger };

struct ExtractionPattern {
  PatternKind kind = PatternKind::kBetween;
  // kBetween: left literal. kAfterTrigger: the trigger phrase.
  std::vector<std::string> left;
  // kBetween only.
  std::vector<std::string> right;
  std::size_t max_phrase_len = 5;
  bool case_sensitive = false;

  static ExtractionPattern Between(std::vector<std::string> left, std::vector<std::string> right,
                                   std::size_t max_phrase_len = 5);
  static ExtractionPattern AfterTrigger(std::vector<std::string> trigger,
                                        std::size_t max_phrase_len = 5);
  void Validate() const;
};

// Pattern file: one pattern per line, tab-separated, '#' starts a comment.
//   between <TAB> the <TAB> virus [<TAB> max_len] [<TAB> case_sensitive]
//   after   <TAB> patients with   [<TAB> max_len] [<TAB> case_sensitive]
// Literals may hold several space-separated tokens.
std::vector<ExtractionPattern> LoadPatterns(const std::filesystem::path& path);
std::vector<ExtractionPattern> ParsePatterns(const std::string& text);

struct CandidatePhrase {
  std::vector<std::string> tokens;  // surface form
  std::string lower;                // lowercase tokens joined by one space
  std::uint64_t freq = 1;

  bool rare() const { return freq < 2; }
};

CandidatePhrase MakeCandidate(std::vector<std::string> tokens);

struct CandidateMatch {
  CandidatePhrase phrase;
  std::size_t begin = 0;  // token span within the sentence
  std::size_t end = 0;
};

// Chunk spans from an external chunker keyed by (doc_id, sentence index).
// File format: doc_id <TAB> sentence_index <TAB> begin <TAB> end (token
// offsets, end exclusive), one chunk per line.
class ChunkAnnotations {
 public:
  static ChunkAnnotations Load(const std::filesystem::path& path);
  void Add(const std::string& doc_id, std::size_t sentence, std::size_t begin, std::size_t end);
  // Chunks of the sentence sorted by begin; nullptr when none are recorded.
  const std::vector<std::pair<std::size_t, std::size_t>>* Find(const std::string& doc_id,
                                                              std::size_t sentence) const;

 private:
  std::map<std::pair<std::string, std::size_t>, std::vector<std::pair<std::size_t, std::size_t>>>
      chunks_;
};

bool IsStopword(const std::string& lower);

std::vector<CandidateMatch> ExtractBetween(const Sentence& sentence,
                                           const ExtractionPattern& pattern);

// Emits the noun-phrase-like span after each trigger occurrence, one per
// conjunct of a coordinated list. With chunks for this sentence, spans come
// from the chunk starting right after the trigger instead of the heuristic.
std::vector<CandidateMatch> ExtractAfterTrigger(const Sentence& sentence,
                                                const ExtractionPattern& pattern,
                                                const ChunkAnnotations* chunks = nullptr);

std::vector<CandidateMatch> ExtractCandidates(const Sentence& sentence,
                                              const std::vector<ExtractionPattern>& patterns,
                                              const ChunkAnnotations* chunks = nullptr);

// Merges matches by lowercase form. The reported surface form is the most
// frequent one (ties: lexicographically smallest), so the result does not
// depend on match order.
class CandidateAggregator {
 public:
  void Add(const CandidatePhrase& phrase);
  void Merge(const CandidateAggregator& other);
  // Sorted by (freq desc, lower asc).
  std::vector<CandidatePhrase> Finish() const;

 private:
  struct Entry {
    std::uint64_t freq = 0;
    std::map<std::string, std::uint64_t> surfaces;
  };
  std::map<std::string, Entry> entries_;
};

std::vector<CandidatePhrase> AggregateCandidates(const std::vector<CandidateMatch>& matches);

// Candidate file: lowercase form <TAB> frequency, one per line.
void SaveCandidates(const std::filesystem::path& path, const std::vector<CandidatePhrase>& list);
std::vector<CandidatePhrase> LoadCandidates(const std::filesystem::path& path);

}  // namespace forge
