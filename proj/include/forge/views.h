#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "forge/candidates.h"
#include "forge/corpus.h"
#include "forge/phrase_matcher.h"

namespace forge {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Pads context windows at sentence edges.
inline constexpr std::string_view kBoundarySymbol = "<s>";
inline constexpr std::array<int, 6> kContextPositions = {-3, -2, -1, 1, 2, 3};

struct Locator {
  std::string doc_id;
  std::size_t sentence = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct CandidateOccurrence {
  std::size_t phrase_id = 0;
  std::array<std::string, 3> left;   // positions -3, -2, -1 (lowercased)
  std::array<std::string, 3> right;  // positions +1, +2, +3 (lowercased)
  bool capitalized = false;          // this occurrence starts uppercase
  Locator locator;

  // Word at a context position in kContextPositions.
  const std::string& ContextWord(int position) const;
};

struct OccurrenceSet {
  std::vector<std::string> phrases;  // lowercase forms, indexed by phrase_id
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> capitalized_counts;
  std::vector<CandidateOccurrence> occurrences;  // corpus order

  // Majority casing over the corpus; ties count as lowercase.
  bool MajorityCapitalized(std::size_t phrase_id) const;
};

// Gathers one occurrence per maximal, non-overlapping candidate match.
class OccurrenceCollector {
 public:
  explicit OccurrenceCollector(const std::vector<CandidatePhrase>& candidates);

  void Add(const Sentence& sentence);
  OccurrenceSet Finish() &&;

 private:
  PhraseMatcher matcher_;
  OccurrenceSet set_;
};

OccurrenceSet CollectOccurrences(const std::vector<Sentence>& sentences,
                                 const std::vector<CandidatePhrase>& candidates);

// Word-embedding mode: every vocabulary type becomes a one-token candidate.
std::vector<CandidatePhrase> WordCandidates(const VocabStats& vocab);

// Bidirectional feature-name <-> column map. Grows until frozen; afterwards
// Add and Lookup of unseen names throw LookupError.
class FeatureIndex {
 public:
  std::size_t Add(std::string_view name);
  std::optional<std::size_t> Find(std::string_view name) const;
  std::size_t Lookup(std::string_view name) const;
  const std::string& Name(std::size_t id) const;
  void Freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return names_.size(); }

  void Save(const std::filesystem::path& path) const;
  static FeatureIndex Load(const std::filesystem::path& path);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> ids_;
  bool frozen_ = false;
};

// Column ids strictly increasing, no explicit zeros.
class SparseVector {
 public:
  SparseVector() = default;
  // Sorts, sums duplicate columns and drops zeros.
  static SparseVector FromUnsorted(std::vector<std::pair<std::size_t, double>> entries);

  const std::vector<std::pair<std::size_t, double>>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<std::pair<std::size_t, double>> entries_;
};

std::string SpellingFeatureName(std::string_view phrase);
std::string ContextFeatureName(int position, std::string_view word);
inline constexpr std::string_view kCapsFeature = "caps";
inline constexpr std::string_view kOovWord = "<oov>";

struct ViewSpace {
  FeatureIndex spelling;
  FeatureIndex context;
  std::size_t caps_column = 0;
  std::array<std::size_t, 6> oov_columns{};

  std::size_t d1() const { return spelling.size(); }
  std::size_t d2() const { return context.size(); }
  // Columns that may be empty in the training matrices.
  bool IsReservedSpelling(std::size_t column) const { return column == caps_column; }
  bool IsReservedContext(std::size_t column) const;
};

// Identity feature of the phrase plus the caps bit when `capitalized`.
SparseVector SpellingVector(std::string_view phrase, bool capitalized, const ViewSpace& space);
SparseVector FeaturizeSpelling(const CandidateOccurrence& occ, const OccurrenceSet& set,
                               const ViewSpace& space);
// One feature per context position; unseen words map to the position's OOV
// column.
SparseVector FeaturizeContext(const CandidateOccurrence& occ, const ViewSpace& space);

struct DesignMatrices {
  SparseRowMatrix x;  // n x d1, spelling view
  SparseRowMatrix z;  // n x d2, context view
  ViewSpace space;
};

DesignMatrices BuildDesignMatrices(const OccurrenceSet& set);

// Triplet format: "n d nnz" header, then "row col value" lines.
void WriteTriplets(const std::filesystem::path& path, const SparseRowMatrix& m);
SparseRowMatrix ReadTriplets(const std::filesystem::path& path);

struct ViewData {
  OccurrenceSet occurrences;
  DesignMatrices matrices;
};

// A views directory holds spelling.mtx, context.mtx, spelling.index,
// context.index, phrases.tsv and the row-aligned locator audit file
// occurrences.tsv.
void SaveViews(const std::filesystem::path& dir, const OccurrenceSet& set,
               const DesignMatrices& matrices);
ViewData LoadViews(const std::filesystem::path& dir);
// Occurrences only; skips the matrices.
OccurrenceSet LoadOccurrences(const std::filesystem::path& dir);

}  // namespace forge
