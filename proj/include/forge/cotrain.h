#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "forge/dictionary.h"
#include "forge/svm.h"
#include "forge/views.h"

namespace forge {

enum class RuleView { kSpelling, kContext };
enum class RuleLabel { kPositive, kNegative };

struct Rule {
  RuleView view = RuleView::kSpelling;
  // "full-string=<phrase>" or "<pos>:<word>|<pos>:<word>" for context bigrams.
  std::string condition;
  RuleLabel label = RuleLabel::kPositive;
  std::uint64_t count_match = 0;
  std::uint64_t count_total = 0;
  double strength = 0.0;
  std::size_t iteration = 0;  // 0 for seed rules
};

struct StrengthEstimator {
  // Add-alpha smoothing (match + alpha) / (total + 2 alpha) when enabled;
  // otherwise plain precision match / total.
  bool smoothed = false;
  double alpha = 0.1;
};

// Undefined for count_total == 0 (returns a negative value; callers skip).
double RuleStrength(std::uint64_t count_match, std::uint64_t count_total,
                    const StrengthEstimator& estimator = {});

std::string SpellingCondition(const std::string& phrase);
// All 15 position-ordered pairs of the six context words of an occurrence.
std::vector<std::string> ContextBigramConditions(const CandidateOccurrence& occ);

struct CotrainOptions {
  std::size_t m = 5;
  double epsilon = 0.95;
  StrengthEstimator estimator;
  std::size_t max_iterations = 1000;
};

struct IterationTrace {
  std::size_t iteration = 0;
  std::size_t labeled_by_spelling = 0;
  std::size_t labeled_by_context = 0;
  std::vector<Rule> added_context;
  std::vector<Rule> added_spelling;
};

struct SpellingStats {
  std::uint64_t positive = 0;
  std::uint64_t total = 0;
};

struct DecisionListState {
  std::vector<Rule> spelling_rules;
  std::vector<Rule> context_rules;
  std::vector<int> labels;  // per occurrence: +1, -1, 0 (unlabeled), from the last labeling
  std::size_t iteration = 0;
  std::vector<IterationTrace> trace;
  // Per phrase counts over the final context-rule labeling; used for the
  // theta coverage heuristic.
  std::map<std::string, SpellingStats> final_spelling_stats;
  StrengthEstimator estimator;
};

// DL-CoTrain: alternate spelling-list labeling and context-rule induction
// (i*m new rules per label whose strength exceeds epsilon, ranked by
// count_match, then strength, then condition), then context labeling and
// spelling-rule induction, until an iteration adds nothing.
DecisionListState DlCotrain(const OccurrenceSet& occurrences, const SeedSet& seeds,
                            const CotrainOptions& options);

// Positive spelling phrases whose strength exceeds theta: seed rules,
// induced rules, and phrases by their strength under the final labeling.
// theta == 1 admits exactly the rules with strength 1.
Dictionary DictionaryFromRules(const DecisionListState& state, double theta);

// One JSON object per iteration.
void WriteTrace(std::ostream& out, const DecisionListState& state);

}  // namespace forge
