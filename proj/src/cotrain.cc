#include "forge/cotrain.h"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "forge/error.h"

namespace forge {
namespace {

constexpr std::size_t kNoRule = std::numeric_limits<std::size_t>::max();

struct Interned {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> ids;

  std::size_t Id(const std::string& name) {
    auto [it, inserted] = ids.emplace(name, names.size());
    if (inserted) names.push_back(name);
    return it->second;
  }
};

struct Counts {
  std::uint64_t positive = 0;
  std::uint64_t total = 0;
};

// Picks up to `quota` new rules per label among conditions not yet in the
// list, with strength strictly above epsilon.
std::vector<Rule> InduceRules(RuleView view, const std::vector<Counts>& counts,
                              const std::vector<std::string>& names,
                              const std::vector<std::size_t>& in_list, std::size_t quota,
                              std::size_t iteration, const CotrainOptions& options) {
  std::vector<Rule> added;
  for (RuleLabel label : {RuleLabel::kPositive, RuleLabel::kNegative}) {
    std::vector<Rule> pool;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c].total == 0 || in_list[c] != kNoRule) continue;
      std::uint64_t match = label == RuleLabel::kPositive ? counts[c].positive
                                                          : counts[c].total - counts[c].positive;
      double strength = RuleStrength(match, counts[c].total, options.estimator);
      if (!(strength > options.epsilon)) continue;
      pool.push_back(Rule{view, names[c], label, match, counts[c].total, strength, iteration});
    }
    std::sort(pool.begin(), pool.end(), [](const Rule& a, const Rule& b) {
      if (a.count_match != b.count_match) return a.count_match > b.count_match;
      if (a.strength != b.strength) return a.strength > b.strength;
      return a.condition < b.condition;
    });
    if (pool.size() > quota) pool.resize(quota);
    added.insert(added.end(), pool.begin(), pool.end());
  }
  return added;
}

int LabelSign(RuleLabel label) { return label == RuleLabel::kPositive ? 1 : -1; }

}  // namespace

double RuleStrength(std::uint64_t count_match, std::uint64_t count_total,
                    const StrengthEstimator& estimator) {
  if (count_total == 0) return -1.0;
  if (estimator.smoothed) {
    return (static_cast<double>(count_match) + estimator.alpha) /
           (static_cast<double>(count_total) + 2.0 * estimator.alpha);
  }
  return static_cast<double>(count_match) / static_cast<double>(count_total);
}

std::string SpellingCondition(const std::string& phrase) { return "full-string=" + phrase; }

std::vector<std::string> ContextBigramConditions(const CandidateOccurrence& occ) {
  std::vector<std::string> out;
  out.reserve(15);
  for (std::size_t a = 0; a < kContextPositions.size(); ++a) {
    for (std::size_t b = a + 1; b < kContextPositions.size(); ++b) {
      int pa = kContextPositions[a];
      int pb = kContextPositions[b];
      out.push_back(ContextFeatureName(pa, occ.ContextWord(pa)) + "|" +
                    ContextFeatureName(pb, occ.ContextWord(pb)));
    }
  }
  return out;
}

DecisionListState DlCotrain(const OccurrenceSet& occurrences, const SeedSet& seeds,
                            const CotrainOptions& options) {
  if (options.m < 1) throw Error("dl_cotrain: m must be at least 1");
  if (!(options.epsilon > 0.0 && options.epsilon < 1.0)) {
    throw Error("dl_cotrain: epsilon must lie in (0, 1)");
  }
  seeds.Validate();

  const std::size_t num_phrases = occurrences.phrases.size();
  const std::size_t n = occurrences.occurrences.size();
  std::unordered_map<std::string, std::size_t> phrase_ids;
  std::vector<std::string> spelling_names(num_phrases);
  for (std::size_t p = 0; p < num_phrases; ++p) {
    phrase_ids.emplace(occurrences.phrases[p], p);
    spelling_names[p] = SpellingCondition(occurrences.phrases[p]);
  }

  Interned context;
  std::vector<std::vector<std::size_t>> occ_conditions(n);
  for (std::size_t o = 0; o < n; ++o) {
    for (const auto& c : ContextBigramConditions(occurrences.occurrences[o])) {
      occ_conditions[o].push_back(context.Id(c));
    }
  }

  DecisionListState state;
  state.estimator = options.estimator;
  std::vector<std::size_t> spelling_rule(num_phrases, kNoRule);
  std::vector<std::size_t> context_rule(context.names.size(), kNoRule);

  std::size_t resolved_pos = 0;
  std::size_t resolved_neg = 0;
  auto add_seeds = [&](const std::vector<std::string>& phrases, RuleLabel label) {
    for (const auto& phrase : phrases) {
      auto it = phrase_ids.find(phrase);
      if (it == phrase_ids.end() || occurrences.counts[it->second] == 0) {
        spdlog::warn("dl_cotrain: seed '{}' does not occur in the views", phrase);
        continue;
      }
      spelling_rule[it->second] = state.spelling_rules.size();
      state.spelling_rules.push_back(
          Rule{RuleView::kSpelling, spelling_names[it->second], label, 0, 0, 1.0, 0});
      (label == RuleLabel::kPositive ? resolved_pos : resolved_neg) += 1;
    }
  };
  add_seeds(seeds.positives, RuleLabel::kPositive);
  add_seeds(seeds.negatives, RuleLabel::kNegative);
  if (resolved_pos == 0 || resolved_neg == 0) {
    throw Error("dl_cotrain: seeds unresolvable; need at least one positive and one negative "
                "seed that occurs in the views");
  }

  std::vector<int> labels(n, 0);
  std::vector<Counts> phrase_counts(num_phrases);
  for (std::size_t i = 1; i <= options.max_iterations; ++i) {
    IterationTrace trace;
    trace.iteration = i;

    // Label with the spelling list.
    for (std::size_t o = 0; o < n; ++o) {
      std::size_t r = spelling_rule[occurrences.occurrences[o].phrase_id];
      labels[o] = r == kNoRule ? 0 : LabelSign(state.spelling_rules[r].label);
      trace.labeled_by_spelling += labels[o] != 0 ? 1 : 0;
    }

    // Induce context rules from the spelling labeling.
    std::vector<Counts> context_counts(context.names.size());
    for (std::size_t o = 0; o < n; ++o) {
      if (labels[o] == 0) continue;
      for (std::size_t c : occ_conditions[o]) {
        ++context_counts[c].total;
        if (labels[o] > 0) ++context_counts[c].positive;
      }
    }
    trace.added_context = InduceRules(RuleView::kContext, context_counts, context.names,
                                      context_rule, i * options.m, i, options);
    for (const Rule& rule : trace.added_context) {
      context_rule[context.ids.at(rule.condition)] = state.context_rules.size();
      state.context_rules.push_back(rule);
    }

    // Label with the context list: strongest matching rule, earliest on ties.
    for (std::size_t o = 0; o < n; ++o) {
      std::size_t best = kNoRule;
      for (std::size_t c : occ_conditions[o]) {
        std::size_t r = context_rule[c];
        if (r == kNoRule) continue;
        if (best == kNoRule || state.context_rules[r].strength > state.context_rules[best].strength ||
            (state.context_rules[r].strength == state.context_rules[best].strength && r < best)) {
          best = r;
        }
      }
      labels[o] = best == kNoRule ? 0 : LabelSign(state.context_rules[best].label);
      trace.labeled_by_context += labels[o] != 0 ? 1 : 0;
    }

    // Induce spelling rules from the context labeling.
    std::fill(phrase_counts.begin(), phrase_counts.end(), Counts{});
    for (std::size_t o = 0; o < n; ++o) {
      if (labels[o] == 0) continue;
      Counts& c = phrase_counts[occurrences.occurrences[o].phrase_id];
      ++c.total;
      if (labels[o] > 0) ++c.positive;
    }
    trace.added_spelling = InduceRules(RuleView::kSpelling, phrase_counts, spelling_names,
                                       spelling_rule, i * options.m, i, options);
    for (const Rule& rule : trace.added_spelling) {
      std::size_t p = phrase_ids.at(rule.condition.substr(std::string("full-string=").size()));
      spelling_rule[p] = state.spelling_rules.size();
      state.spelling_rules.push_back(rule);
    }

    state.iteration = i;
    const bool added = !trace.added_context.empty() || !trace.added_spelling.empty();
    spdlog::debug("dl_cotrain: iteration {} added {} context and {} spelling rules", i,
                  trace.added_context.size(), trace.added_spelling.size());
    state.trace.push_back(std::move(trace));
    if (!added) break;
  }

  state.labels = labels;
  for (std::size_t p = 0; p < num_phrases; ++p) {
    if (phrase_counts[p].total == 0) continue;
    state.final_spelling_stats[occurrences.phrases[p]] =
        SpellingStats{phrase_counts[p].positive, phrase_counts[p].total};
  }
  return state;
}

Dictionary DictionaryFromRules(const DecisionListState& state, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw Error("dictionary_from_rules: theta must lie in (0, 1]");
  auto passes = [theta](double s) { return s > theta || (theta >= 1.0 && s >= 1.0); };
  const std::string prefix = "full-string=";

  std::map<std::string, double> accepted;
  std::set<std::string> negative;
  for (const Rule& rule : state.spelling_rules) {
    std::string phrase = rule.condition.substr(prefix.size());
    if (rule.label == RuleLabel::kNegative) {
      negative.insert(phrase);
    } else if (passes(rule.strength)) {
      accepted[phrase] = std::max(accepted[phrase], rule.strength);
    }
  }
  for (const auto& [phrase, stats] : state.final_spelling_stats) {
    if (negative.count(phrase)) continue;
    double s = RuleStrength(stats.positive, stats.total, state.estimator);
    if (passes(s)) accepted[phrase] = std::max(accepted[phrase], s);
  }

  std::vector<std::pair<std::string, double>> ranked(accepted.begin(), accepted.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Dictionary dict(Provenance::kCotrain);
  for (const auto& [phrase, s] : ranked) dict.Add(phrase, s);
  dict.metadata()["theta"] = std::to_string(theta);
  dict.metadata()["iterations"] = std::to_string(state.iteration);
  return dict;
}

void WriteTrace(std::ostream& out, const DecisionListState& state) {
  auto rules_json = [](const std::vector<Rule>& rules) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Rule& r : rules) {
      arr.push_back({{"condition", r.condition},
                     {"label", r.label == RuleLabel::kPositive ? "positive" : "negative"},
                     {"count_match", r.count_match},
                     {"count_total", r.count_total},
                     {"strength", r.strength}});
    }
    return arr;
  };
  for (const auto& t : state.trace) {
    nlohmann::json line = {{"iteration", t.iteration},
                           {"labeled_by_spelling", t.labeled_by_spelling},
                           {"labeled_by_context", t.labeled_by_context},
                           {"added_context", rules_json(t.added_context)},
                           {"added_spelling", rules_json(t.added_spelling)}};
    out << line.dump() << '\n';
  }
}

}  // namespace forge
