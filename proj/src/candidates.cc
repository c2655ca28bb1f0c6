#include "forge/candidates.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "forge/error.h"

namespace forge {
namespace {

const std::set<std::string>& Stopwords() {
  static const std::set<std::string> kWords = {
      "a", "about", "above", "after", "again", "against", "all", "also", "although", "am",
      "among", "an", "and", "any", "are", "as", "at", "be", "because", "been", "before",
      "being", "below", "between", "both", "but", "by", "can", "could", "did", "do", "does",
      "doing", "due", "during", "each", "either", "else", "even", "ever", "every", "few",
      "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
      "him", "his", "how", "however", "i", "if", "in", "including", "into", "is", "it", "its",
      "itself", "like", "may", "might", "more", "most", "much", "must", "my", "neither", "no",
      "nor", "not", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "out",
      "over", "own", "per", "rather", "same", "shall", "she", "should", "since", "so",
      "some", "such", "than", "that", "the", "their", "theirs", "them", "then", "there",
      "these", "they", "this", "those", "though", "through", "thus", "to", "too", "under",
      "until", "up", "upon", "us", "very", "via", "was", "we", "were", "what", "when",
      "where", "whereas", "whether", "which", "while", "who", "whom", "whose", "why", "will",
      "with", "within", "without", "would", "yet", "you", "your", "who", "showed", "received",
      "underwent", "developed", "presented", "treated", "undergoing", "admitted", "enrolled",
      "included", "diagnosed", "suffering", "patients", "using", "used", "who", "compared",
      "versus", "vs"};
  return kWords;
}

bool IsDeterminer(const std::string& lower) {
  return lower == "the" || lower == "a" || lower == "an";
}

bool IsConjunction(const std::string& lower) { return lower == "and" || lower == "or"; }

std::vector<std::string> Forms(const Sentence& sentence, bool case_sensitive) {
  return case_sensitive ? sentence.Texts() : sentence.Lowers();
}

std::vector<std::string> LiteralForms(const std::vector<std::string>& literal,
                                      bool case_sensitive) {
  if (case_sensitive) return literal;
  std::vector<std::string> out;
  for (const auto& t : literal) out.push_back(Utf8Lower(t));
  return out;
}

bool MatchesAt(const std::vector<std::string>& forms, std::size_t pos,
               const std::vector<std::string>& literal) {
  if (pos + literal.size() > forms.size()) return false;
  return std::equal(literal.begin(), literal.end(), forms.begin() + pos);
}

CandidateMatch MakeMatch(const Sentence& sentence, std::size_t begin, std::size_t end) {
  std::vector<std::string> tokens;
  for (std::size_t i = begin; i < end; ++i) tokens.push_back(sentence.tokens[i].text);
  return CandidateMatch{MakeCandidate(std::move(tokens)), begin, end};
}

// Span of non-stopword, non-punctuation tokens starting at `pos`.
std::size_t HeuristicSpanEnd(const Sentence& sentence, std::size_t pos, std::size_t max_len) {
  std::size_t end = pos;
  while (end < sentence.tokens.size() && end - pos < max_len) {
    const Token& t = sentence.tokens[end];
    if (IsPunctuationToken(t.text) || IsStopword(t.lower)) break;
    ++end;
  }
  return end;
}

std::size_t ChunkSpanEnd(const Sentence& sentence, std::size_t pos, std::size_t max_len,
                         const std::vector<std::pair<std::size_t, std::size_t>>& chunks) {
  for (const auto& [begin, end] : chunks) {
    if (end <= pos || begin > pos) continue;
    // Chunks covering `pos` may start with the determiner just skipped.
    std::size_t stop = end;
    while (stop > pos && IsStopword(sentence.tokens[stop - 1].lower)) --stop;
    if (stop > pos && stop - pos <= max_len) return stop;
    return pos;
  }
  return pos;
}

}  // namespace

bool IsStopword(const std::string& lower) { return Stopwords().count(lower) > 0; }

ExtractionPattern ExtractionPattern::Between(std::vector<std::string> left,
                                             std::vector<std::string> right,
                                             std::size_t max_phrase_len) {
  ExtractionPattern p;
  p.kind = PatternKind::kBetween;
  p.left = std::move(left);
  p.right = std::move(right);
  p.max_phrase_len = max_phrase_len;
  p.Validate();
  return p;
}

ExtractionPattern ExtractionPattern::AfterTrigger(std::vector<std::string> trigger,
                                                  std::size_t max_phrase_len) {
  ExtractionPattern p;
  p.kind = PatternKind::kAfterTrigger;
  p.left = std::move(trigger);
  p.max_phrase_len = max_phrase_len;
  p.Validate();
  return p;
}

void ExtractionPattern::Validate() const {
  if (max_phrase_len < 1) throw Error("pattern: max_phrase_len must be at least 1");
  if (left.empty()) throw Error("pattern: empty left literal or trigger");
  if (kind == PatternKind::kBetween && right.empty()) throw Error("pattern: empty right literal");
  if (kind == PatternKind::kAfterTrigger && !right.empty()) {
    throw Error("pattern: after-trigger patterns take no right literal");
  }
}

std::vector<ExtractionPattern> ParsePatterns(const std::string& text) {
  std::vector<ExtractionPattern> patterns;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    std::vector<std::string> fields = Split(trimmed, '\t');
    for (auto& f : fields) f = Trim(f);
    auto fail = [&](const std::string& why) {
      throw Error("patterns line " + std::to_string(line_no) + ": " + why);
    };
    ExtractionPattern p;
    std::size_t next = 0;
    if (fields[0] == "between") {
      if (fields.size() < 3) fail("between needs left and right literals");
      p.kind = PatternKind::kBetween;
      p.left = SplitWhitespace(fields[1]);
      p.right = SplitWhitespace(fields[2]);
      next = 3;
    } else if (fields[0] == "after") {
      if (fields.size() < 2) fail("after needs a trigger");
      p.kind = PatternKind::kAfterTrigger;
      p.left = SplitWhitespace(fields[1]);
      next = 2;
    } else {
      fail("unknown pattern kind '" + fields[0] + "'");
    }
    for (; next < fields.size(); ++next) {
      if (fields[next] == "case_sensitive") {
        p.case_sensitive = true;
      } else {
        try {
          std::size_t used = 0;
          long value = std::stol(fields[next], &used);
          if (used != fields[next].size() || value < 1) fail("bad max_len '" + fields[next] + "'");
          p.max_phrase_len = static_cast<std::size_t>(value);
        } catch (const std::logic_error&) {
          fail("bad field '" + fields[next] + "'");
        }
      }
    }
    try {
      p.Validate();
    } catch (const Error& e) {
      fail(e.what());
    }
    patterns.push_back(std::move(p));
  }
  return patterns;
}

std::vector<ExtractionPattern> LoadPatterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read pattern file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParsePatterns(buffer.str());
}

CandidatePhrase MakeCandidate(std::vector<std::string> tokens) {
  CandidatePhrase phrase;
  std::vector<std::string> lowers;
  for (const auto& t : tokens) lowers.push_back(Utf8Lower(t));
  phrase.lower = Join(lowers, " ");
  phrase.tokens = std::move(tokens);
  phrase.freq = 1;
  return phrase;
}

ChunkAnnotations ChunkAnnotations::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read chunk file: " + path.string());
  ChunkAnnotations chunks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::vector<std::string> f = Split(line, '\t');
    if (f.size() != 4) throw Error("chunk file line " + std::to_string(line_no) + ": need 4 fields");
    std::size_t begin = std::stoul(f[2]);
    std::size_t end = std::stoul(f[3]);
    if (end <= begin) throw Error("chunk file line " + std::to_string(line_no) + ": empty span");
    chunks.Add(f[0], std::stoul(f[1]), begin, end);
  }
  return chunks;
}

void ChunkAnnotations::Add(const std::string& doc_id, std::size_t sentence, std::size_t begin,
                           std::size_t end) {
  auto& spans = chunks_[{doc_id, sentence}];
  spans.emplace_back(begin, end);
  std::sort(spans.begin(), spans.end());
}

const std::vector<std::pair<std::size_t, std::size_t>>* ChunkAnnotations::Find(
    const std::string& doc_id, std::size_t sentence) const {
  auto it = chunks_.find({doc_id, sentence});
  return it == chunks_.end() ? nullptr : &it->second;
}

std::vector<CandidateMatch> ExtractBetween(const Sentence& sentence,
                                           const ExtractionPattern& pattern) {
  if (pattern.kind != PatternKind::kBetween) throw Error("ExtractBetween: wrong pattern kind");
  const auto forms = Forms(sentence, pattern.case_sensitive);
  const auto left = LiteralForms(pattern.left, pattern.case_sensitive);
  const auto right = LiteralForms(pattern.right, pattern.case_sensitive);
  std::vector<CandidateMatch> out;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    if (!MatchesAt(forms, i, left)) continue;
    const std::size_t start = i + left.size();
    for (std::size_t j = start; j < forms.size() && j - start <= pattern.max_phrase_len; ++j) {
      if (MatchesAt(forms, j, right)) {
        if (j > start) out.push_back(MakeMatch(sentence, start, j));
        break;
      }
      // A nearer left literal owns the span; punctuation ends it.
      if (IsPunctuationToken(sentence.tokens[j].text) || MatchesAt(forms, j, left)) break;
    }
  }
  return out;
}

std::vector<CandidateMatch> ExtractAfterTrigger(const Sentence& sentence,
                                                const ExtractionPattern& pattern,
                                                const ChunkAnnotations* chunks) {
  if (pattern.kind != PatternKind::kAfterTrigger) {
    throw Error("ExtractAfterTrigger: wrong pattern kind");
  }
  const auto forms = Forms(sentence, pattern.case_sensitive);
  const auto trigger = LiteralForms(pattern.left, pattern.case_sensitive);
  const std::vector<std::pair<std::size_t, std::size_t>>* sentence_chunks =
      chunks ? chunks->Find(sentence.doc_id, sentence.index) : nullptr;
  const std::size_t n = sentence.tokens.size();

  std::vector<CandidateMatch> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!MatchesAt(forms, i, trigger)) continue;
    std::size_t pos = i + trigger.size();
    while (true) {
      while (pos < n && IsDeterminer(sentence.tokens[pos].lower)) ++pos;
      if (pos >= n) break;
      std::size_t end = sentence_chunks
                            ? ChunkSpanEnd(sentence, pos, pattern.max_phrase_len, *sentence_chunks)
                            : HeuristicSpanEnd(sentence, pos, pattern.max_phrase_len);
      if (end == pos) break;
      out.push_back(MakeMatch(sentence, pos, end));
      // Continue over ", " / "and" / "or" separators of a coordinated list.
      std::size_t next = end;
      bool separated = false;
      if (next < n && sentence.tokens[next].text == ",") {
        ++next;
        separated = true;
      }
      if (next < n && IsConjunction(sentence.tokens[next].lower)) {
        ++next;
        separated = true;
      }
      if (!separated) break;
      pos = next;
    }
  }
  return out;
}

std::vector<CandidateMatch> ExtractCandidates(const Sentence& sentence,
                                              const std::vector<ExtractionPattern>& patterns,
                                              const ChunkAnnotations* chunks) {
  std::vector<CandidateMatch> out;
  for (const auto& pattern : patterns) {
    auto matches = pattern.kind == PatternKind::kBetween
                       ? ExtractBetween(sentence, pattern)
                       : ExtractAfterTrigger(sentence, pattern, chunks);
    out.insert(out.end(), std::make_move_iterator(matches.begin()),
               std::make_move_iterator(matches.end()));
  }
  return out;
}

void CandidateAggregator::Add(const CandidatePhrase& phrase) {
  Entry& entry = entries_[phrase.lower];
  entry.freq += phrase.freq;
  entry.surfaces[Join(phrase.tokens, " ")] += phrase.freq;
}

void CandidateAggregator::Merge(const CandidateAggregator& other) {
  for (const auto& [lower, entry] : other.entries_) {
    Entry& mine = entries_[lower];
    mine.freq += entry.freq;
    for (const auto& [surface, count] : entry.surfaces) mine.surfaces[surface] += count;
  }
}

std::vector<CandidatePhrase> CandidateAggregator::Finish() const {
  std::vector<CandidatePhrase> out;
  out.reserve(entries_.size());
  for (const auto& [lower, entry] : entries_) {
    const std::string* best = nullptr;
    std::uint64_t best_count = 0;
    for (const auto& [surface, count] : entry.surfaces) {
      if (count > best_count) {
        best = &surface;
        best_count = count;
      }
    }
    CandidatePhrase phrase;
    phrase.lower = lower;
    phrase.tokens = best ? SplitWhitespace(*best) : SplitWhitespace(lower);
    phrase.freq = entry.freq;
    out.push_back(std::move(phrase));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.freq > b.freq;
  });
  return out;
}

std::vector<CandidatePhrase> AggregateCandidates(const std::vector<CandidateMatch>& matches) {
  CandidateAggregator aggregator;
  for (const auto& m : matches) aggregator.Add(m.phrase);
  return aggregator.Finish();
}

void SaveCandidates(const std::filesystem::path& path, const std::vector<CandidatePhrase>& list) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write candidate file: " + path.string());
  for (const auto& c : list) out << c.lower << '\t' << c.freq << '\n';
}

std::vector<CandidatePhrase> LoadCandidates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read candidate file: " + path.string());
  std::vector<CandidatePhrase> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string> f = Split(line, '\t');
    CandidatePhrase c;
    c.tokens = SplitWhitespace(f[0]);
    if (c.tokens.empty()) throw Error("candidate file line " + std::to_string(line_no) + ": empty");
    c.lower = Join(c.tokens, " ");
    c.freq = f.size() > 1 ? std::stoull(f[1]) : 1;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace forge
