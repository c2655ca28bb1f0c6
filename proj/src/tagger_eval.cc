#include "forge/tagger_eval.h"

#include <fstream>

#include <json.hpp>

#include "forge/error.h"

namespace forge {

char TagChar(Tag tag) {
  switch (tag) {
    case Tag::kB: return 'B';
    case Tag::kI: return 'I';
    case Tag::kO: return 'O';
  }
  return 'O';
}

Tag ParseTag(std::string_view text) {
  if (text.empty()) throw Error("empty tag");
  if (text.size() > 1 && text[1] != '-') throw Error("bad tag '" + std::string(text) + "'");
  switch (text[0]) {
    case 'B': return Tag::kB;
    case 'I': return Tag::kI;
    case 'O':
      if (text.size() > 1) throw Error("bad tag '" + std::string(text) + "'");
      return Tag::kO;
  }
  throw Error("bad tag '" + std::string(text) + "'");
}

bool IsWellFormed(const std::vector<Tag>& tags) {
  Tag prev = Tag::kO;
  for (Tag t : tags) {
    if (t == Tag::kI && prev == Tag::kO) return false;
    prev = t;
  }
  return true;
}

std::set<Span> ExtractSpans(const std::vector<Tag>& tags) {
  std::set<Span> spans;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == Tag::kO) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tags.size() && tags[j] == Tag::kI) ++j;
    spans.insert(Span{i, j});
    i = j;
  }
  return spans;
}

DictionaryTagger::DictionaryTagger(const Dictionary& dictionary, bool case_sensitive)
    : case_sensitive_(case_sensitive) {
  for (const auto& e : dictionary.entries()) {
    matcher_.Add(case_sensitive ? e.tokens : SplitWhitespace(e.key));
  }
}

std::vector<Tag> DictionaryTagger::Apply(const std::vector<std::string>& tokens) const {
  std::vector<Tag> tags(tokens.size(), Tag::kO);
  std::vector<std::string> forms = tokens;
  if (!case_sensitive_) {
    for (auto& f : forms) f = Utf8Lower(f);
  }
  for (const auto& m : matcher_.FindAll(forms)) {
    tags[m.begin] = Tag::kB;
    for (std::size_t i = m.begin + 1; i < m.end; ++i) tags[i] = Tag::kI;
  }
  return tags;
}

std::vector<Tag> DictionaryTagger::Apply(const Sentence& sentence) const {
  return Apply(sentence.Texts());
}

std::vector<Tag> TagWithDictionary(const Sentence& sentence, const Dictionary& dictionary,
                                   bool case_sensitive) {
  return DictionaryTagger(dictionary, case_sensitive).Apply(sentence);
}

Sentence LabeledSentence::ToSentence() const {
  Sentence s;
  std::size_t offset = 0;
  for (const auto& t : tokens) {
    s.tokens.push_back(MakeToken(t, offset));
    offset += t.size() + 1;
  }
  return s;
}

void GoldCorpus::Validate() const {
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    if (s.tokens.size() != s.tags.size()) {
      throw Error("gold sentence " + std::to_string(i) + ": token and tag counts differ");
    }
    if (!IsWellFormed(s.tags)) {
      throw Error("gold sentence " + std::to_string(i) + ": malformed BIO sequence");
    }
  }
}

GoldCorpus GoldCorpus::LoadConll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  GoldCorpus corpus;
  LabeledSentence current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
    current = LabeledSentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) {
      flush();
      continue;
    }
    auto fields = Split(line, '\t');
    if (fields.size() < 2) {
      fields = SplitWhitespace(line);
      if (fields.size() < 2) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": expected token and tag");
      }
    }
    current.tokens.push_back(fields.front());
    try {
      current.tags.push_back(ParseTag(Trim(fields.back())));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  flush();
  corpus.Validate();
  return corpus;
}

void GoldCorpus::SaveConll(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i] << '\t' << TagChar(s.tags[i]) << '\n';
    }
    out << '\n';
  }
}

double EvalReport::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double EvalReport::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double EvalReport::f1() const {
  double p = precision();
  double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

void EvalReport::Add(const EvalReport& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
}

EvalReport EvaluateSentence(const std::vector<Tag>& predicted, const std::vector<Tag>& gold) {
  if (predicted.size() != gold.size()) throw Error("evaluate: token counts differ");
  const auto pred_spans = ExtractSpans(predicted);
  const auto gold_spans = ExtractSpans(gold);
  EvalReport r;
  for (const auto& s : pred_spans) {
    if (gold_spans.count(s)) {
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = gold_spans.size() - r.tp;
  return r;
}

EvalReport Evaluate(const std::vector<std::vector<Tag>>& predicted, const GoldCorpus& gold) {
  if (predicted.size() != gold.sentences.size()) {
    throw Error("evaluate: " + std::to_string(predicted.size()) + " predicted sentences vs " +
                std::to_string(gold.sentences.size()) + " gold");
  }
  EvalReport total;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].size() != gold.sentences[i].tags.size()) {
      throw Error("evaluate: sentence " + std::to_string(i) + " token counts differ");
    }
    total.Add(EvaluateSentence(predicted[i], gold.sentences[i].tags));
  }
  return total;
}

EvalReport EvaluateDictionary(const Dictionary& dictionary, const GoldCorpus& gold,
                              bool case_sensitive) {
  DictionaryTagger tagger(dictionary, case_sensitive);
  std::vector<std::vector<Tag>> predicted;
  predicted.reserve(gold.sentences.size());
  for (const auto& s : gold.sentences) predicted.push_back(tagger.Apply(s.tokens));
  return Evaluate(predicted, gold);
}

EvalReport CompareToTruth(const Dictionary& dictionary, const std::set<std::string>& truth) {
  std::set<std::string> keys;
  for (const auto& t : truth) keys.insert(NormalizePhraseKey(t));
  EvalReport report;
  for (const auto& key : dictionary.Keys()) {
    if (keys.count(key)) {
      ++report.tp;
    } else {
      ++report.fp;
    }
  }
  report.fn = keys.size() - report.tp;
  return report;
}

std::string ReportJson(const EvalReport& report, const Dictionary* dictionary) {
  nlohmann::json j = {{"tp", report.tp},
                      {"fp", report.fp},
                      {"fn", report.fn},
                      {"precision", report.precision()},
                      {"recall", report.recall()},
                      {"f1", report.f1()}};
  if (dictionary) {
    j["dictionary"] = {{"provenance", std::string(ProvenanceName(dictionary->provenance()))},
                       {"size", dictionary->size()},
                       {"metadata", dictionary->metadata()}};
  }
  return j.dump(2);
}

}  // namespace forge
