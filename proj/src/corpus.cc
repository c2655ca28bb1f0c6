#include "forge/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <unicode/utf8.h>

#include "forge/error.h"

namespace forge {
namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Length in bytes of the code point starting at `pos`.
std::size_t CodePointLength(std::string_view text, std::size_t pos) {
  int32_t offset = static_cast<int32_t>(pos);
  UChar32 c;
  U8_NEXT(reinterpret_cast<const uint8_t*>(text.data()), offset,
          static_cast<int32_t>(text.size()), c);
  (void)c;
  return static_cast<std::size_t>(offset) - pos;
}

// Start of the code point ending at `end` (exclusive).
std::size_t PreviousCodePointStart(std::string_view text, std::size_t end) {
  int32_t offset = static_cast<int32_t>(end);
  UChar32 c;
  U8_PREV(reinterpret_cast<const uint8_t*>(text.data()), 0, offset, c);
  (void)c;
  return static_cast<std::size_t>(offset);
}

void TokenizeChunk(std::string_view text, std::size_t begin, std::size_t end,
                   std::vector<Token>& out) {
  std::vector<Token> trailing;
  while (begin < end) {
    std::size_t len = CodePointLength(text, begin);
    if (!IsPunctuationToken(text.substr(begin, len))) break;
    out.push_back(MakeToken(std::string(text.substr(begin, len)), begin));
    begin += len;
  }
  while (end > begin) {
    std::size_t start = PreviousCodePointStart(text, end);
    if (!IsPunctuationToken(text.substr(start, end - start))) break;
    trailing.push_back(MakeToken(std::string(text.substr(start, end - start)), start));
    end = start;
  }
  if (end > begin) out.push_back(MakeToken(std::string(text.substr(begin, end - begin)), begin));
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

bool IsTerminator(const Token& token) {
  return token.text == "." || token.text == "?" || token.text == "!";
}

}  // namespace

std::vector<std::string> Sentence::Texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::vector<std::string> Sentence::Lowers() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.lower);
  return out;
}

Token MakeToken(std::string text, std::size_t start) {
  Token token;
  token.char_start = start;
  token.char_end = start + text.size();
  token.lower = Utf8Lower(text);
  token.shape = ClassifyShape(text);
  token.text = std::move(text);
  return token;
}

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) TokenizeChunk(text, start, i, out);
  }
  return out;
}

std::set<std::string> SegmenterOptions::DefaultAbbreviations() {
  return {"al",   "approx", "ca",  "cf",  "co",   "dr",  "e.g", "eq",  "eqs",
          "et",   "etc",    "fig", "figs", "i.e", "inc", "jr",  "ltd", "mr",
          "mrs",  "ms",     "no",  "nos", "prof", "ref", "refs", "sr", "st",
          "vol",  "vs",     "resp", "sp",  "spp", "var", "viz"};
}

std::vector<Sentence> SegmentSentences(std::string_view document,
                                       const SegmenterOptions& options) {
  std::vector<Token> tokens = Tokenize(document);
  std::vector<Sentence> sentences;
  Sentence current;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    current.tokens.push_back(tokens[i]);
    if (i + 1 >= tokens.size() || !IsTerminator(tokens[i])) continue;
    const Token& next = tokens[i + 1];
    if (next.char_start == tokens[i].char_end) continue;
    if (!StartsUppercaseOrDigit(next.text)) continue;
    if (tokens[i].text == "." && i > 0 && tokens[i - 1].char_end == tokens[i].char_start &&
        options.abbreviations.count(tokens[i - 1].lower) > 0) {
      continue;
    }
    current.index = sentences.size();
    sentences.push_back(std::move(current));
    current = Sentence{};
  }
  if (!current.tokens.empty()) {
    current.index = sentences.size();
    sentences.push_back(std::move(current));
  }
  return sentences;
}

void VocabCounter::Add(const Sentence& sentence) {
  for (const auto& token : sentence.tokens) ++counts_[token.lower];
}

void VocabCounter::Merge(const VocabCounter& other) {
  for (const auto& [word, count] : other.counts_) counts_[word] += count;
}

VocabStats VocabCounter::Finish(std::size_t top_k) const {
  if (top_k == 0) throw Error("build_vocab: top_k must be at least 1");
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts_.begin(), counts_.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  VocabStats stats;
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) {
    stats.counts.insert(ranked[i]);
    stats.total_tokens += ranked[i].second;
  }
  return stats;
}

VocabStats BuildVocab(const std::vector<Sentence>& sentences, std::size_t top_k) {
  VocabCounter counter;
  for (const auto& s : sentences) counter.Add(s);
  return counter.Finish(top_k);
}

CorpusReader::CorpusReader(std::filesystem::path path, SegmenterOptions options)
    : path_(std::move(path)), options_(std::move(options)) {
  if (!std::filesystem::exists(path_)) throw Error("corpus not found: " + path_.string());
}

std::vector<std::filesystem::path> CorpusReader::Files() const {
  if (!std::filesystem::is_directory(path_)) return {path_};
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path_)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void CorpusReader::ForEachDocument(
    const std::function<void(const std::string&, const std::string&)>& fn) const {
  if (std::filesystem::is_directory(path_)) {
    for (const auto& file : Files()) {
      std::ifstream in(file, std::ios::binary);
      if (!in) throw Error("cannot read corpus file: " + file.string());
      std::stringstream buffer;
      buffer << in.rdbuf();
      fn(file.filename().string(), NormalizeNfc(buffer.str()));
    }
    return;
  }
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error("cannot read corpus file: " + path_.string());
  std::string line;
  std::size_t line_no = 0;
  const std::string base = path_.filename().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    fn(base + ":" + std::to_string(line_no), NormalizeNfc(line));
  }
}

void CorpusReader::ForEachSentence(const std::function<void(const Sentence&)>& fn) const {
  ForEachDocument([&](const std::string& doc_id, const std::string& text) {
    for (auto& sentence : SegmentSentences(text, options_)) {
      sentence.doc_id = doc_id;
      fn(sentence);
    }
  });
}

void WriteTokenLine(std::ostream& out, const Sentence& sentence) {
  out << sentence.doc_id << '\t' << sentence.index;
  for (const auto& token : sentence.tokens) out << '\t' << token.text;
  out << '\n';
}

}  // namespace forge
