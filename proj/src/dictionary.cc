#include "forge/dictionary.h"

#include <fstream>
#include <iomanip>

#include "forge/corpus.h"
#include "forge/error.h"

namespace forge {
namespace {

std::vector<std::string> PhraseTokens(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto& t : Tokenize(phrase)) out.push_back(std::move(t.text));
  return out;
}

std::string KeyOf(const std::vector<std::string>& tokens) {
  std::vector<std::string> lowers;
  for (const auto& t : tokens) lowers.push_back(Utf8Lower(t));
  return Join(lowers, " ");
}

}  // namespace

std::string_view ProvenanceName(Provenance provenance) {
  switch (provenance) {
    case Provenance::kCca: return "cca";
    case Provenance::kCotrain: return "cotrain";
    case Provenance::kManual: return "manual";
    case Provenance::kCandidateList: return "candidate-list";
  }
  return "manual";
}

Provenance ParseProvenance(std::string_view name) {
  if (name == "cca") return Provenance::kCca;
  if (name == "cotrain") return Provenance::kCotrain;
  if (name == "manual") return Provenance::kManual;
  if (name == "candidate-list") return Provenance::kCandidateList;
  throw Error("unknown dictionary provenance '" + std::string(name) + "'");
}

std::string NormalizePhraseKey(std::string_view phrase) { return KeyOf(PhraseTokens(phrase)); }

bool Dictionary::Add(std::string_view phrase, std::optional<double> score) {
  DictionaryEntry entry;
  entry.tokens = PhraseTokens(phrase);
  if (entry.tokens.empty()) return false;
  entry.key = KeyOf(entry.tokens);
  if (index_.count(entry.key)) return false;
  entry.score = score;
  index_.emplace(entry.key, entries_.size());
  entries_.push_back(std::move(entry));
  return true;
}

bool Dictionary::Contains(std::string_view phrase) const {
  return index_.count(NormalizePhraseKey(phrase)) > 0;
}

std::set<std::string> Dictionary::Keys() const {
  std::set<std::string> keys;
  for (const auto& e : entries_) keys.insert(e.key);
  return keys;
}

void Dictionary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dictionary " + path.string());
  out << "# provenance=" << ProvenanceName(provenance_) << '\n';
  for (const auto& [key, value] : metadata_) {
    if (key == "provenance") continue;
    out << "# " << key << '=' << value << '\n';
  }
  out << std::setprecision(10);
  for (const auto& e : entries_) {
    out << Join(e.tokens, " ");
    if (e.score) out << '\t' << *e.score;
    out << '\n';
  }
}

Dictionary Dictionary::Load(const std::filesystem::path& path, Provenance fallback) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read dictionary " + path.string());
  Dictionary dict(fallback);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = Trim(line.substr(2, eq - 2));
      std::string value = Trim(line.substr(eq + 1));
      if (key == "provenance") {
        dict.provenance_ = ParseProvenance(value);
      } else {
        dict.metadata_[key] = value;
      }
      continue;
    }
    auto fields = Split(line, '\t');
    std::optional<double> score;
    if (fields.size() > 1 && !Trim(fields[1]).empty()) score = std::stod(fields[1]);
    dict.Add(fields[0], score);
  }
  return dict;
}

}  // namespace forge
