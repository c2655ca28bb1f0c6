#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace forge {

enum class Provenance { kCca, kCotrain, kManual, kCandidateList };

std::string_view ProvenanceName(Provenance provenance);
Provenance ParseProvenance(std::string_view name);

struct DictionaryEntry {
  std::vector<std::string> tokens;  // surface tokens as supplied
  std::string key;                  // lowercase tokens joined by one space
  std::optional<double> score;
};

// Named-entity phrase set with set semantics on the lowercase key. Phrases
// are run through the corpus tokenizer so they match tokenized sentences.
class Dictionary {
 public:
  explicit Dictionary(Provenance provenance = Provenance::kManual) : provenance_(provenance) {}

  // Returns false for empty or already-present phrases.
  bool Add(std::string_view phrase, std::optional<double> score = std::nullopt);
  bool Contains(std::string_view phrase) const;

  const std::vector<DictionaryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::set<std::string> Keys() const;

  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }
  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // "# key=value" header lines (provenance first), then "phrase[\tscore]".
  void Save(const std::filesystem::path& path) const;
  // Plain phrase lists without a header load with `fallback` provenance.
  static Dictionary Load(const std::filesystem::path& path,
                         Provenance fallback = Provenance::kManual);

 private:
  Provenance provenance_;
  std::map<std::string, std::string> metadata_;
  std::vector<DictionaryEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string NormalizePhraseKey(std::string_view phrase);

}  // namespace forge
