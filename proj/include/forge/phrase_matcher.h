#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace forge {

struct PhraseMatch {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t phrase_id = 0;
};

// Token-sequence trie. FindAll scans left to right and takes the longest
// phrase starting at each position, so matches never overlap: longest match
// wins and earlier starts win over later ones.
class PhraseMatcher {
 public:
  // Returns the id of the phrase (its insertion rank). Re-adding a phrase
  // returns the existing id.
  std::size_t Add(const std::vector<std::string>& tokens);

  std::vector<PhraseMatch> FindAll(const std::vector<std::string>& tokens) const;

  std::size_t size() const { return num_phrases_; }

 private:
  struct Node {
    std::unordered_map<std::string, std::size_t> children;
    std::size_t phrase_id = kNone;
  };
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<Node> nodes_{Node{}};
  std::size_t num_phrases_ = 0;
};

}  // namespace forge
