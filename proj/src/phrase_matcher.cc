#include "forge/phrase_matcher.h"

#include "forge/error.h"

namespace forge {

std::size_t PhraseMatcher::Add(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw Error("PhraseMatcher: empty phrase");
  std::size_t node = 0;
  for (const auto& token : tokens) {
    auto it = nodes_[node].children.find(token);
    if (it == nodes_[node].children.end()) {
      nodes_.push_back(Node{});
      std::size_t child = nodes_.size() - 1;
      nodes_[node].children.emplace(token, child);
      node = child;
    } else {
      node = it->second;
    }
  }
  if (nodes_[node].phrase_id == kNone) nodes_[node].phrase_id = num_phrases_++;
  return nodes_[node].phrase_id;
}

std::vector<PhraseMatch> PhraseMatcher::FindAll(const std::vector<std::string>& tokens) const {
  std::vector<PhraseMatch> matches;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t node = 0;
    std::size_t best_end = 0;
    std::size_t best_id = kNone;
    for (std::size_t j = i; j < tokens.size(); ++j) {
      auto it = nodes_[node].children.find(tokens[j]);
      if (it == nodes_[node].children.end()) break;
      node = it->second;
      if (nodes_[node].phrase_id != kNone) {
        best_end = j + 1;
        best_id = nodes_[node].phrase_id;
      }
    }
    if (best_id == kNone) {
      ++i;
      continue;
    }
    matches.push_back({i, best_end, best_id});
    i = best_end;
  }
  return matches;
}

}  // namespace forge
