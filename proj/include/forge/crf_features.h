#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forge/dictionary.h"
#include "forge/embeddings.h"
#include "forge/phrase_matcher.h"
#include "forge/tagger_eval.h"

namespace forge {

enum class EmbeddingMode { kNone, kWord, kPhrase };

struct FeatureTemplates {
  bool word_identity = true;
  bool caps_lexical = true;
  bool prefix_suffix = true;       // lengths 1..4
  bool window_words = true;        // w[-2..+2]
  bool window_caps_pattern = true; // shapes over the +-2 window
  bool prev_tags = true;           // start and label-bigram features
  bool prev2 = false;              // label-trigram features over composite states
  bool dict_match = false;         // one family per supplied dictionary
  EmbeddingMode embedding = EmbeddingMode::kNone;

  static FeatureTemplates Baseline() { return {}; }
  static FeatureTemplates None();
  // Comma-separated list: baseline, dict, emb (phrase embeddings), word-emb,
  // prev2, none, or single baseline families (word, caps, affix, window,
  // capspattern, prevtags).
  static FeatureTemplates Parse(const std::string& spec);
  std::string ToString() const;
  bool AnyObservation() const;
  bool operator==(const FeatureTemplates&) const = default;
};

struct NamedFeature {
  std::string name;
  double value = 1.0;
};

// Per-token observation features (not yet conjoined with a label).
using ObservationSequence = std::vector<std::vector<NamedFeature>>;

// Token vectors for the embedding family. Phrase mode marks candidate
// phrases by longest match: the first token carries the phrase embedding,
// later tokens the constant 2x and all other tokens 4x, where x is the
// largest absolute value in the table. Word mode looks up each lowercase
// token and leaves unknown words without features.
class EmbeddingFeaturizer {
 public:
  EmbeddingFeaturizer(const EmbeddingTable& table, EmbeddingMode mode);

  std::vector<std::optional<Eigen::VectorXd>> TokenVectors(
      const std::vector<std::string>& tokens) const;
  double max_value() const { return max_value_; }

 private:
  const EmbeddingTable& table_;
  EmbeddingMode mode_;
  PhraseMatcher matcher_;
  std::vector<std::size_t> phrase_rows_;
  double max_value_ = 0.0;
};

struct FeatureResources {
  std::vector<const Dictionary*> dictionaries;
  const EmbeddingTable* embeddings = nullptr;
};

class ObservationExtractor {
 public:
  ObservationExtractor(FeatureTemplates templates, FeatureResources resources);

  ObservationSequence Extract(const std::vector<std::string>& tokens) const;
  const FeatureTemplates& templates() const { return templates_; }
  std::size_t num_dictionaries() const { return taggers_.size(); }

 private:
  FeatureTemplates templates_;
  std::vector<DictionaryTagger> taggers_;
  std::unique_ptr<EmbeddingFeaturizer> embeddings_;
};

// Label-conjoined features firing at `position` for the transition
// prev -> label (prev2 -> prev -> label with second-order features). A
// missing prev means the sentence start.
std::vector<NamedFeature> ExtractFeatures(const ObservationSequence& observations,
                                          std::size_t position, std::optional<Tag> prev2,
                                          std::optional<Tag> prev, Tag label,
                                          const FeatureTemplates& templates);

}  // namespace forge
