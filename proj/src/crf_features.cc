#include "forge/crf_features.h"

#include <sstream>

#include "forge/error.h"
#include "forge/text.h"

namespace forge {
namespace {

// Byte length of the first `count` code points, or npos when shorter.
std::size_t PrefixBytes(const std::string& s, std::size_t count) {
  std::size_t i = 0;
  for (std::size_t n = 0; n < count; ++n) {
    if (i >= s.size()) return std::string::npos;
    ++i;
    while (i < s.size() && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) ++i;
  }
  return i;
}

std::size_t CodePoints(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += (static_cast<unsigned char>(c) & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

std::string TagName(std::optional<Tag> tag) {
  return tag ? std::string(1, TagChar(*tag)) : std::string("^");
}

}  // namespace

FeatureTemplates FeatureTemplates::None() {
  FeatureTemplates t;
  t.word_identity = t.caps_lexical = t.prefix_suffix = t.window_words = false;
  t.window_caps_pattern = t.prev_tags = t.prev2 = t.dict_match = false;
  t.embedding = EmbeddingMode::kNone;
  return t;
}

FeatureTemplates FeatureTemplates::Parse(const std::string& spec) {
  FeatureTemplates t = None();
  for (const auto& raw : Split(spec, ',')) {
    std::string item = Trim(raw);
    if (item.empty() || item == "none") continue;
    if (item == "baseline") {
      FeatureTemplates base = Baseline();
      base.prev2 = t.prev2;
      base.dict_match = t.dict_match;
      base.embedding = t.embedding;
      t = base;
    } else if (item == "dict") {
      t.dict_match = true;
    } else if (item == "emb" || item == "phrase-emb") {
      t.embedding = EmbeddingMode::kPhrase;
    } else if (item == "word-emb") {
      t.embedding = EmbeddingMode::kWord;
    } else if (item == "word") {
      t.word_identity = true;
    } else if (item == "caps") {
      t.caps_lexical = true;
    } else if (item == "affix") {
      t.prefix_suffix = true;
    } else if (item == "window") {
      t.window_words = true;
    } else if (item == "capspattern") {
      t.window_caps_pattern = true;
    } else if (item == "prevtags") {
      t.prev_tags = true;
    } else if (item == "prev2") {
      t.prev2 = true;
      t.prev_tags = true;
    } else {
      throw Error("unknown feature family '" + item + "'");
    }
  }
  return t;
}

std::string FeatureTemplates::ToString() const {
  std::vector<std::string> parts;
  if (word_identity && caps_lexical && prefix_suffix && window_words && window_caps_pattern &&
      prev_tags) {
    parts.push_back("baseline");
  } else {
    if (word_identity) parts.push_back("word");
    if (caps_lexical) parts.push_back("caps");
    if (prefix_suffix) parts.push_back("affix");
    if (window_words) parts.push_back("window");
    if (window_caps_pattern) parts.push_back("capspattern");
    if (prev_tags) parts.push_back("prevtags");
  }
  if (prev2) parts.push_back("prev2");
  if (dict_match) parts.push_back("dict");
  if (embedding == EmbeddingMode::kPhrase) parts.push_back("emb");
  if (embedding == EmbeddingMode::kWord) parts.push_back("word-emb");
  return parts.empty() ? "none" : Join(parts, ",");
}

bool FeatureTemplates::AnyObservation() const {
  return word_identity || caps_lexical || prefix_suffix || window_words || window_caps_pattern ||
         dict_match || embedding != EmbeddingMode::kNone;
}

EmbeddingFeaturizer::EmbeddingFeaturizer(const EmbeddingTable& table, EmbeddingMode mode)
    : table_(table), mode_(mode), max_value_(table.MaxAbsValue()) {
  if (mode_ == EmbeddingMode::kPhrase) {
    for (std::size_t i = 0; i < table_.size(); ++i) {
      std::size_t id = matcher_.Add(SplitWhitespace(table_.phrases()[i]));
      if (id == phrase_rows_.size()) phrase_rows_.push_back(i);
    }
  }
}

std::vector<std::optional<Eigen::VectorXd>> EmbeddingFeaturizer::TokenVectors(
    const std::vector<std::string>& tokens) const {
  std::vector<std::string> lowers;
  lowers.reserve(tokens.size());
  for (const auto& t : tokens) lowers.push_back(Utf8Lower(t));
  const auto dim = static_cast<Eigen::Index>(table_.dim());
  std::vector<std::optional<Eigen::VectorXd>> out(tokens.size());
  if (mode_ == EmbeddingMode::kWord) {
    for (std::size_t i = 0; i < lowers.size(); ++i) {
      if (const Eigen::VectorXd* v = table_.Find(lowers[i])) out[i] = *v;
    }
    return out;
  }
  const double x = max_value_;
  for (auto& v : out) v = Eigen::VectorXd::Constant(dim, 4.0 * x);
  for (const auto& m : matcher_.FindAll(lowers)) {
    out[m.begin] = table_.vector(phrase_rows_[m.phrase_id]);
    for (std::size_t i = m.begin + 1; i < m.end; ++i) {
      out[i] = Eigen::VectorXd::Constant(dim, 2.0 * x);
    }
  }
  return out;
}

ObservationExtractor::ObservationExtractor(FeatureTemplates templates, FeatureResources resources)
    : templates_(templates) {
  if (templates_.dict_match) {
    if (resources.dictionaries.empty()) {
      throw Error("dictionary features enabled but no dictionary supplied");
    }
    for (const Dictionary* d : resources.dictionaries) taggers_.emplace_back(*d);
  }
  if (templates_.embedding != EmbeddingMode::kNone) {
    if (!resources.embeddings) throw Error("embedding features enabled but no embeddings supplied");
    embeddings_ = std::make_unique<EmbeddingFeaturizer>(*resources.embeddings, templates_.embedding);
  }
}

ObservationSequence ObservationExtractor::Extract(const std::vector<std::string>& tokens) const {
  const std::size_t n = tokens.size();
  ObservationSequence obs(n);
  if (!templates_.AnyObservation()) return obs;

  std::vector<std::string> lowers;
  std::vector<CapsShape> shapes;
  for (const auto& t : tokens) {
    lowers.push_back(Utf8Lower(t));
    shapes.push_back(ClassifyShape(t));
  }
  auto word_at = [&](long i) -> std::string {
    if (i < 0) return "<s>";
    if (i >= static_cast<long>(n)) return "</s>";
    return lowers[static_cast<std::size_t>(i)];
  };
  auto shape_at = [&](long i) -> std::string {
    if (i < 0) return "BOS";
    if (i >= static_cast<long>(n)) return "EOS";
    return std::string(ShapeName(shapes[static_cast<std::size_t>(i)]));
  };

  std::vector<std::vector<Tag>> dict_tags;
  for (const auto& tagger : taggers_) dict_tags.push_back(tagger.Apply(tokens));
  std::vector<std::optional<Eigen::VectorXd>> emb;
  if (embeddings_) emb = embeddings_->TokenVectors(tokens);

  for (std::size_t i = 0; i < n; ++i) {
    auto& f = obs[i];
    const long li = static_cast<long>(i);
    f.push_back({"bias", 1.0});
    if (templates_.word_identity) f.push_back({"w=" + tokens[i], 1.0});
    if (templates_.caps_lexical) {
      f.push_back({"shape=" + std::string(ShapeName(shapes[i])), 1.0});
      if (StartsUppercase(tokens[i])) f.push_back({"cap", 1.0});
      if (shapes[i] == CapsShape::kAllCaps) f.push_back({"allcaps", 1.0});
    }
    if (templates_.prefix_suffix) {
      const std::size_t len = CodePoints(lowers[i]);
      for (std::size_t k = 1; k <= 4 && k <= len; ++k) {
        f.push_back({"pre" + std::to_string(k) + "=" + lowers[i].substr(0, PrefixBytes(lowers[i], k)),
                     1.0});
        f.push_back({"suf" + std::to_string(k) + "=" +
                         lowers[i].substr(PrefixBytes(lowers[i], len - k)),
                     1.0});
      }
    }
    if (templates_.window_words) {
      for (long d : {-2L, -1L, 1L, 2L}) {
        f.push_back({"w[" + std::string(d > 0 ? "+" : "") + std::to_string(d) + "]=" + word_at(li + d),
                     1.0});
      }
    }
    if (templates_.window_caps_pattern) {
      std::string pattern;
      for (long d = -2; d <= 2; ++d) pattern += (d > -2 ? "_" : "") + shape_at(li + d);
      f.push_back({"capspat=" + pattern, 1.0});
    }
    for (std::size_t d = 0; d < dict_tags.size(); ++d) {
      f.push_back({"dict" + std::to_string(d) + "=" + std::string(1, TagChar(dict_tags[d][i])), 1.0});
    }
    if (embeddings_ && emb[i]) {
      for (Eigen::Index j = 0; j < emb[i]->size(); ++j) {
        double v = (*emb[i])(j);
        if (v != 0.0) f.push_back({"emb" + std::to_string(j), v});
      }
    }
  }
  return obs;
}

std::vector<NamedFeature> ExtractFeatures(const ObservationSequence& observations,
                                          std::size_t position, std::optional<Tag> prev2,
                                          std::optional<Tag> prev, Tag label,
                                          const FeatureTemplates& templates) {
  if (position >= observations.size()) throw Error("extract_features: position out of range");
  std::vector<NamedFeature> out;
  const std::string y(1, TagChar(label));
  for (const auto& f : observations[position]) out.push_back({f.name + "|" + y, f.value});
  if (templates.prev_tags) {
    out.push_back({"trans=" + TagName(prev) + ">" + y, 1.0});
    if (templates.prev2 && prev) {
      out.push_back({"trans2=" + TagName(prev2) + ">" + TagName(prev) + ">" + y, 1.0});
    }
  }
  return out;
}

}  // namespace forge
