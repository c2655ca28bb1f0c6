#include "forge/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "forge/error.h"
#include "forge/text.h"

namespace forge {
namespace {

// "X" marks the mention slot, "F" a random modifier.
const std::vector<std::string> kEntityTemplates = {
    "Patients infected with X developed F symptoms .",
    "Replication of X was inhibited in F cells .",
    "Antibodies against X were detected in serum .",
    "Outbreaks of X were reported in F regions .",
    "Vaccination against X reduced hospital admissions .",
    "Transmission of X occurs through close contact .",
    "Children with acute X infection were admitted .",
    "Serological testing for X was performed .",
};

const std::vector<std::string> kDistractorTemplates = {
    "A X construct was prepared in the laboratory .",
    "Cells expressing X protein were harvested .",
    "We engineered a X clone lacking the gene .",
    "The X variant showed reduced growth in culture .",
    "Expression of X constructs was measured by blotting .",
    "Plasmids encoding X were transfected into F cells .",
    "A X mutant was selected for further experiments .",
};

const std::vector<std::string> kGenericTemplates = {
    "Samples containing the X virus were stored frozen .",
    "In this study the X virus was examined .",
    "We describe the X virus in F detail .",
    "Sequences of the X virus were compared .",
};

const std::vector<std::string> kFillerSentences = {
    "The results were consistent with earlier reports .",
    "Further work is needed to confirm these findings .",
    "Statistical analysis was performed with standard software .",
    "Data are summarized in the second table .",
    "All procedures were approved by the ethics committee .",
};

const std::vector<std::string> kModifiers = {"severe",   "several", "many",     "human",
                                             "primary",  "cultured", "distinct", "remote",
                                             "mild",     "rural",    "some",     "further"};

class NameMaker {
 public:
  explicit NameMaker(std::mt19937_64& rng) : rng_(rng) {
    for (const auto* list : {&kEntityTemplates, &kDistractorTemplates, &kGenericTemplates,
                             &kFillerSentences, &kModifiers}) {
      for (const auto& s : *list) {
        for (const auto& w : SplitWhitespace(s)) used_.insert(Utf8Lower(w));
      }
    }
  }

  std::string Word() {
    static const std::string consonants = "bdfgklmnprstvz";
    static const std::string vowels = "aeiou";
    for (;;) {
      std::string w;
      const int syllables = 2 + static_cast<int>(rng_() % 2);
      for (int i = 0; i < syllables; ++i) {
        w += consonants[rng_() % consonants.size()];
        w += vowels[rng_() % vowels.size()];
      }
      if (rng_() % 2) w += consonants[rng_() % consonants.size()];
      if (used_.insert(w).second) return w;
    }
  }

  std::string Phrase(double two_word_share) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::string p = Word();
    if (u(rng_) < two_word_share) p += " " + Word();
    return p;
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

struct Phrase {
  std::vector<std::string> tokens;  // as written in text
  bool entity = false;
};

class Writer {
 public:
  Writer(const SyntheticOptions& opts, std::mt19937_64& rng, std::vector<Phrase> phrases,
         std::vector<double> weights)
      : opts_(opts), rng_(rng), phrases_(std::move(phrases)), pick_(weights.begin(), weights.end()) {}

  // Sentence tokens with gold tags; `phrase` < 0 draws by frequency,
  // `forced_generic` uses the extraction pattern.
  LabeledSentence Sentence(long phrase = -1, bool forced_generic = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabeledSentence out;
    if (phrase < 0 && !forced_generic && u(rng_) < opts_.filler_share) {
      out.tokens = SplitWhitespace(kFillerSentences[rng_() % kFillerSentences.size()]);
      out.tags.assign(out.tokens.size(), Tag::kO);
      return out;
    }
    const Phrase& p = phrases_[phrase >= 0 ? static_cast<std::size_t>(phrase) : pick_(rng_)];
    const std::vector<std::string>* templates = &kGenericTemplates;
    if (!forced_generic && u(rng_) >= opts_.generic_share) {
      const bool own = u(rng_) >= opts_.noise;
      templates = (p.entity == own) ? &kEntityTemplates : &kDistractorTemplates;
    }
    for (const auto& w : SplitWhitespace((*templates)[rng_() % templates->size()])) {
      if (w == "X") {
        for (std::size_t i = 0; i < p.tokens.size(); ++i) {
          out.tokens.push_back(p.tokens[i]);
          out.tags.push_back(!p.entity ? Tag::kO : i == 0 ? Tag::kB : Tag::kI);
        }
      } else {
        out.tokens.push_back(w == "F" ? kModifiers[rng_() % kModifiers.size()] : w);
        out.tags.push_back(Tag::kO);
      }
    }
    return out;
  }

 private:
  const SyntheticOptions& opts_;
  std::mt19937_64& rng_;
  std::vector<Phrase> phrases_;
  std::discrete_distribution<std::size_t> pick_;
};

}  // namespace

SyntheticData GenerateSynthetic(const SyntheticOptions& opts) {
  const std::size_t total = opts.entities + opts.distractors;
  if (opts.entities == 0 || opts.distractors == 0) throw Error("synthetic: need entities and distractors");
  if (opts.sentences < total * opts.min_mentions) {
    throw Error("synthetic: too few sentences for the minimum mention count");
  }
  if (opts.seeds_per_class > std::min(opts.entities, opts.distractors)) {
    throw Error("synthetic: more seeds than phrases");
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NameMaker names(rng);
  SyntheticData data;
  std::vector<Phrase> phrases;
  for (std::size_t i = 0; i < total; ++i) {
    const bool entity = i < opts.entities;
    std::string lower = names.Phrase(0.3);
    (entity ? data.entities : data.distractors).push_back(lower);
    std::vector<std::string> tokens = SplitWhitespace(lower);
    if (u(rng) < (entity ? 0.3 : 0.1)) {
      for (auto& t : tokens) t[0] = static_cast<char>(t[0] - 'a' + 'A');
    }
    phrases.push_back({tokens, entity});
  }
  // Zipf weights over a random rank order.
  std::vector<std::size_t> rank(total);
  for (std::size_t i = 0; i < total; ++i) rank[i] = i;
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> weights(total);
  for (std::size_t i = 0; i < total; ++i) {
    weights[i] = 1.0 / std::pow(static_cast<double>(rank[i] + 1), opts.zipf_exponent);
  }

  Writer writer(opts, rng, phrases, weights);
  std::vector<LabeledSentence> corpus;
  for (std::size_t i = 0; i < total; ++i) {
    corpus.push_back(writer.Sentence(static_cast<long>(i), true));
    for (std::size_t j = 1; j < opts.min_mentions; ++j) {
      corpus.push_back(writer.Sentence(static_cast<long>(i)));
    }
  }
  while (corpus.size() < opts.sentences) corpus.push_back(writer.Sentence());
  std::shuffle(corpus.begin(), corpus.end(), rng);

  for (std::size_t i = 0; i < corpus.size(); i += opts.sentences_per_document) {
    std::string doc;
    for (std::size_t j = i; j < std::min(corpus.size(), i + opts.sentences_per_document); ++j) {
      if (!doc.empty()) doc += ' ';
      doc += Join(corpus[j].tokens, " ");
    }
    data.documents.push_back(std::move(doc));
  }
  // Seeds: the most frequent phrases of each class by expected frequency.
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  for (std::size_t i : order) {
    auto& list = phrases[i].entity ? data.seeds.positives : data.seeds.negatives;
    const auto& names_list = phrases[i].entity ? data.entities : data.distractors;
    const std::size_t idx = phrases[i].entity ? i : i - opts.entities;
    if (list.size() < opts.seeds_per_class) list.push_back(names_list[idx]);
  }

  for (std::size_t i = 0; i < opts.train_sentences; ++i) data.train.sentences.push_back(writer.Sentence());
  for (std::size_t i = 0; i < opts.dev_sentences; ++i) data.dev.sentences.push_back(writer.Sentence());
  for (std::size_t i = 0; i < opts.test_sentences; ++i) data.test.sentences.push_back(writer.Sentence());
  data.patterns = "# the <phrase> virus\nbetween\tthe\tvirus\t5\n";
  return data;
}

void WriteSynthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("corpus.txt");
    for (const auto& d : data.documents) out << d << "\n";
  }
  open("patterns.tsv") << data.patterns;
  {
    auto out = open("seeds.txt");
    out << "# generated seeds; edit freely\n[positive]\n";
    for (const auto& p : data.seeds.positives) out << p << "\n";
    out << "[negative]\n";
    for (const auto& p : data.seeds.negatives) out << p << "\n";
  }
  {
    auto out = open("truth.txt");
    for (const auto& p : data.entities) out << p << "\n";
  }
  {
    auto out = open("distractors.txt");
    for (const auto& p : data.distractors) out << p << "\n";
  }
  data.train.SaveConll(dir / "train.conll");
  data.dev.SaveConll(dir / "dev.conll");
  data.test.SaveConll(dir / "test.conll");
  open("pipeline.cfg") << "[corpus]\npath = corpus.txt\npatterns = patterns.tsv\nseeds = seeds.txt\n\n"
                          "[eval]\ndev = dev.conll\ntest = test.conll\ntruth = truth.txt\n\n"
                          "[crf]\n# train = train.conll\n\n"
                          "[run]\nout = out\nseed = 13\n";
}

}  // namespace forge
