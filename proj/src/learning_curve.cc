#include "forge/learning_curve.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "forge/error.h"

namespace forge {

std::vector<CurveVariant> StandardVariants(const std::map<std::string, const Dictionary*>& dictionaries,
                                           const EmbeddingTable* word_embeddings,
                                           const EmbeddingTable* phrase_embeddings) {
  std::vector<CurveVariant> out;
  out.push_back({"baseline", FeatureTemplates::Baseline(), {}});
  for (const auto& [name, dict] : dictionaries) {
    CurveVariant v{"+dict:" + name, FeatureTemplates::Baseline(), {}};
    v.templates.dict_match = true;
    v.resources.dictionaries = {dict};
    out.push_back(std::move(v));
  }
  if (word_embeddings) {
    CurveVariant v{"CCA-word", FeatureTemplates::Baseline(), {}};
    v.templates.embedding = EmbeddingMode::kWord;
    v.resources.embeddings = word_embeddings;
    out.push_back(std::move(v));
  }
  if (phrase_embeddings) {
    CurveVariant v{"CCA-phrase", FeatureTemplates::Baseline(), {}};
    v.templates.embedding = EmbeddingMode::kPhrase;
    v.resources.embeddings = phrase_embeddings;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<CurvePoint> RunLearningCurve(const GoldCorpus& train, const GoldCorpus& dev,
                                         const GoldCorpus& test,
                                         const std::vector<CurveVariant>& variants,
                                         const LearningCurveOptions& options) {
  if (options.sizes.empty()) throw Error("learning curve: no training sizes");
  for (std::size_t i = 0; i < options.sizes.size(); ++i) {
    if (options.sizes[i] == 0 || options.sizes[i] > train.sentences.size()) {
      throw Error("learning curve: size " + std::to_string(options.sizes[i]) +
                  " outside 1.." + std::to_string(train.sentences.size()));
    }
    if (i > 0 && options.sizes[i] <= options.sizes[i - 1]) {
      throw Error("learning curve: sizes must be strictly ascending");
    }
  }
  std::vector<CurvePoint> points;
  for (const auto& variant : variants) {
    ObservationExtractor extractor(variant.templates, variant.resources);
    for (std::size_t size : options.sizes) {
      std::vector<LabeledSentence> subset(train.sentences.begin(),
                                          train.sentences.begin() + static_cast<long>(size));
      LambdaSelection sel;
      CrfModel model =
          TrainCrfSelectLambda(subset, dev.sentences, extractor, options.lambdas, options.lbfgs, &sel);
      CurvePoint p{variant.name, size, sel.lambda, EvaluateCrf(model, extractor, test.sentences)};
      spdlog::info("curve: {} size={} lambda={} F1={:.4f}", p.variant, size, p.lambda, p.test.f1());
      points.push_back(std::move(p));
    }
  }
  return points;
}

std::string FormatCurveTable(const std::vector<CurvePoint>& points) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %6s %8s %8s %8s %8s\n", "variant", "size", "lambda",
                "P", "R", "F1");
  out << buf;
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%-20s %6zu %8g %8.4f %8.4f %8.4f\n", p.variant.c_str(), p.size,
                  p.lambda, p.test.precision(), p.test.recall(), p.test.f1());
    out << buf;
  }
  return out.str();
}

void WriteCurveTsv(const std::vector<CurvePoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "variant\tsize\tlambda\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  for (const auto& p : points) {
    out << p.variant << '\t' << p.size << '\t' << p.lambda << '\t' << p.test.tp << '\t' << p.test.fp
        << '\t' << p.test.fn << '\t' << p.test.precision() << '\t' << p.test.recall() << '\t'
        << p.test.f1() << '\n';
  }
}

}  // namespace forge
