#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "forge/crf.h"

namespace forge {

struct CurveVariant {
  std::string name;
  FeatureTemplates templates;
  FeatureResources resources;
};

// baseline, one "+dict:<name>" variant per dictionary, CCA-word when word
// embeddings are given and CCA-phrase when phrase embeddings are given.
std::vector<CurveVariant> StandardVariants(const std::map<std::string, const Dictionary*>& dictionaries,
                                           const EmbeddingTable* word_embeddings,
                                           const EmbeddingTable* phrase_embeddings);

struct LearningCurveOptions {
  std::vector<std::size_t> sizes;
  std::vector<double> lambdas = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  LbfgsOptions lbfgs;
};

struct CurvePoint {
  std::string variant;
  std::size_t size = 0;
  double lambda = 0.0;
  EvalReport test;
};

// Trains on the first `size` training sentences for every (size, variant),
// choosing lambda on dev, and evaluates on test.
std::vector<CurvePoint> RunLearningCurve(const GoldCorpus& train, const GoldCorpus& dev,
                                         const GoldCorpus& test,
                                         const std::vector<CurveVariant>& variants,
                                         const LearningCurveOptions& options);

std::string FormatCurveTable(const std::vector<CurvePoint>& points);
void WriteCurveTsv(const std::vector<CurvePoint>& points, const std::filesystem::path& path);

}  // namespace forge
