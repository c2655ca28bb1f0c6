#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forge/dictionary.h"
#include "forge/embeddings.h"

namespace forge {

// Seed file: "[positive]" and "[negative]" sections, one phrase per line,
// '#' comments. Phrases are normalized like dictionary keys.
struct SeedSet {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;

  static SeedSet Parse(const std::string& text);
  static SeedSet Load(const std::filesystem::path& path);
  // Throws when a phrase is listed under both labels.
  void Validate() const;
};

struct SvmOptions {
  double c = 0.1;
  // Scales each class's box constraint by n / (2 n_class).
  bool balanced = false;
  double tolerance = 1e-6;
  std::size_t max_epochs = 100000;
};

// Linear model with the bias learned as the weight of a constant feature,
// so the bias is regularized with the weights.
struct SvmModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double c = 0.0;

  std::size_t dims() const { return static_cast<std::size_t>(weights.size()); }
};

struct Prediction {
  bool entity = false;
  double score = 0.0;
};

// Dual coordinate descent on
//   0.5 * (|w|^2 + b^2) + sum_i C_i * max(0, 1 - y_i (w.x_i + b)),
// sweeping examples in input order until the projected-gradient spread is
// below options.tolerance. Labels are +1 / -1.
SvmModel TrainSvm(const std::vector<Eigen::VectorXd>& x, const std::vector<int>& y,
                  const SvmOptions& options);

double SvmObjective(const SvmModel& model, const std::vector<Eigen::VectorXd>& x,
                    const std::vector<int>& y, const SvmOptions& options);

struct SeedTraining {
  SvmModel model;
  std::vector<std::string> unresolved;  // seeds without an embedding
};

SeedTraining TrainOnSeeds(const EmbeddingTable& embeddings, const SeedSet& seeds,
                          const SvmOptions& options);

// score = w.x + b; score >= 0 is an entity.
Prediction Predict(const SvmModel& model, const Eigen::VectorXd& x);

// Candidates predicted as entities with score >= threshold, sorted by score
// descending (ties by phrase). Candidates without an embedding are skipped.
Dictionary BuildDictionary(const std::vector<std::string>& candidates,
                           const EmbeddingTable& embeddings, const SvmModel& model,
                           double threshold = 0.0);

}  // namespace forge
