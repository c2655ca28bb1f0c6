#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "forge/crf_features.h"
#include "forge/lbfgs.h"
#include "forge/tagger_eval.h"

namespace forge {

// A sentence with observation features resolved to model ids. Features
// unknown to the model are dropped.
struct CompiledSentence {
  std::vector<std::vector<std::pair<std::size_t, double>>> observations;
  std::vector<Tag> tags;  // gold, empty when unlabeled

  std::size_t size() const { return observations.size(); }
};

using SparseFeatures = std::vector<std::pair<std::size_t, double>>;

// Linear-chain model over {B, I, O}. Weight layout: observation x label,
// then start[3], transition[3][3] and, with second-order features,
// transition2[4][3][3] where the first index 3 stands for the sentence start.
class CrfModel {
 public:
  CrfModel() = default;
  CrfModel(FeatureTemplates templates, std::vector<std::string> observation_names);

  // Observation index built from training sequences, in first-seen order.
  static CrfModel FromObservations(const FeatureTemplates& templates,
                                   const std::vector<ObservationSequence>& sequences);

  const FeatureTemplates& templates() const { return templates_; }
  std::size_t num_observations() const { return names_.size(); }
  std::size_t num_weights() const { return static_cast<std::size_t>(weights_.size()); }
  const std::vector<std::string>& observation_names() const { return names_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  void set_weights(Eigen::VectorXd weights);
  double lambda() const { return lambda_; }
  void set_lambda(double lambda) { lambda_ = lambda; }

  std::optional<std::size_t> FindObservation(const std::string& name) const;
  std::size_t ObservationWeight(std::size_t observation, Tag label) const;
  std::size_t StartWeight(Tag label) const;
  std::size_t TransitionWeight(Tag prev, Tag label) const;
  std::size_t Transition2Weight(std::optional<Tag> prev2, Tag prev, Tag label) const;

  CompiledSentence Compile(const ObservationSequence& observations,
                           std::vector<Tag> tags = {}) const;

  // Weight ids and values firing at `position` for the given label history.
  SparseFeatures Features(const CompiledSentence& sentence, std::size_t position,
                          std::optional<Tag> prev2, std::optional<Tag> prev, Tag label) const;

  double Score(const CompiledSentence& sentence, const std::vector<Tag>& tags) const;
  double LogPartition(const CompiledSentence& sentence) const;
  double LogProbability(const CompiledSentence& sentence, const std::vector<Tag>& tags) const;

  // Exact argmax; among equally scoring sequences the lexicographically
  // smallest under B < I < O wins.
  std::vector<Tag> Viterbi(const CompiledSentence& sentence) const;

  void Save(const std::filesystem::path& path) const;
  static CrfModel Load(const std::filesystem::path& path);

 private:
  friend struct CrfLattice;

  FeatureTemplates templates_ = FeatureTemplates::Baseline();
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  Eigen::VectorXd weights_;
  double lambda_ = 0.0;
};

struct LikelihoodResult {
  double value = 0.0;  // sum of log p(y|x) minus lambda * |w|^2
  Eigen::VectorXd gradient;
};

// Throws forge::Error on malformed or missing gold tags.
LikelihoodResult LogLikelihoodAndGradient(const CrfModel& model,
                                          const std::vector<CompiledSentence>& sentences,
                                          double lambda);

struct CrfTrainOptions {
  double lambda = 0.1;
  LbfgsOptions lbfgs;
};

struct CrfTrainReport {
  double objective = 0.0;  // regularized negative log-likelihood at the optimum
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

CrfModel TrainCrf(const std::vector<LabeledSentence>& data, const ObservationExtractor& extractor,
                  const CrfTrainOptions& options = {}, CrfTrainReport* report = nullptr,
                  const Eigen::VectorXd* initial_weights = nullptr);

struct LambdaSelection {
  double lambda = 0.0;
  double dev_f1 = 0.0;
  std::vector<std::pair<double, double>> grid;  // (lambda, dev F1)
};

// Trains one model per lambda and keeps the best dev F1; ties go to the
// smaller lambda. With an empty dev set the first lambda is used.
CrfModel TrainCrfSelectLambda(const std::vector<LabeledSentence>& train,
                              const std::vector<LabeledSentence>& dev,
                              const ObservationExtractor& extractor,
                              const std::vector<double>& lambdas, const LbfgsOptions& lbfgs = {},
                              LambdaSelection* selection = nullptr);

std::vector<Tag> TagWithCrf(const CrfModel& model, const ObservationExtractor& extractor,
                            const std::vector<std::string>& tokens);
EvalReport EvaluateCrf(const CrfModel& model, const ObservationExtractor& extractor,
                       const std::vector<LabeledSentence>& gold);

}  // namespace forge
