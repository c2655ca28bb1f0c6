#include "forge/svm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "forge/error.h"
#include "forge/text.h"

namespace forge {
namespace {

std::vector<double> BoxBounds(const std::vector<int>& y, const SvmOptions& options) {
  std::size_t pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  std::size_t neg = y.size() - pos;
  std::vector<double> bounds(y.size(), options.c);
  if (options.balanced) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      double n_class = static_cast<double>(y[i] > 0 ? pos : neg);
      bounds[i] = options.c * static_cast<double>(y.size()) / (2.0 * n_class);
    }
  }
  return bounds;
}

}  // namespace

SeedSet SeedSet::Parse(const std::string& text) {
  SeedSet seeds;
  std::vector<std::string>* section = nullptr;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (trimmed == "[positive]") {
      section = &seeds.positives;
    } else if (trimmed == "[negative]") {
      section = &seeds.negatives;
    } else if (!section) {
      throw Error("seed file line " + std::to_string(line_no) + ": phrase outside a section");
    } else {
      std::string key = NormalizePhraseKey(trimmed);
      if (!key.empty() && std::find(section->begin(), section->end(), key) == section->end()) {
        section->push_back(key);
      }
    }
  }
  seeds.Validate();
  return seeds;
}

SeedSet SeedSet::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read seed file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

void SeedSet::Validate() const {
  std::set<std::string> pos(positives.begin(), positives.end());
  for (const auto& n : negatives) {
    if (pos.count(n)) throw Error("seed '" + n + "' is listed as both positive and negative");
  }
}

SvmModel TrainSvm(const std::vector<Eigen::VectorXd>& x, const std::vector<int>& y,
                  const SvmOptions& options) {
  if (x.size() != y.size()) throw Error("train_svm: example and label counts differ");
  if (x.empty()) throw Error("train_svm: no training examples");
  if (!(options.c > 0.0)) throw Error("train_svm: C must be positive");
  const Eigen::Index dim = x.front().size();
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != dim) throw Error("train_svm: embedding dimension mismatch");
    if (!x[i].allFinite()) throw Error("train_svm: non-finite feature value");
    if (y[i] == 1) {
      has_pos = true;
    } else if (y[i] == -1) {
      has_neg = true;
    } else {
      throw Error("train_svm: labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) throw Error("train_svm: seeds cover only one class");

  const std::vector<double> upper = BoxBounds(y, options);
  std::vector<double> alpha(x.size(), 0.0);
  std::vector<double> diag(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diag[i] = x[i].squaredNorm() + 1.0;

  SvmModel model;
  model.weights = Eigen::VectorXd::Zero(dim);
  model.c = options.c;
  std::size_t epoch = 0;
  for (; epoch < options.max_epochs; ++epoch) {
    double max_pg = -std::numeric_limits<double>::infinity();
    double min_pg = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double g = y[i] * (model.weights.dot(x[i]) + model.bias) - 1.0;
      double pg = g;
      if (alpha[i] == 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] == upper[i]) {
        pg = std::max(g, 0.0);
      }
      max_pg = std::max(max_pg, pg);
      min_pg = std::min(min_pg, pg);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(alpha[i] - g / diag[i], 0.0, upper[i]);
      const double delta = (alpha[i] - old) * y[i];
      model.weights += delta * x[i];
      model.bias += delta;
    }
    if (max_pg - min_pg <= options.tolerance) break;
  }
  if (epoch == options.max_epochs) {
    spdlog::warn("train_svm: stopped after {} epochs without reaching tolerance {}",
                 options.max_epochs, options.tolerance);
  }
  return model;
}

double SvmObjective(const SvmModel& model, const std::vector<Eigen::VectorXd>& x,
                    const std::vector<int>& y, const SvmOptions& options) {
  const std::vector<double> upper = BoxBounds(y, options);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double margin = y[i] * (model.weights.dot(x[i]) + model.bias);
    loss += upper[i] * std::max(0.0, 1.0 - margin);
  }
  return 0.5 * (model.weights.squaredNorm() + model.bias * model.bias) + loss;
}

SeedTraining TrainOnSeeds(const EmbeddingTable& embeddings, const SeedSet& seeds,
                          const SvmOptions& options) {
  seeds.Validate();
  SeedTraining out;
  std::vector<Eigen::VectorXd> x;
  std::vector<int> y;
  auto take = [&](const std::vector<std::string>& phrases, int label) {
    for (const auto& p : phrases) {
      if (const Eigen::VectorXd* v = embeddings.Find(p)) {
        x.push_back(*v);
        y.push_back(label);
      } else {
        out.unresolved.push_back(p);
      }
    }
  };
  take(seeds.positives, 1);
  take(seeds.negatives, -1);
  for (const auto& p : out.unresolved) spdlog::warn("seed '{}' has no embedding", p);
  out.model = TrainSvm(x, y, options);
  return out;
}

Prediction Predict(const SvmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.weights.size()) {
    throw Error("predict: embedding has " + std::to_string(x.size()) + " dims, model has " +
                std::to_string(model.weights.size()));
  }
  const double score = model.weights.dot(x) + model.bias;
  return Prediction{score >= 0.0, score};
}

Dictionary BuildDictionary(const std::vector<std::string>& candidates,
                           const EmbeddingTable& embeddings, const SvmModel& model,
                           double threshold) {
  std::vector<std::pair<std::string, double>> accepted;
  std::size_t skipped = 0;
  for (const auto& phrase : candidates) {
    const Eigen::VectorXd* v = embeddings.Find(phrase);
    if (!v) {
      ++skipped;
      continue;
    }
    Prediction p = Predict(model, *v);
    if (p.entity && p.score >= threshold) accepted.emplace_back(phrase, p.score);
  }
  std::sort(accepted.begin(), accepted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Dictionary dict(Provenance::kCca);
  for (const auto& [phrase, score] : accepted) dict.Add(phrase, score);
  dict.metadata()["C"] = std::to_string(model.c);
  dict.metadata()["k"] = std::to_string(model.dims());
  if (skipped > 0) dict.metadata()["skipped_without_embedding"] = std::to_string(skipped);
  if (dict.empty()) spdlog::warn("build_dictionary: no candidate was predicted as an entity");
  return dict;
}

}  // namespace forge
