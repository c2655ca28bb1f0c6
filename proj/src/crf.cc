#include "forge/crf.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "forge/error.h"

namespace forge {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kStart = 3;

Tag TagAt(std::size_t i) { return static_cast<Tag>(i); }
std::size_t Idx(Tag t) { return static_cast<std::size_t>(t); }

double LogSumExp(const double* values, std::size_t count) {
  double max = kNegInf;
  for (std::size_t i = 0; i < count; ++i) max = std::max(max, values[i]);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += std::exp(values[i] - max);
  return max + std::log(sum);
}

}  // namespace

// Chain over composite states. First order: one state per label. Second
// order: state (prev, label) with prev in {B, I, O, start}.
struct CrfLattice {
  const CrfModel& model;
  const CompiledSentence& sentence;
  bool second_order;
  std::size_t states;
  std::size_t n;
  Eigen::MatrixXd node;  // n x states
  Eigen::MatrixXd edge;  // states x states

  CrfLattice(const CrfModel& m, const CompiledSentence& s)
      : model(m),
        sentence(s),
        second_order(m.templates_.prev_tags && m.templates_.prev2),
        states(second_order ? 12 : 3),
        n(s.size()) {
    const Eigen::VectorXd& w = model.weights_;
    Eigen::MatrixXd emission = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [f, v] : sentence.observations[i]) {
        for (std::size_t y = 0; y < 3; ++y) {
          emission(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(y)) += v * w(f * 3 + y);
        }
      }
    }
    node = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(states),
                                     kNegInf);
    edge = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(states),
                                     static_cast<Eigen::Index>(states), kNegInf);
    const bool trans = model.templates_.prev_tags;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < states; ++s) {
        const bool start_state = second_order && Prev(s) == kStart;
        if (second_order && (i == 0) != start_state) continue;
        double v = emission(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(Label(s)));
        if (i == 0 && trans) v += w(model.StartWeight(TagAt(Label(s))));
        node(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = v;
      }
    }
    for (std::size_t s = 0; s < states; ++s) {
      for (std::size_t t = 0; t < states; ++t) {
        if (second_order && (Prev(t) != Label(s))) continue;
        double v = 0.0;
        if (trans) v += w(model.TransitionWeight(TagAt(Label(s)), TagAt(Label(t))));
        if (second_order) {
          std::optional<Tag> p2 =
              Prev(s) == kStart ? std::nullopt : std::optional<Tag>(TagAt(Prev(s)));
          v += w(model.Transition2Weight(p2, TagAt(Label(s)), TagAt(Label(t))));
        }
        edge(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = v;
      }
    }
  }

  std::size_t Label(std::size_t s) const { return second_order ? s % 3 : s; }
  std::size_t Prev(std::size_t s) const { return second_order ? s / 3 : 0; }

  double Node(std::size_t i, std::size_t s) const {
    return node(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
  }
  double Edge(std::size_t s, std::size_t t) const {
    return edge(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
  }

  Eigen::MatrixXd Forward() const {
    Eigen::MatrixXd alpha(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(states));
    std::vector<double> buf(states);
    for (std::size_t s = 0; s < states; ++s) alpha(0, static_cast<Eigen::Index>(s)) = Node(0, s);
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t t = 0; t < states; ++t) {
        for (std::size_t s = 0; s < states; ++s) {
          buf[s] = alpha(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(s)) + Edge(s, t);
        }
        const double in = LogSumExp(buf.data(), states);
        alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
            in == kNegInf ? kNegInf : in + Node(i, t);
      }
    }
    return alpha;
  }

  Eigen::MatrixXd Backward() const {
    Eigen::MatrixXd beta(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(states));
    std::vector<double> buf(states);
    for (std::size_t s = 0; s < states; ++s) beta(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(s)) = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) {
      for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t t = 0; t < states; ++t) {
          buf[t] = Edge(s, t) + Node(i + 1, t) +
                   beta(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(t));
        }
        beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = LogSumExp(buf.data(), states);
      }
    }
    return beta;
  }

  static double LogZ(const Eigen::MatrixXd& alpha) {
    const Eigen::Index last = alpha.rows() - 1;
    std::vector<double> row(static_cast<std::size_t>(alpha.cols()));
    for (Eigen::Index s = 0; s < alpha.cols(); ++s) row[static_cast<std::size_t>(s)] = alpha(last, s);
    return LogSumExp(row.data(), row.size());
  }
};

CrfModel::CrfModel(FeatureTemplates templates, std::vector<std::string> observation_names)
    : templates_(templates), names_(std::move(observation_names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second) {
      throw Error("duplicate observation feature '" + names_[i] + "'");
    }
  }
  weights_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names_.size() * 3 + 3 + 9 + 36));
}

CrfModel CrfModel::FromObservations(const FeatureTemplates& templates,
                                    const std::vector<ObservationSequence>& sequences) {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& seq : sequences) {
    for (const auto& token : seq) {
      for (const auto& f : token) {
        if (seen.emplace(f.name, names.size()).second) names.push_back(f.name);
      }
    }
  }
  return CrfModel(templates, std::move(names));
}

void CrfModel::set_weights(Eigen::VectorXd weights) {
  if (weights.size() != weights_.size()) {
    throw Error("crf: weight vector has " + std::to_string(weights.size()) + " entries, expected " +
                std::to_string(weights_.size()));
  }
  if (!weights.allFinite()) throw Error("crf: non-finite weights");
  weights_ = std::move(weights);
}

std::optional<std::size_t> CrfModel::FindObservation(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t CrfModel::ObservationWeight(std::size_t observation, Tag label) const {
  return observation * 3 + Idx(label);
}

std::size_t CrfModel::StartWeight(Tag label) const { return names_.size() * 3 + Idx(label); }

std::size_t CrfModel::TransitionWeight(Tag prev, Tag label) const {
  return names_.size() * 3 + 3 + Idx(prev) * 3 + Idx(label);
}

std::size_t CrfModel::Transition2Weight(std::optional<Tag> prev2, Tag prev, Tag label) const {
  const std::size_t p = prev2 ? Idx(*prev2) : kStart;
  return names_.size() * 3 + 12 + p * 9 + Idx(prev) * 3 + Idx(label);
}

CompiledSentence CrfModel::Compile(const ObservationSequence& observations,
                                   std::vector<Tag> tags) const {
  CompiledSentence out;
  out.observations.resize(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    for (const auto& f : observations[i]) {
      auto it = index_.find(f.name);
      if (it != index_.end()) out.observations[i].emplace_back(it->second, f.value);
    }
  }
  out.tags = std::move(tags);
  return out;
}

SparseFeatures CrfModel::Features(const CompiledSentence& sentence, std::size_t position,
                                  std::optional<Tag> prev2, std::optional<Tag> prev,
                                  Tag label) const {
  if (position >= sentence.size()) throw Error("crf: position out of range");
  SparseFeatures out;
  for (const auto& [f, v] : sentence.observations[position]) {
    out.emplace_back(ObservationWeight(f, label), v);
  }
  if (templates_.prev_tags) {
    if (!prev) {
      out.emplace_back(StartWeight(label), 1.0);
    } else {
      out.emplace_back(TransitionWeight(*prev, label), 1.0);
      if (templates_.prev2) out.emplace_back(Transition2Weight(prev2, *prev, label), 1.0);
    }
  }
  return out;
}

double CrfModel::Score(const CompiledSentence& sentence, const std::vector<Tag>& tags) const {
  if (tags.size() != sentence.size()) throw Error("crf: tag count does not match sentence length");
  double score = 0.0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    std::optional<Tag> prev = i >= 1 ? std::optional<Tag>(tags[i - 1]) : std::nullopt;
    std::optional<Tag> prev2 = i >= 2 ? std::optional<Tag>(tags[i - 2]) : std::nullopt;
    for (const auto& [id, v] : Features(sentence, i, prev2, prev, tags[i])) {
      score += v * weights_(static_cast<Eigen::Index>(id));
    }
  }
  return score;
}

double CrfModel::LogPartition(const CompiledSentence& sentence) const {
  if (sentence.size() == 0) return 0.0;
  CrfLattice lattice(*this, sentence);
  return CrfLattice::LogZ(lattice.Forward());
}

double CrfModel::LogProbability(const CompiledSentence& sentence,
                                const std::vector<Tag>& tags) const {
  return Score(sentence, tags) - LogPartition(sentence);
}

std::vector<Tag> CrfModel::Viterbi(const CompiledSentence& sentence) const {
  const std::size_t n = sentence.size();
  if (n == 0) return {};
  CrfLattice lat(*this, sentence);
  const std::size_t S = lat.states;
  // suffix(i, s): best score of positions i..n-1 given state s at i.
  Eigen::MatrixXd suffix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(S));
  for (std::size_t s = 0; s < S; ++s) {
    suffix(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(s)) = lat.Node(n - 1, s);
  }
  auto continuation = [&](std::size_t i, std::size_t s, std::size_t t) {
    return lat.Edge(s, t) + suffix(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(t));
  };
  for (std::size_t i = n - 1; i-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = kNegInf;
      for (std::size_t t = 0; t < S; ++t) best = std::max(best, continuation(i, s, t));
      suffix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) =
          lat.Node(i, s) == kNegInf || best == kNegInf ? kNegInf : lat.Node(i, s) + best;
    }
  }
  // Forward pass choosing the smallest label among optimal continuations.
  // States are enumerated in label order for every fixed history.
  auto pick = [&](auto value_of, auto valid) {
    std::size_t best_state = S;
    double best = kNegInf;
    for (std::size_t label = 0; label < 3; ++label) {
      for (std::size_t s = 0; s < S; ++s) {
        if (lat.Label(s) != label || !valid(s)) continue;
        double v = value_of(s);
        if (best_state == S || v > best) {
          best = v;
          best_state = s;
        }
      }
    }
    return best_state;
  };
  std::vector<Tag> tags(n);
  std::size_t state = pick(
      [&](std::size_t s) { return suffix(0, static_cast<Eigen::Index>(s)); },
      [&](std::size_t s) { return lat.Node(0, s) != kNegInf; });
  tags[0] = TagAt(lat.Label(state));
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t from = state;
    state = pick([&](std::size_t t) { return continuation(i - 1, from, t); },
                 [&](std::size_t t) { return lat.Edge(from, t) != kNegInf && lat.Node(i, t) != kNegInf; });
    tags[i] = TagAt(lat.Label(state));
  }
  return tags;
}

void CrfModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "forge-crf 1\n";
  out << "templates " << templates_.ToString() << "\n";
  out << std::setprecision(17);
  out << "lambda " << lambda_ << "\n";
  out << "observations " << names_.size() << "\n";
  for (const auto& name : names_) out << name << "\n";
  out << "weights " << weights_.size() << "\n";
  for (Eigen::Index i = 0; i < weights_.size(); ++i) out << weights_(i) << "\n";
  if (!out) throw Error("failed writing " + path.string());
}

CrfModel CrfModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  auto expect = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) {
      throw Error(path.string() + ": expected '" + key + "' line");
    }
    return line.substr(key.size() + 1);
  };
  if (!std::getline(in, line) || line != "forge-crf 1") throw Error(path.string() + ": not a crf model");
  FeatureTemplates templates = FeatureTemplates::Parse(expect("templates"));
  double lambda = std::stod(expect("lambda"));
  std::size_t count = std::stoull(expect("observations"));
  std::vector<std::string> names(count);
  for (auto& name : names) {
    if (!std::getline(in, name)) throw Error(path.string() + ": truncated observation list");
  }
  CrfModel model(templates, std::move(names));
  std::size_t num_weights = std::stoull(expect("weights"));
  if (num_weights != model.num_weights()) throw Error(path.string() + ": weight count mismatch");
  Eigen::VectorXd w(static_cast<Eigen::Index>(num_weights));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::getline(in, line)) throw Error(path.string() + ": truncated weights");
    w(i) = std::stod(line);
  }
  model.set_weights(std::move(w));
  model.set_lambda(lambda);
  return model;
}

LikelihoodResult LogLikelihoodAndGradient(const CrfModel& model,
                                          const std::vector<CompiledSentence>& sentences,
                                          double lambda) {
  const Eigen::VectorXd& w = model.weights();
  LikelihoodResult result;
  result.gradient = Eigen::VectorXd::Zero(w.size());
  Eigen::VectorXd& g = result.gradient;
  double ll = 0.0;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const CompiledSentence& sent = sentences[k];
    if (sent.tags.size() != sent.size()) {
      throw Error("crf: sentence " + std::to_string(k) + " has no gold tags for every token");
    }
    if (!IsWellFormed(sent.tags)) {
      throw Error("crf: sentence " + std::to_string(k) + " has malformed BIO tags");
    }
    const std::size_t n = sent.size();
    if (n == 0) continue;

    // Empirical counts.
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<Tag> prev = i >= 1 ? std::optional<Tag>(sent.tags[i - 1]) : std::nullopt;
      std::optional<Tag> prev2 = i >= 2 ? std::optional<Tag>(sent.tags[i - 2]) : std::nullopt;
      for (const auto& [id, v] : model.Features(sent, i, prev2, prev, sent.tags[i])) {
        g(static_cast<Eigen::Index>(id)) += v;
        ll += v * w(static_cast<Eigen::Index>(id));
      }
    }

    // Expected counts.
    CrfLattice lat(model, sent);
    const Eigen::MatrixXd alpha = lat.Forward();
    const Eigen::MatrixXd beta = lat.Backward();
    const double log_z = CrfLattice::LogZ(alpha);
    ll -= log_z;
    const std::size_t S = lat.states;
    const FeatureTemplates& t = model.templates();
    for (std::size_t i = 0; i < n; ++i) {
      double label_marginal[3] = {0.0, 0.0, 0.0};
      for (std::size_t s = 0; s < S; ++s) {
        const double a = alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
        if (a == kNegInf) continue;
        label_marginal[lat.Label(s)] +=
            std::exp(a + beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) - log_z);
      }
      for (const auto& [f, v] : sent.observations[i]) {
        for (std::size_t y = 0; y < 3; ++y) {
          g(static_cast<Eigen::Index>(model.ObservationWeight(f, TagAt(y)))) -= v * label_marginal[y];
        }
      }
      if (!t.prev_tags) continue;
      if (i == 0) {
        for (std::size_t y = 0; y < 3; ++y) {
          g(static_cast<Eigen::Index>(model.StartWeight(TagAt(y)))) -= label_marginal[y];
        }
        continue;
      }
      for (std::size_t s = 0; s < S; ++s) {
        const double a = alpha(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(s));
        if (a == kNegInf) continue;
        for (std::size_t u = 0; u < S; ++u) {
          const double e = lat.Edge(s, u);
          const double nd = lat.Node(i, u);
          if (e == kNegInf || nd == kNegInf) continue;
          const double p =
              std::exp(a + e + nd + beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) -
                       log_z);
          const Tag prev = TagAt(lat.Label(s));
          const Tag cur = TagAt(lat.Label(u));
          g(static_cast<Eigen::Index>(model.TransitionWeight(prev, cur))) -= p;
          if (lat.second_order) {
            std::optional<Tag> p2 =
                lat.Prev(s) == kStart ? std::nullopt : std::optional<Tag>(TagAt(lat.Prev(s)));
            g(static_cast<Eigen::Index>(model.Transition2Weight(p2, prev, cur))) -= p;
          }
        }
      }
    }
  }
  result.value = ll - lambda * w.squaredNorm();
  g -= 2.0 * lambda * w;
  return result;
}

namespace {

std::vector<CompiledSentence> CompileAll(const CrfModel& model,
                                         const std::vector<ObservationSequence>& obs,
                                         const std::vector<LabeledSentence>& data) {
  std::vector<CompiledSentence> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(model.Compile(obs[i], data[i].tags));
  return out;
}

}  // namespace

CrfModel TrainCrf(const std::vector<LabeledSentence>& data, const ObservationExtractor& extractor,
                  const CrfTrainOptions& options, CrfTrainReport* report,
                  const Eigen::VectorXd* initial_weights) {
  if (data.empty()) throw Error("crf: empty training set");
  if (!(options.lambda >= 0.0) || !std::isfinite(options.lambda)) {
    throw Error("crf: lambda must be finite and non-negative");
  }
  std::vector<ObservationSequence> obs;
  obs.reserve(data.size());
  for (const auto& s : data) {
    if (s.tags.size() != s.tokens.size()) throw Error("crf: tag count does not match token count");
    obs.push_back(extractor.Extract(s.tokens));
  }
  CrfModel model = CrfModel::FromObservations(extractor.templates(), obs);
  model.set_lambda(options.lambda);
  const std::vector<CompiledSentence> compiled = CompileAll(model, obs, data);

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.num_weights()));
  if (initial_weights) {
    if (initial_weights->size() != x0.size()) throw Error("crf: initial weight size mismatch");
    x0 = *initial_weights;
  }
  CrfModel scratch = model;
  Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    if (!x.allFinite()) return std::numeric_limits<double>::infinity();
    scratch.set_weights(x);
    LikelihoodResult r = LogLikelihoodAndGradient(scratch, compiled, options.lambda);
    grad = -r.gradient;
    return -r.value;
  };
  LbfgsResult fit = MinimizeLbfgs(objective, x0, options.lbfgs);
  if (!fit.x.allFinite() || !std::isfinite(fit.value)) {
    throw Error("crf: training diverged (objective " + std::to_string(fit.value) + ")");
  }
  model.set_weights(fit.x);
  spdlog::debug("crf: lambda={} objective={:.6g} iterations={} |g|={:.3g}{}", options.lambda,
                fit.value, fit.iterations, fit.gradient_norm, fit.converged ? "" : " (not converged)");
  if (report) {
    report->objective = fit.value;
    report->iterations = fit.iterations;
    report->gradient_norm = fit.gradient_norm;
    report->converged = fit.converged;
  }
  return model;
}

CrfModel TrainCrfSelectLambda(const std::vector<LabeledSentence>& train,
                              const std::vector<LabeledSentence>& dev,
                              const ObservationExtractor& extractor,
                              const std::vector<double>& lambdas, const LbfgsOptions& lbfgs,
                              LambdaSelection* selection) {
  if (lambdas.empty()) throw Error("crf: empty lambda grid");
  std::vector<double> grid = lambdas;
  std::sort(grid.begin(), grid.end());
  std::optional<CrfModel> best;
  LambdaSelection sel;
  for (double lambda : grid) {
    CrfTrainOptions opts;
    opts.lambda = lambda;
    opts.lbfgs = lbfgs;
    CrfModel model = TrainCrf(train, extractor, opts);
    if (dev.empty()) {
      sel.lambda = lambda;
      sel.grid.emplace_back(lambda, 0.0);
      best = std::move(model);
      break;
    }
    const double f1 = EvaluateCrf(model, extractor, dev).f1();
    sel.grid.emplace_back(lambda, f1);
    if (!best || f1 > sel.dev_f1) {
      sel.dev_f1 = f1;
      sel.lambda = lambda;
      best = std::move(model);
    }
  }
  if (selection) *selection = sel;
  return std::move(*best);
}

std::vector<Tag> TagWithCrf(const CrfModel& model, const ObservationExtractor& extractor,
                            const std::vector<std::string>& tokens) {
  return model.Viterbi(model.Compile(extractor.Extract(tokens)));
}

EvalReport EvaluateCrf(const CrfModel& model, const ObservationExtractor& extractor,
                       const std::vector<LabeledSentence>& gold) {
  EvalReport report;
  for (const auto& s : gold) report.Add(EvaluateSentence(TagWithCrf(model, extractor, s.tokens), s.tags));
  return report;
}

}  // namespace forge
