#include <cmath>
#include <random>

#include "doctest.h"
#include "forge/crf.h"
#include "forge/error.h"
#include "forge/lbfgs.h"
#include "oracles.h"
#include "test_util.h"

using namespace forge;
using forge::testing::TempDir;

namespace {

std::vector<Tag> Tags(const std::string& s) {
  std::vector<Tag> out;
  for (char c : s) out.push_back(ParseTag(std::string(1, c)));
  return out;
}

LabeledSentence L(const std::string& words, const std::string& tags) {
  return {SplitWhitespace(words), Tags(tags)};
}

const std::vector<LabeledSentence>& Fixture() {
  static const std::vector<LabeledSentence> data = {
      L("Patients with HIV were seen", "OOBOO"),
      L("the human immunodeficiency virus spreads", "OBIOO"),
      L("HIV and Zika", "BOB"),
  };
  return data;
}

Dictionary FixtureDict() {
  Dictionary d;
  d.Add("hiv");
  d.Add("human immunodeficiency");
  return d;
}

Eigen::VectorXd RandomWeights(std::size_t n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = g(rng);
  return w;
}

struct Setup {
  Dictionary dict;
  std::unique_ptr<ObservationExtractor> extractor;
  CrfModel model;
  std::vector<CompiledSentence> sentences;
};

Setup MakeSetup(const std::string& features, const std::vector<LabeledSentence>& data) {
  Setup s;
  s.dict = FixtureDict();
  FeatureResources res;
  res.dictionaries = {&s.dict};
  s.extractor = std::make_unique<ObservationExtractor>(FeatureTemplates::Parse(features), res);
  std::vector<ObservationSequence> obs;
  for (const auto& d : data) obs.push_back(s.extractor->Extract(d.tokens));
  s.model = CrfModel::FromObservations(s.extractor->templates(), obs);
  for (std::size_t i = 0; i < data.size(); ++i) s.sentences.push_back(s.model.Compile(obs[i], data[i].tags));
  return s;
}

double MaxRelativeGradientError(CrfModel model, const std::vector<CompiledSentence>& data, double lambda) {
  const double h = 1e-5;
  Eigen::VectorXd w = model.weights();
  Eigen::VectorXd g = LogLikelihoodAndGradient(model, data, lambda).gradient;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::VectorXd wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    model.set_weights(wp);
    double fp = LogLikelihoodAndGradient(model, data, lambda).value;
    model.set_weights(wm);
    double fm = LogLikelihoodAndGradient(model, data, lambda).value;
    double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
  }
  return worst;
}

}  // namespace

TEST_CASE("template parsing") {
  CHECK(FeatureTemplates::Parse("baseline") == FeatureTemplates::Baseline());
  FeatureTemplates t = FeatureTemplates::Parse("baseline,dict,emb");
  CHECK(t.dict_match);
  CHECK(t.embedding == EmbeddingMode::kPhrase);
  CHECK(FeatureTemplates::Parse(t.ToString()) == t);
  CHECK(FeatureTemplates::Parse("prev2").prev_tags);
  CHECK(FeatureTemplates::Parse("none") == FeatureTemplates::None());
  CHECK_THROWS_AS(FeatureTemplates::Parse("bogus"), Error);
}

TEST_CASE("baseline observation features") {
  ObservationExtractor ex(FeatureTemplates::Baseline(), {});
  auto obs = ex.Extract({"the", "HIV", "virus"});
  std::set<std::string> names;
  for (const auto& f : obs[1]) names.insert(f.name);
  for (const char* want : {"bias", "w=HIV", "shape=allCaps", "cap", "allcaps", "pre1=h", "pre3=hiv",
                           "suf2=iv", "w[-2]=<s>", "w[-1]=the", "w[+1]=virus", "w[+2]=</s>"}) {
    CHECK_MESSAGE(names.count(want) == 1, want);
  }
  CHECK(names.count("pre4=hiv") == 0);
  bool has_pattern = false;
  for (const auto& n : names) has_pattern = has_pattern || n.rfind("capspat=BOS_", 0) == 0;
  CHECK(has_pattern);
}

TEST_CASE("dictionary feature marks B at the first entity token") {
  Dictionary d;
  d.Add("hiv");
  FeatureTemplates t = FeatureTemplates::None();
  t.dict_match = true;
  ObservationExtractor ex(t, FeatureResources{{&d}, nullptr});
  auto obs = ex.Extract({"patients", "with", "HIV"});
  bool found = false;
  for (const auto& f : obs[2]) found = found || f.name == "dict0=B";
  CHECK(found);
  auto feats = ExtractFeatures(obs, 2, std::nullopt, Tag::kO, Tag::kB, t);
  bool conj = false;
  for (const auto& f : feats) conj = conj || f.name == "dict0=B|B";
  CHECK(conj);
  CHECK_THROWS_AS(ObservationExtractor(t, {}), Error);
}

TEST_CASE("sentinel embedding features") {
  EmbeddingTable table;
  Eigen::VectorXd e(3);
  e << 0.25, -0.5, 0.125;
  table.Add("human immunodeficiency", e);
  Eigen::VectorXd other(3);
  other << 0.1, 0.2, -0.3;
  table.Add("zika", other);
  FeatureTemplates t = FeatureTemplates::None();
  t.embedding = EmbeddingMode::kPhrase;
  ObservationExtractor ex(t, FeatureResources{{}, &table});
  auto obs = ex.Extract({"in", "the", "case", "human", "immunodeficiency", "virus"});
  auto values = [&](std::size_t i) {
    std::vector<double> v(3, 0.0);
    for (const auto& f : obs[i]) {
      if (f.name.rfind("emb", 0) == 0) v[std::stoul(f.name.substr(3))] = f.value;
    }
    return v;
  };
  CHECK(values(3) == std::vector<double>{0.25, -0.5, 0.125});
  CHECK(values(4) == std::vector<double>{1.0, 1.0, 1.0});
  for (std::size_t i : {0, 1, 2, 5}) CHECK(values(i) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("word embedding mode leaves unknown words without features") {
  EmbeddingTable table;
  Eigen::VectorXd v(2);
  v << 0.5, -1.0;
  table.Add("virus", v);
  EmbeddingFeaturizer f(table, EmbeddingMode::kWord);
  auto vecs = f.TokenVectors({"Virus", "unknown"});
  REQUIRE(vecs[0]);
  CHECK(*vecs[0] == v);
  CHECK(!vecs[1]);
}

TEST_CASE("all families disabled gives no features") {
  ObservationExtractor ex(FeatureTemplates::None(), {});
  auto obs = ex.Extract({"a", "b"});
  CHECK(obs.size() == 2);
  CHECK(ExtractFeatures(obs, 0, std::nullopt, std::nullopt, Tag::kB, FeatureTemplates::None()).empty());
}

TEST_CASE("transition feature names") {
  FeatureTemplates t = FeatureTemplates::Parse("prev2");
  ObservationSequence obs(3);
  auto f0 = ExtractFeatures(obs, 0, std::nullopt, std::nullopt, Tag::kB, t);
  REQUIRE(f0.size() == 1);
  CHECK(f0[0].name == "trans=^>B");
  auto f1 = ExtractFeatures(obs, 1, std::nullopt, Tag::kB, Tag::kI, t);
  CHECK(f1.size() == 2);
  CHECK(f1[1].name == "trans2=^>B>I");
}

TEST_CASE("zero weights on a one-token sentence give -log 3") {
  Setup s = MakeSetup("baseline", {L("HIV", "B")});
  s.model.set_weights(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.model.num_weights())));
  CHECK(LogLikelihoodAndGradient(s.model, s.sentences, 0.0).value == doctest::Approx(-std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(1);
  for (const char* features : {"baseline,dict", "baseline,dict,prev2"}) {
    Setup s = MakeSetup(features, Fixture());
    s.model.set_weights(RandomWeights(s.model.num_weights(), rng, 0.5));
    CHECK(MaxRelativeGradientError(s.model, s.sentences, 0.1) <= 1e-4);
  }
}

TEST_CASE("likelihood is additive over identical sentences") {
  std::mt19937_64 rng(2);
  Setup one = MakeSetup("baseline,dict", {Fixture()[1]});
  one.model.set_weights(RandomWeights(one.model.num_weights(), rng, 0.5));
  std::vector<CompiledSentence> twice = {one.sentences[0], one.sentences[0]};
  double single = LogLikelihoodAndGradient(one.model, one.sentences, 0.0).value;
  CHECK(LogLikelihoodAndGradient(one.model, twice, 0.0).value == doctest::Approx(2 * single).epsilon(1e-14));
}

TEST_CASE("malformed or missing gold tags are rejected") {
  Setup s = MakeSetup("baseline", {L("a b", "OB")});
  s.model.set_weights(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.model.num_weights())));
  CompiledSentence bad = s.sentences[0];
  bad.tags = Tags("OI");
  CHECK_THROWS_AS(LogLikelihoodAndGradient(s.model, {bad}, 0.0), Error);
  bad.tags.clear();
  CHECK_THROWS_AS(LogLikelihoodAndGradient(s.model, {bad}, 0.0), Error);
}

TEST_CASE("probabilities sum to one") {
  std::mt19937_64 rng(3);
  for (const char* features : {"baseline", "baseline,prev2"}) {
    std::vector<LabeledSentence> data = {L("a", "B"), L("a b", "BI"), L("a b c", "OBO"), L("a b c d", "BOOB"),
                                         L("a b c d e", "OOBIO")};
    Setup s = MakeSetup(features, data);
    s.model.set_weights(RandomWeights(s.model.num_weights(), rng, 1.0));
    for (const auto& sent : s.sentences) {
      double total = 0.0;
      oracle::ForEachPath(sent.size(), [&](const std::vector<Tag>& tags) {
        total += std::exp(s.model.LogProbability(sent, tags));
      });
      CHECK(std::abs(total - 1.0) <= 1e-10);
      CHECK(s.model.LogPartition(sent) == doctest::Approx(oracle::BruteForceLogPartition(s.model, sent)).epsilon(1e-12));
    }
  }
}

TEST_CASE("viterbi equals exhaustive enumeration") {
  std::mt19937_64 rng(4);
  std::vector<LabeledSentence> data;
  std::vector<std::string> vocab = {"a", "b", "C", "dd", "E1"};
  for (std::size_t len = 1; len <= 6; ++len) {
    for (int rep = 0; rep < 4; ++rep) {
      std::string words;
      for (std::size_t i = 0; i < len; ++i) words += (i ? " " : "") + vocab[rng() % vocab.size()];
      data.push_back({SplitWhitespace(words), std::vector<Tag>(len, Tag::kO)});
    }
  }
  for (const char* features : {"baseline", "baseline,prev2"}) {
    Setup s = MakeSetup(features, data);
    for (int trial = 0; trial < 3; ++trial) {
      Eigen::VectorXd w = RandomWeights(s.model.num_weights(), rng, 1.0);
      // Integer weights produce exact ties that exercise the tie rule.
      if (trial == 2) w = w.array().round();
      s.model.set_weights(w);
      for (const auto& sent : s.sentences) {
        CHECK(s.model.Viterbi(sent) == oracle::BruteForceArgmax(s.model, sent));
      }
    }
  }
}

TEST_CASE("viterbi examples") {
  Setup s = MakeSetup("word", {L("the flu spreads", "OBO")});
  s.model.set_weights(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.model.num_weights())));
  CHECK(s.model.Viterbi(s.sentences[0]) == Tags("BBB"));
  Eigen::VectorXd w = s.model.weights();
  w[static_cast<Eigen::Index>(s.model.ObservationWeight(*s.model.FindObservation("w=flu"), Tag::kB))] = 5.0;
  w[static_cast<Eigen::Index>(s.model.ObservationWeight(*s.model.FindObservation("w=the"), Tag::kO))] = 5.0;
  w[static_cast<Eigen::Index>(s.model.ObservationWeight(*s.model.FindObservation("w=spreads"), Tag::kO))] = 5.0;
  s.model.set_weights(w);
  CHECK(s.model.Viterbi(s.sentences[0]) == Tags("OBO"));
  CHECK(s.model.Viterbi(CompiledSentence{}).empty());
}

TEST_CASE("set_weights validates") {
  Setup s = MakeSetup("baseline", {L("a", "B")});
  CHECK_THROWS_AS(s.model.set_weights(Eigen::VectorXd::Zero(3)), Error);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.model.num_weights()));
  w[0] = std::nan("");
  CHECK_THROWS_AS(s.model.set_weights(w), Error);
}

TEST_CASE("training memorizes a single sentence") {
  std::vector<LabeledSentence> data = {L("the human immunodeficiency virus spreads fast", "OBIOOO")};
  ObservationExtractor ex(FeatureTemplates::Baseline(), {});
  CrfTrainOptions opts;
  opts.lambda = 1e-4;
  CrfTrainReport report;
  CrfModel m = TrainCrf(data, ex, opts, &report);
  CHECK(TagWithCrf(m, ex, data[0].tokens) == data[0].tags);
  CHECK(report.converged);
}

TEST_CASE("huge lambda drives weights to zero") {
  ObservationExtractor ex(FeatureTemplates::Baseline(), {});
  CrfTrainOptions opts;
  opts.lambda = 1e6;
  CrfModel m = TrainCrf(Fixture(), ex, opts);
  CHECK(m.weights().norm() <= 1e-3);
}

TEST_CASE("objective does not depend on the starting point") {
  ObservationExtractor ex(FeatureTemplates::Baseline(), {});
  CrfTrainOptions opts;
  opts.lambda = 0.1;
  CrfTrainReport base;
  CrfModel m = TrainCrf(Fixture(), ex, opts, &base);
  std::mt19937_64 rng(5);
  for (int r = 0; r < 2; ++r) {
    Eigen::VectorXd w0 = RandomWeights(m.num_weights(), rng, 1.0);
    CrfTrainReport other;
    TrainCrf(Fixture(), ex, opts, &other, &w0);
    CHECK(std::abs(other.objective - base.objective) <= 1e-6);
  }
}

TEST_CASE("trigger-word corpus is learned") {
  std::mt19937_64 rng(6);
  auto word = [&](const std::string& letters) {
    std::string w;
    for (int i = 0; i < 5; ++i) w += letters[rng() % letters.size()];
    return w;
  };
  std::vector<std::string> filler;
  for (int i = 0; i < 30; ++i) filler.push_back(word("aeiou") + word("bcd"));
  auto make = [&](std::size_t count) {
    std::vector<LabeledSentence> out;
    for (std::size_t s = 0; s < count; ++s) {
      LabeledSentence ls;
      std::size_t before = rng() % 4, after = rng() % 4;
      for (std::size_t i = 0; i < before; ++i) ls.tokens.push_back(filler[rng() % filler.size()]);
      ls.tokens.push_back("infected");
      ls.tokens.push_back("with");
      std::size_t len = 1 + rng() % 2;
      for (std::size_t i = 0; i < len; ++i) ls.tokens.push_back(word("xyzqwk"));
      for (std::size_t i = 0; i < after; ++i) ls.tokens.push_back(filler[rng() % filler.size()]);
      ls.tags.assign(ls.tokens.size(), Tag::kO);
      ls.tags[before + 2] = Tag::kB;
      if (len == 2) ls.tags[before + 3] = Tag::kI;
      out.push_back(std::move(ls));
    }
    return out;
  };
  auto train = make(150);
  auto test = make(200);
  ObservationExtractor ex(FeatureTemplates::Baseline(), {});
  CrfModel m = TrainCrf(train, ex, CrfTrainOptions{});
  CHECK(EvaluateCrf(m, ex, test).f1() >= 0.95);
}

TEST_CASE("lambda selection prefers the best dev score, ties to the smaller lambda") {
  ObservationExtractor ex(FeatureTemplates::Baseline(), {});
  LambdaSelection sel;
  TrainCrfSelectLambda(Fixture(), Fixture(), ex, {10.0, 1e-3, 1e-2}, {}, &sel);
  REQUIRE(sel.grid.size() == 3);
  CHECK(sel.grid[0].first == 1e-3);
  double best = 0.0;
  for (const auto& [l, f] : sel.grid) best = std::max(best, f);
  CHECK(sel.dev_f1 == best);
  for (const auto& [l, f] : sel.grid) {
    if (f == best) {
      CHECK(sel.lambda == l);
      break;
    }
  }
  LambdaSelection no_dev;
  TrainCrfSelectLambda(Fixture(), {}, ex, {1.0, 0.1}, {}, &no_dev);
  CHECK(no_dev.lambda == 0.1);
  CHECK_THROWS_AS(TrainCrfSelectLambda(Fixture(), {}, ex, {}, {}), Error);
}

TEST_CASE("model file round trip") {
  Dictionary d = FixtureDict();
  FeatureResources res;
  res.dictionaries = {&d};
  ObservationExtractor ex(FeatureTemplates::Parse("baseline,dict"), res);
  CrfModel m = TrainCrf(Fixture(), ex, CrfTrainOptions{});
  TempDir dir;
  m.Save(dir / "crf.model");
  CrfModel back = CrfModel::Load(dir / "crf.model");
  CHECK(back.weights() == m.weights());
  CHECK(back.observation_names() == m.observation_names());
  CHECK(back.templates() == m.templates());
  for (const auto& s : Fixture()) CHECK(TagWithCrf(back, ex, s.tokens) == TagWithCrf(m, ex, s.tokens));
}

TEST_CASE("unknown observation features are ignored at inference") {
  ObservationExtractor ex(FeatureTemplates::Baseline(), {});
  CrfModel m = TrainCrf(Fixture(), ex, CrfTrainOptions{});
  auto tags = TagWithCrf(m, ex, {"completely", "unseen", "words"});
  CHECK(tags.size() == 3);
  CHECK(IsWellFormed(tags));
}

TEST_CASE("lbfgs minimizes quadratic and Rosenbrock functions") {
  Objective quad = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    Eigen::VectorXd c(3);
    c << 1.0, -2.0, 3.0;
    g = 2.0 * (x - c);
    return (x - c).squaredNorm();
  };
  auto r = MinimizeLbfgs(quad, Eigen::VectorXd::Zero(3));
  CHECK(r.converged);
  CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-6));

  Objective rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g[0] = -2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] * x[0]);
    g[1] = 200 * (x[1] - x[0] * x[0]);
    return (1 - x[0]) * (1 - x[0]) + 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]);
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  auto rr = MinimizeLbfgs(rosen, x0);
  CHECK(rr.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(rr.x[1] == doctest::Approx(1.0).epsilon(1e-4));

  Objective bad = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
    g = Eigen::VectorXd::Zero(1);
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(MinimizeLbfgs(bad, Eigen::VectorXd::Zero(1)), Error);
}
