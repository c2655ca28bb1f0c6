#include <algorithm>

#include "doctest.h"
#include "forge/candidates.h"
#include "forge/config.h"
#include "forge/hash.h"
#include "forge/learning_curve.h"
#include "forge/pipeline.h"
#include "forge/synthetic.h"
#include "json.hpp"
#include "test_util.h"

using namespace forge;
using forge::testing::ReadFile;
using forge::testing::TempDir;
using forge::testing::WriteFile;

namespace {

void WriteInputs(const TempDir& dir) {
  WriteFile(dir / "corpus.txt", "the zika virus spreads.\n");
  WriteFile(dir / "patterns.tsv", "between\tthe\tvirus\n");
  WriteFile(dir / "seeds.txt", "[positive]\nzika\n[negative]\nmutant\n");
}

std::vector<std::string> Problems(const std::filesystem::path& path) {
  try {
    PipelineConfig::Load(path).Validate();
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool Mentions(const std::vector<std::string>& problems, const std::string& key) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.rfind(key, 0) == 0; });
}

SyntheticData SmallData() {
  SyntheticOptions opts;
  opts.sentences = 5000;
  opts.seed = 21;
  return GenerateSynthetic(opts);
}

PipelineConfig SyntheticConfig(const TempDir& dir, const std::string& out) {
  PipelineConfig cfg = PipelineConfig::Load(dir / "pipeline.cfg");
  cfg.out = dir / out;
  cfg.k = 20;
  cfg.k_grid = {10, 20};
  cfg.c_grid = {0.01, 0.1, 1.0};
  cfg.theta_grid = {0.3, 0.6, 0.9};
  cfg.Validate();
  return cfg;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  TempDir dir;
  WriteInputs(dir);
  WriteFile(dir / "p.cfg", "[corpus]\npath = corpus.txt\npatterns = patterns.tsv\nseeds = seeds.txt\n");
  PipelineConfig cfg = PipelineConfig::Load(dir / "p.cfg");
  cfg.Validate();
  CHECK(cfg.k == 30);
  CHECK(cfg.kappa == 1e-4);
  CHECK(cfg.m == 5);
  CHECK(cfg.epsilon == 0.95);
  CHECK(cfg.c_grid == std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0});
  CHECK(cfg.k_grid == std::vector<std::size_t>{10, 20, 30});
  CHECK(cfg.corpus == dir / "corpus.txt");
  CHECK(cfg.seed == 13);
}

TEST_CASE("json config") {
  TempDir dir;
  WriteInputs(dir);
  WriteFile(dir / "p.json",
            R"({"corpus": {"path": "corpus.txt", "patterns": "patterns.tsv", "seeds": "seeds.txt"},
                "cca": {"k": 12}, "svm": {"k_grid": "4,8"}, "cotrain": {"epsilon": 0.9}})");
  PipelineConfig cfg = PipelineConfig::Load(dir / "p.json");
  cfg.Validate();
  CHECK(cfg.k == 12);
  CHECK(cfg.k_grid == std::vector<std::size_t>{4, 8});
  CHECK(cfg.epsilon == 0.9);
}

TEST_CASE("config range and file errors name the field") {
  TempDir dir;
  WriteInputs(dir);
  WriteFile(dir / "eps.cfg",
            "[corpus]\npath = corpus.txt\npatterns = patterns.tsv\nseeds = seeds.txt\n[cotrain]\nepsilon = 1.5\n");
  CHECK(Mentions(Problems(dir / "eps.cfg"), "cotrain.epsilon"));

  WriteFile(dir / "seed.cfg", "[corpus]\npath = corpus.txt\npatterns = patterns.tsv\nseeds = nowhere.txt\n");
  auto problems = Problems(dir / "seed.cfg");
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].rfind("corpus.seeds", 0) == 0);
  CHECK(problems[0].find("nowhere.txt") != std::string::npos);

  WriteFile(dir / "many.cfg",
            "[corpus]\npath = corpus.txt\npatterns = patterns.tsv\nseeds = seeds.txt\n"
            "[cca]\nk = 0\n[svm]\nc_grid = \nk_grid = 10\n[typo]\nkey = 1\n");
  problems = Problems(dir / "many.cfg");
  CHECK(Mentions(problems, "cca.k"));
  CHECK(Mentions(problems, "svm.c_grid"));
  CHECK(Mentions(problems, "typo.key"));

  WriteFile(dir / "crf.cfg",
            "[corpus]\npath = corpus.txt\npatterns = patterns.tsv\nseeds = seeds.txt\n"
            "[crf]\ntrain = corpus.txt\n");
  CHECK(Mentions(Problems(dir / "crf.cfg"), "eval.test"));
  CHECK_THROWS_AS(PipelineConfig::Load(dir / "absent.cfg"), ConfigError);
}

TEST_CASE("grid syntax") {
  CHECK(ParseGrid("1e-4..1e2") == std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0});
  auto lin = ParseGrid("0.1..0.9:0.1");
  REQUIRE(lin.size() == 9);
  CHECK(lin[8] == doctest::Approx(0.9));
  CHECK(ParseGrid("0.5, 2") == std::vector<double>{0.5, 2.0});
  CHECK_THROWS(ParseGrid("a..b"));
}

TEST_CASE("model selection") {
  CHECK(ModelSelect({{20, 0.1, 0.5}}).k == 20);
  GridPoint tie = ModelSelect({{30, 0.1, 0.8}, {10, 1.0, 0.8}, {20, 0.01, 0.7}});
  CHECK(tie.k == 10);
  GridPoint tie_param = ModelSelect({{10, 1.0, 0.8}, {10, 0.1, 0.8}});
  CHECK(tie_param.param == 0.1);
  CHECK(ModelSelect({{30, 0.1, 0.6}, {10, 0.1, 0.5}}).k == 30);
  CHECK_THROWS_AS(ModelSelect({}), Error);
}

TEST_CASE("stage names") {
  CHECK(ParseStages("classify,cca") == std::vector<Stage>{Stage::kCca, Stage::kClassify});
  CHECK_THROWS_AS(ParseStage("bogus"), Error);
  CHECK(StageName(Stage::kCotrain) == "cotrain");
}

TEST_CASE("hashing and seed derivation") {
  CHECK(Sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(DeriveSeed(13, "cca") == DeriveSeed(13, "cca"));
  CHECK(DeriveSeed(13, "cca") != DeriveSeed(13, "svm"));
  CHECK(DeriveSeed(13, "cca") != DeriveSeed(14, "cca"));
}

TEST_CASE("pipeline: end to end, memoization, dependency hashing, reproducibility") {
  TempDir dir;
  SyntheticData data = SmallData();
  WriteSynthetic(data, dir.path());
  PipelineConfig cfg = SyntheticConfig(dir, "out");

  RunManifest first = RunPipeline(cfg);
  for (const char* f : {"candidates.tsv", "cca.bin", "embeddings.tsv", "dict.cca.tsv", "dict.cotrain.tsv",
                        "report.json", "manifest.json", "views/occurrences.tsv"}) {
    CHECK_MESSAGE(std::filesystem::exists(cfg.out / f), f);
  }
  REQUIRE(first.stages.size() == 6);
  for (const auto& s : first.stages) CHECK(!s.cached);
  CHECK(first.tool_version == kToolVersion);

  auto report = nlohmann::json::parse(ReadFile(cfg.out / "report.json"));
  CHECK(report["dictionaries"].contains("cca"));
  CHECK(report["dictionaries"].contains("cotrain"));

  // Cache soundness: recorded output hashes match the files.
  RunManifest on_disk = RunManifest::Load(cfg.out / "manifest.json");
  for (const auto& s : on_disk.stages) {
    for (const auto& [rel, hash] : s.outputs) CHECK(Sha256File(cfg.out / rel) == hash);
  }

  RunManifest second = RunPipeline(cfg);
  for (const auto& s : second.stages) CHECK_MESSAGE(s.cached, s.name);

  // Same inputs in another directory give byte-identical artifacts.
  PipelineConfig other = cfg;
  other.out = dir / "out2";
  RunOptions parallel;
  parallel.jobs = 4;
  RunPipeline(other, parallel);
  for (const char* f : {"candidates.tsv", "embeddings.tsv", "dict.cca.tsv", "dict.cotrain.tsv", "report.json",
                        "classify.json"}) {
    CHECK_MESSAGE(ReadFile(cfg.out / f) == ReadFile(other.out / f), f);
  }

  // Editing the seeds re-runs classify but not cca.
  std::string seeds = ReadFile(cfg.seeds);
  WriteFile(cfg.seeds, seeds + "\n# edited\n");
  RunOptions subset;
  subset.stages = ParseStages("cca,classify");
  RunManifest third = RunPipeline(cfg, subset);
  REQUIRE(third.Find("cca"));
  REQUIRE(third.Find("classify"));
  CHECK(third.Find("cca")->cached);
  CHECK(!third.Find("classify")->cached);
  // Records of stages outside the subset are carried over.
  CHECK(third.Find("cotrain") != nullptr);

  // A tampered output invalidates the cache hit.
  WriteFile(cfg.out / "dict.cca.tsv", "tampered\n");
  RunManifest fourth = RunPipeline(cfg, subset);
  CHECK(!fourth.Find("classify")->cached);
  CHECK(ReadFile(cfg.out / "dict.cca.tsv") != "tampered\n");
}

TEST_CASE("pipeline: grid choice equals exhaustive re-evaluation") {
  TempDir dir;
  SyntheticData data = SmallData();
  WriteSynthetic(data, dir.path());
  PipelineConfig cfg = SyntheticConfig(dir, "out");
  RunPipeline(cfg);

  auto details = nlohmann::json::parse(ReadFile(cfg.out / "classify.json"));
  EmbeddingTable full = EmbeddingTable::Load(cfg.out / "embeddings.tsv");
  SeedSet seeds = SeedSet::Load(cfg.seeds);
  GoldCorpus dev = GoldCorpus::LoadConll(*cfg.dev);
  std::vector<std::string> candidates;
  for (const auto& c : LoadCandidates(cfg.out / "candidates.tsv")) candidates.push_back(c.lower);

  double best_f1 = -1.0;
  std::size_t best_k = 0;
  double best_c = 0.0;
  std::size_t index = 0;
  for (std::size_t k : cfg.k_grid) {
    EmbeddingTable table = full.Truncated(k);
    for (double c : cfg.c_grid) {
      SvmOptions opts;
      opts.c = c;
      Dictionary d = BuildDictionary(candidates, table, TrainOnSeeds(table, seeds, opts).model);
      double f1 = EvaluateDictionary(d, dev).f1();
      CHECK(details["grid"][index]["dev_f1"].get<double>() == doctest::Approx(f1));
      ++index;
      if (f1 > best_f1) {
        best_f1 = f1;
        best_k = k;
        best_c = c;
      }
    }
  }
  CHECK(details["selected"]["k"].get<std::size_t>() == best_k);
  CHECK(details["selected"]["C"].get<double>() == best_c);
}

TEST_CASE("pipeline: failing stage is reported and quarantined") {
  TempDir dir;
  SyntheticData data = SmallData();
  WriteSynthetic(data, dir.path());
  PipelineConfig cfg = SyntheticConfig(dir, "out");
  WriteFile(cfg.seeds, "[positive]\n" + data.entities[0] + "\n[negative]\n");
  RunOptions opts;
  opts.stages = ParseStages("extract,views,cca,classify");
  try {
    RunPipeline(cfg, opts);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "classify");
    CHECK(std::string(e.what()).rfind("[classify]", 0) == 0);
  }
  CHECK(std::filesystem::exists(cfg.out / "quarantine" / "classify"));
  CHECK(!std::filesystem::exists(cfg.out / "dict.cca.tsv"));
}

TEST_CASE("learning curve: variants, ordering and dictionary lift") {
  SyntheticOptions opts;
  opts.sentences = 4000;
  opts.train_sentences = 100;
  opts.dev_sentences = 100;
  opts.test_sentences = 300;
  SyntheticData data = GenerateSynthetic(opts);
  Dictionary oracle_dict;
  for (const auto& e : data.entities) oracle_dict.Add(e);
  EmbeddingTable emb;
  Eigen::VectorXd v(2);
  v << 0.5, -0.5;
  emb.Add(data.entities[0], v);

  auto variants = StandardVariants({{"oracle", &oracle_dict}}, &emb, &emb);
  std::vector<std::string> names;
  for (const auto& var : variants) names.push_back(var.name);
  CHECK(names == std::vector<std::string>{"baseline", "+dict:oracle", "CCA-word", "CCA-phrase"});

  LearningCurveOptions lc;
  lc.sizes = {10, 100};
  lc.lambdas = {1e-2, 1.0};
  auto points = RunLearningCurve(data.train, data.dev, data.test,
                                 {variants[0], variants[1]}, lc);
  REQUIRE(points.size() == 4);
  auto f1 = [&](const std::string& variant, std::size_t size) {
    for (const auto& p : points) {
      if (p.variant == variant && p.size == size) return p.test.f1();
    }
    return -1.0;
  };
  CHECK(f1("baseline", 100) >= f1("baseline", 10) - 0.02);
  CHECK(f1("+dict:oracle", 10) >= f1("baseline", 10));
  CHECK(f1("+dict:oracle", 100) >= f1("baseline", 100));

  TempDir dir;
  WriteCurveTsv(points, dir / "curve.tsv");
  CHECK(ReadFile(dir / "curve.tsv").rfind("variant\tsize\tlambda", 0) == 0);
  CHECK(!FormatCurveTable(points).empty());

  lc.sizes = {100, 10};
  CHECK_THROWS_AS(RunLearningCurve(data.train, data.dev, data.test, {variants[0]}, lc), Error);
  lc.sizes = {1000};
  CHECK_THROWS_AS(RunLearningCurve(data.train, data.dev, data.test, {variants[0]}, lc), Error);
}
