#include "forge/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "forge/candidates.h"
#include "forge/cca.h"
#include "forge/corpus.h"
#include "forge/cotrain.h"
#include "forge/hash.h"
#include "forge/learning_curve.h"
#include "forge/svm.h"
#include "forge/tagger_eval.h"
#include "forge/text.h"
#include "forge/views.h"

namespace forge {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Stage kAllStages[] = {Stage::kExtract,  Stage::kViews,  Stage::kCca, Stage::kClassify,
                                Stage::kCotrain, Stage::kReport, Stage::kCrf};

const char* const kViewFiles[] = {"spelling.mtx", "context.mtx",    "spelling.index",
                                  "context.index", "phrases.tsv", "occurrences.tsv"};

json EvalJson(const EvalReport& r) {
  return {{"tp", r.tp},         {"fp", r.fp},   {"fn", r.fn},
          {"precision", r.precision()}, {"recall", r.recall()}, {"f1", r.f1()}};
}

std::set<std::string> LoadTruth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.insert(NormalizePhraseKey(t));
  }
  return out;
}

// Inputs, parameters and body of one stage. The body writes its outputs
// (paths relative to the output directory) under `staging` and returns a
// JSON details object.
struct StagePlan {
  Stage stage;
  std::vector<fs::path> inputs;
  json params;
  std::vector<std::string> outputs;
  std::function<json(const fs::path& staging)> run;
};

class Runner {
 public:
  Runner(const PipelineConfig& config, const RunOptions& options)
      : cfg_(config), opts_(options), out_(config.out) {}

  RunManifest Run() {
    fs::create_directories(out_);
    const fs::path manifest_path = out_ / "manifest.json";
    RunManifest previous;
    if (fs::exists(manifest_path)) {
      try {
        previous = RunManifest::Load(manifest_path);
      } catch (const std::exception& e) {
        spdlog::warn("ignoring unreadable manifest: {}", e.what());
      }
    }
    std::vector<Stage> stages = opts_.stages.empty() ? DefaultStages(cfg_) : opts_.stages;
    std::sort(stages.begin(), stages.end());
    stages.erase(std::unique(stages.begin(), stages.end()), stages.end());

    RunManifest manifest;
    manifest.tool_version = std::string(kToolVersion);
    manifest.config_hash = Sha256Hex(cfg_.ToJson());
    manifest.seed = cfg_.seed;
    for (Stage stage : kAllStages) {
      const std::string name(StageName(stage));
      if (std::find(stages.begin(), stages.end(), stage) == stages.end()) {
        if (const StageRecord* old = previous.Find(name)) manifest.stages.push_back(*old);
        continue;
      }
      manifest.stages.push_back(RunStage(Plan(stage), previous.Find(name)));
      WriteManifest(manifest, manifest_path);
    }
    WriteManifest(manifest, manifest_path);
    return manifest;
  }

 private:
  StageRecord RunStage(const StagePlan& plan, const StageRecord* previous) {
    const std::string name(StageName(plan.stage));
    StageRecord record;
    record.name = name;
    for (const auto& input : plan.inputs) {
      if (!fs::exists(input)) {
        throw StageError(name, "missing input " + input.string() +
                                   " (run the stage that produces it first)");
      }
      record.inputs[input.string()] = Sha256File(input);
    }
    std::string key_material = name + "\n" + plan.params.dump() + "\n";
    for (const auto& [path, hash] : record.inputs) key_material += path + "\t" + hash + "\n";
    record.key = Sha256Hex(key_material);

    if (!opts_.force && previous && previous->key == record.key && OutputsIntact(*previous)) {
      spdlog::info("[{}] cache hit", name);
      record = *previous;
      record.cached = true;
      record.seconds = 0.0;
      return record;
    }

    spdlog::info("[{}] running", name);
    const auto start = std::chrono::steady_clock::now();
    const fs::path staging = out_ / ".staging" / name;
    fs::remove_all(staging);
    fs::create_directories(staging);
    json details;
    try {
      details = plan.run(staging);
      for (const auto& rel : plan.outputs) {
        if (!fs::exists(staging / rel)) throw Error("stage did not produce " + rel);
      }
    } catch (const std::exception& e) {
      const fs::path quarantine = out_ / "quarantine" / name;
      fs::remove_all(quarantine);
      fs::create_directories(quarantine.parent_path());
      fs::rename(staging, quarantine);
      if (const auto* se = dynamic_cast<const StageError*>(&e)) throw *se;
      throw StageError(name, std::string(e.what()) + " (partial outputs in " + quarantine.string() + ")");
    }
    for (const auto& rel : plan.outputs) {
      const fs::path dst = out_ / rel;
      fs::create_directories(dst.parent_path());
      fs::remove(dst);
      fs::rename(staging / rel, dst);
      record.outputs[rel] = Sha256File(dst);
    }
    fs::remove_all(staging);
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.details = details.dump();
    spdlog::info("[{}] done in {:.2f}s", name, record.seconds);
    return record;
  }

  bool OutputsIntact(const StageRecord& record) const {
    for (const auto& [rel, hash] : record.outputs) {
      const fs::path p = out_ / rel;
      if (!fs::exists(p) || Sha256File(p) != hash) return false;
    }
    return !record.outputs.empty();
  }

  static void WriteManifest(const RunManifest& manifest, const fs::path& path) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << manifest.ToJson() << "\n";
      if (!out) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
  }

  std::vector<fs::path> CorpusFiles() const { return CorpusReader(cfg_.corpus).Files(); }

  StagePlan Plan(Stage stage) {
    switch (stage) {
      case Stage::kExtract: return PlanExtract();
      case Stage::kViews: return PlanViews();
      case Stage::kCca: return PlanCca();
      case Stage::kClassify: return PlanClassify();
      case Stage::kCotrain: return PlanCotrain();
      case Stage::kReport: return PlanReport();
      case Stage::kCrf: return PlanCrf();
    }
    throw Error("unknown stage");
  }

  StagePlan PlanExtract() {
    StagePlan plan{Stage::kExtract, CorpusFiles(), json::object(), {"candidates.tsv"}, {}};
    plan.inputs.push_back(cfg_.patterns);
    if (cfg_.chunks) plan.inputs.push_back(*cfg_.chunks);
    plan.run = [this](const fs::path& staging) {
      const auto patterns = LoadPatterns(cfg_.patterns);
      std::optional<ChunkAnnotations> chunks;
      if (cfg_.chunks) chunks = ChunkAnnotations::Load(*cfg_.chunks);
      CandidateAggregator agg;
      std::size_t sentences = 0;
      CorpusReader(cfg_.corpus).ForEachSentence([&](const Sentence& s) {
        ++sentences;
        for (const auto& m : ExtractCandidates(s, patterns, chunks ? &*chunks : nullptr)) {
          agg.Add(m.phrase);
        }
      });
      const auto candidates = agg.Finish();
      if (candidates.empty()) throw Error("no candidate phrases extracted");
      SaveCandidates(staging / "candidates.tsv", candidates);
      return json{{"sentences", sentences}, {"candidates", candidates.size()}};
    };
    return plan;
  }

  StagePlan PlanViews() {
    StagePlan plan{Stage::kViews, CorpusFiles(), json::object(), {}, {}};
    plan.inputs.push_back(out_ / "candidates.tsv");
    for (const char* f : kViewFiles) plan.outputs.push_back(std::string("views/") + f);
    plan.run = [this](const fs::path& staging) {
      const auto candidates = LoadCandidates(out_ / "candidates.tsv");
      OccurrenceCollector collector(candidates);
      CorpusReader(cfg_.corpus).ForEachSentence([&](const Sentence& s) { collector.Add(s); });
      OccurrenceSet set = std::move(collector).Finish();
      DesignMatrices m = BuildDesignMatrices(set);
      SaveViews(staging / "views", set, m);
      return json{{"occurrences", set.occurrences.size()}, {"d1", m.space.d1()}, {"d2", m.space.d2()}};
    };
    return plan;
  }

  CcaOptions CcaOpts() const {
    CcaOptions o;
    o.k = cfg_.k;
    o.kappa = cfg_.kappa;
    o.kappa_relative = cfg_.kappa_relative;
    o.center = cfg_.center;
    o.full_whitening_max_dim = cfg_.full_whitening_max_dim;
    o.svd.oversample = cfg_.oversample;
    o.svd.power_iterations = cfg_.power_iterations;
    o.svd.seed = DeriveSeed(cfg_.seed, "cca");
    return o;
  }

  StagePlan PlanCca() {
    const CcaOptions o = CcaOpts();
    json params = {{"k", o.k},
                   {"kappa", o.kappa},
                   {"kappa_relative", o.kappa_relative},
                   {"center", o.center},
                   {"full_whitening_max_dim", o.full_whitening_max_dim},
                   {"oversample", o.svd.oversample},
                   {"power_iterations", o.svd.power_iterations},
                   {"seed", o.svd.seed}};
    StagePlan plan{Stage::kCca, {}, params, {"cca.bin", "embeddings.tsv"}, {}};
    for (const char* f : kViewFiles) plan.inputs.push_back(out_ / "views" / f);
    plan.run = [this, o](const fs::path& staging) {
      ViewData views = LoadViews(out_ / "views");
      CovarianceSummary summary = AccumulateCovariance(views.matrices.x, views.matrices.z);
      CcaModel model = SolveCca(summary, o);
      model.Save(staging / "cca.bin");
      EmbeddingTable emb =
          EmbedPhrases(model, PhraseSpellingVectors(views.occurrences, views.matrices.space));
      emb.Save(staging / "embeddings.tsv");
      std::vector<double> sv(model.singular_values.data(),
                             model.singular_values.data() + model.singular_values.size());
      return json{{"singular_values", sv},
                  {"kappa1", model.kappa1},
                  {"kappa2", model.kappa2},
                  {"diagonal_whitening", {model.diagonal1, model.diagonal2}},
                  {"phrases", emb.size()}};
    };
    return plan;
  }

  std::optional<GoldCorpus> Dev() const {
    if (!cfg_.dev) return std::nullopt;
    return GoldCorpus::LoadConll(*cfg_.dev);
  }

  void AddEvalInputs(StagePlan& plan) const {
    for (const auto& p : {cfg_.dev, cfg_.test, cfg_.truth}) {
      if (p) plan.inputs.push_back(*p);
    }
  }

  StagePlan PlanClassify() {
    json params = {{"c_grid", cfg_.c_grid}, {"k_grid", cfg_.k_grid}, {"balanced", cfg_.balanced}};
    StagePlan plan{Stage::kClassify,
                   {out_ / "embeddings.tsv", out_ / "candidates.tsv", cfg_.seeds},
                   params,
                   {"dict.cca.tsv", "classify.json"},
                   {}};
    if (cfg_.dev) plan.inputs.push_back(*cfg_.dev);
    plan.run = [this](const fs::path& staging) {
      const EmbeddingTable full = EmbeddingTable::Load(out_ / "embeddings.tsv");
      SeedSet seeds = SeedSet::Load(cfg_.seeds);
      seeds.Validate();
      std::vector<std::string> candidates;
      for (const auto& c : LoadCandidates(out_ / "candidates.tsv")) candidates.push_back(c.lower);
      const auto dev = Dev();
      if (!dev) spdlog::warn("no dev set: grid selection falls back to the tie rule");

      std::vector<EmbeddingTable> tables;
      for (std::size_t k : cfg_.k_grid) {
        if (k > full.dim()) throw Error("k=" + std::to_string(k) + " exceeds embedding dimension");
        tables.push_back(full.Truncated(k));
      }
      struct Point {
        std::size_t k_index;
        double c;
        std::optional<Dictionary> dict;
        GridPoint grid;
        std::vector<std::string> unresolved;
      };
      std::vector<Point> points;
      for (std::size_t ki = 0; ki < cfg_.k_grid.size(); ++ki) {
        for (double c : cfg_.c_grid) points.push_back({ki, c, std::nullopt, {cfg_.k_grid[ki], c, 0.0}, {}});
      }
      auto evaluate = [&](Point& p) {
        SvmOptions svm;
        svm.c = p.c;
        svm.balanced = cfg_.balanced;
        SeedTraining t = TrainOnSeeds(tables[p.k_index], seeds, svm);
        p.unresolved = t.unresolved;
        Dictionary d = BuildDictionary(candidates, tables[p.k_index], t.model);
        if (dev) p.grid.f1 = EvaluateDictionary(d, *dev).f1();
        p.dict = std::move(d);
      };
      RunParallel(points.size(), [&](std::size_t i) { evaluate(points[i]); });

      std::vector<GridPoint> grid;
      for (const auto& p : points) grid.push_back(p.grid);
      const GridPoint best = ModelSelect(grid);
      Point* chosen = nullptr;
      for (auto& p : points) {
        if (p.grid.k == best.k && p.grid.param == best.param) chosen = &p;
      }
      Dictionary& dict = *chosen->dict;
      dict.metadata()["kappa"] = std::to_string(cfg_.kappa);
      dict.metadata()["seeds_sha256"] = Sha256File(cfg_.seeds);
      dict.Save(staging / "dict.cca.tsv");

      json jgrid = json::array();
      for (const auto& p : points) {
        jgrid.push_back({{"k", p.grid.k}, {"C", p.grid.param}, {"dev_f1", p.grid.f1},
                         {"size", p.dict->size()}});
      }
      json details = {{"selected", {{"k", best.k}, {"C", best.param}, {"dev_f1", best.f1}}},
                      {"grid", jgrid},
                      {"unresolved_seeds", chosen->unresolved},
                      {"dictionary_size", dict.size()}};
      std::ofstream(staging / "classify.json") << details.dump(2) << "\n";
      return details;
    };
    return plan;
  }

  void RunParallel(std::size_t count, const std::function<void(std::size_t)>& fn) const {
    const std::size_t workers = std::max<std::size_t>(1, std::min(opts_.jobs, count));
    if (workers == 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  StagePlan PlanCotrain() {
    json params = {{"m", cfg_.m},
                   {"epsilon", cfg_.epsilon},
                   {"theta_grid", cfg_.theta_grid},
                   {"smoothed", cfg_.smoothed}};
    StagePlan plan{Stage::kCotrain,
                   {out_ / "views" / "phrases.tsv", out_ / "views" / "occurrences.tsv", cfg_.seeds},
                   params,
                   {"dict.cotrain.tsv", "cotrain.trace.jsonl", "cotrain.json"},
                   {}};
    if (cfg_.dev) plan.inputs.push_back(*cfg_.dev);
    plan.run = [this](const fs::path& staging) {
      OccurrenceSet set = LoadOccurrences(out_ / "views");
      SeedSet seeds = SeedSet::Load(cfg_.seeds);
      seeds.Validate();
      CotrainOptions opts;
      opts.m = cfg_.m;
      opts.epsilon = cfg_.epsilon;
      opts.estimator.smoothed = cfg_.smoothed;
      DecisionListState state = DlCotrain(set, seeds, opts);
      {
        std::ofstream trace(staging / "cotrain.trace.jsonl");
        WriteTrace(trace, state);
      }
      const auto dev = Dev();
      if (!dev) spdlog::warn("no dev set: theta selection falls back to the tie rule");
      std::vector<GridPoint> grid;
      json jgrid = json::array();
      for (double theta : cfg_.theta_grid) {
        Dictionary d = DictionaryFromRules(state, theta);
        GridPoint p{0, theta, dev ? EvaluateDictionary(d, *dev).f1() : 0.0};
        grid.push_back(p);
        jgrid.push_back({{"theta", theta}, {"dev_f1", p.f1}, {"size", d.size()}});
      }
      const GridPoint best = ModelSelect(grid);
      Dictionary dict = DictionaryFromRules(state, best.param);
      dict.metadata()["m"] = std::to_string(cfg_.m);
      dict.metadata()["epsilon"] = std::to_string(cfg_.epsilon);
      dict.metadata()["seeds_sha256"] = Sha256File(cfg_.seeds);
      dict.Save(staging / "dict.cotrain.tsv");
      json details = {{"selected", {{"theta", best.param}, {"dev_f1", best.f1}}},
                      {"grid", jgrid},
                      {"iterations", state.iteration},
                      {"spelling_rules", state.spelling_rules.size()},
                      {"context_rules", state.context_rules.size()},
                      {"dictionary_size", dict.size()}};
      std::ofstream(staging / "cotrain.json") << details.dump(2) << "\n";
      return details;
    };
    return plan;
  }

  StagePlan PlanReport() {
    StagePlan plan{Stage::kReport,
                   {out_ / "dict.cca.tsv", out_ / "dict.cotrain.tsv", out_ / "candidates.tsv"},
                   json::object(),
                   {"report.json"},
                   {}};
    AddEvalInputs(plan);
    plan.run = [this](const fs::path& staging) {
      std::vector<std::pair<std::string, Dictionary>> dicts;
      dicts.emplace_back("cca", Dictionary::Load(out_ / "dict.cca.tsv", Provenance::kCca));
      dicts.emplace_back("cotrain", Dictionary::Load(out_ / "dict.cotrain.tsv", Provenance::kCotrain));
      Dictionary all(Provenance::kCandidateList);
      for (const auto& c : LoadCandidates(out_ / "candidates.tsv")) all.Add(c.lower);
      dicts.emplace_back("candidate-list", std::move(all));

      const auto dev = Dev();
      std::optional<GoldCorpus> test;
      if (cfg_.test) test = GoldCorpus::LoadConll(*cfg_.test);
      std::optional<std::set<std::string>> truth;
      if (cfg_.truth) truth = LoadTruth(*cfg_.truth);

      json report = {{"dictionaries", json::object()}};
      for (const auto& [name, d] : dicts) {
        json entry = {{"provenance", std::string(ProvenanceName(d.provenance()))},
                      {"size", d.size()},
                      {"metadata", d.metadata()}};
        if (dev) entry["dev"] = EvalJson(EvaluateDictionary(d, *dev));
        if (test) entry["test"] = EvalJson(EvaluateDictionary(d, *test));
        if (truth) entry["truth"] = EvalJson(CompareToTruth(d, *truth));
        report["dictionaries"][name] = entry;
      }
      std::ofstream(staging / "report.json") << report.dump(2) << "\n";
      json summary = json::object();
      for (const auto& [name, entry] : report["dictionaries"].items()) {
        if (entry.contains("test")) summary[name] = entry["test"]["f1"];
      }
      return json{{"test_f1", summary}};
    };
    return plan;
  }

  StagePlan PlanCrf() {
    json params = {{"features", cfg_.crf_features},
                   {"lambda_grid", cfg_.lambda_grid},
                   {"sizes", cfg_.crf_sizes}};
    StagePlan plan{Stage::kCrf, {}, params, {"crf_curve.tsv", "crf_curve.txt"}, {}};
    if (!cfg_.crf_train || !cfg_.test) throw StageError("crf", "crf.train and eval.test are required");
    plan.inputs = {*cfg_.crf_train, *cfg_.test, out_ / "dict.cca.tsv", out_ / "dict.cotrain.tsv"};
    if (cfg_.dev) plan.inputs.push_back(*cfg_.dev);
    const FeatureTemplates families = FeatureTemplates::Parse(cfg_.crf_features);
    if (families.embedding == EmbeddingMode::kPhrase) plan.inputs.push_back(out_ / "embeddings.tsv");
    if (families.embedding == EmbeddingMode::kWord) {
      throw StageError("crf", "word embeddings need a word-mode embedding table; use `forge crf curve`");
    }
    plan.run = [this, families](const fs::path& staging) {
      const GoldCorpus train = GoldCorpus::LoadConll(*cfg_.crf_train);
      const GoldCorpus test = GoldCorpus::LoadConll(*cfg_.test);
      const GoldCorpus dev = cfg_.dev ? GoldCorpus::LoadConll(*cfg_.dev) : GoldCorpus{};
      const Dictionary cca = Dictionary::Load(out_ / "dict.cca.tsv", Provenance::kCca);
      const Dictionary cotrain = Dictionary::Load(out_ / "dict.cotrain.tsv", Provenance::kCotrain);
      std::optional<EmbeddingTable> emb;
      if (families.embedding == EmbeddingMode::kPhrase) emb = EmbeddingTable::Load(out_ / "embeddings.tsv");
      std::map<std::string, const Dictionary*> dicts;
      if (families.dict_match) dicts = {{"cca", &cca}, {"cotrain", &cotrain}};
      auto variants = StandardVariants(dicts, nullptr, emb ? &*emb : nullptr);
      for (auto& v : variants) v.templates.prev2 = families.prev2;
      LearningCurveOptions opts;
      opts.sizes = cfg_.crf_sizes;
      opts.lambdas = cfg_.lambda_grid;
      const auto points = RunLearningCurve(train, dev, test, variants, opts);
      WriteCurveTsv(points, staging / "crf_curve.tsv");
      std::ofstream(staging / "crf_curve.txt") << FormatCurveTable(points);
      json rows = json::array();
      for (const auto& p : points) {
        rows.push_back({{"variant", p.variant}, {"size", p.size}, {"lambda", p.lambda}, {"f1", p.test.f1()}});
      }
      return json{{"points", rows}};
    };
    return plan;
  }

  const PipelineConfig& cfg_;
  const RunOptions& opts_;
  fs::path out_;
};

}  // namespace

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kExtract: return "extract";
    case Stage::kViews: return "views";
    case Stage::kCca: return "cca";
    case Stage::kClassify: return "classify";
    case Stage::kCotrain: return "cotrain";
    case Stage::kReport: return "report";
    case Stage::kCrf: return "crf";
  }
  return "?";
}

Stage ParseStage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (StageName(s) == name) return s;
  }
  throw Error("unknown stage '" + std::string(name) + "'");
}

std::vector<Stage> ParseStages(std::string_view list) {
  std::vector<Stage> out;
  for (const auto& part : Split(list, ',')) {
    std::string name = Trim(part);
    if (!name.empty()) out.push_back(ParseStage(name));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Stage> DefaultStages(const PipelineConfig& config) {
  std::vector<Stage> out = {Stage::kExtract, Stage::kViews,   Stage::kCca,
                            Stage::kClassify, Stage::kCotrain, Stage::kReport};
  if (config.crf_train) out.push_back(Stage::kCrf);
  return out;
}

StageError::StageError(std::string stage, const std::string& message)
    : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}

GridPoint ModelSelect(const std::vector<GridPoint>& points) {
  if (points.empty()) throw Error("model_select: no grid points evaluated");
  GridPoint best = points.front();
  for (const auto& p : points) {
    if (p.f1 > best.f1 || (p.f1 == best.f1 && (p.k < best.k || (p.k == best.k && p.param < best.param)))) {
      best = p;
    }
  }
  return best;
}

const StageRecord* RunManifest::Find(std::string_view stage) const {
  for (const auto& s : stages) {
    if (s.name == stage) return &s;
  }
  return nullptr;
}

std::string RunManifest::ToJson() const {
  json j = {{"tool_version", tool_version}, {"config_hash", config_hash}, {"seed", seed}};
  json jstages = json::array();
  for (const auto& s : stages) {
    jstages.push_back({{"name", s.name},
                       {"key", s.key},
                       {"cached", s.cached},
                       {"seconds", s.seconds},
                       {"inputs", s.inputs},
                       {"outputs", s.outputs},
                       {"details", s.details.empty() ? json::object() : json::parse(s.details)}});
  }
  j["stages"] = jstages;
  return j.dump(2);
}

RunManifest RunManifest::FromJson(const std::string& text) {
  json j = json::parse(text);
  RunManifest m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.name = s.at("name").get<std::string>();
    r.key = s.at("key").get<std::string>();
    r.cached = s.at("cached").get<bool>();
    r.seconds = s.at("seconds").get<double>();
    r.inputs = s.at("inputs").get<std::map<std::string, std::string>>();
    r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
    r.details = s.at("details").dump();
    m.stages.push_back(std::move(r));
  }
  return m;
}

RunManifest RunManifest::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

RunManifest RunPipeline(const PipelineConfig& config, const RunOptions& options) {
  return Runner(config, options).Run();
}

}  // namespace forge
