// Command-line front end for dictionary construction and evaluation.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "forge/candidates.h"
#include "forge/cca.h"
#include "forge/config.h"
#include "forge/corpus.h"
#include "forge/cotrain.h"
#include "forge/crf.h"
#include "forge/learning_curve.h"
#include "forge/pipeline.h"
#include "forge/svm.h"
#include "forge/synthetic.h"
#include "forge/tagger_eval.h"
#include "forge/text.h"
#include "forge/views.h"

namespace fs = std::filesystem;
using namespace forge;

namespace {

std::vector<double> GridOption(const std::string& text) {
  auto grid = ParseGrid(text);
  if (grid.empty()) throw Error("empty grid '" + text + "'");
  return grid;
}

// "name=path" or a bare path, which is named after its provenance.
std::vector<std::pair<std::string, Dictionary>> LoadDictionaries(const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, Dictionary>> out;
  for (const auto& spec : specs) {
    std::size_t eq = spec.find('=');
    fs::path path = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
    Dictionary d = Dictionary::Load(path);
    std::string name = eq == std::string::npos ? std::string(ProvenanceName(d.provenance()))
                                               : spec.substr(0, eq);
    out.emplace_back(name, std::move(d));
  }
  return out;
}

FeatureResources Resources(const std::vector<std::pair<std::string, Dictionary>>& dicts,
                           const std::optional<EmbeddingTable>& emb) {
  FeatureResources r;
  for (const auto& [name, d] : dicts) r.dictionaries.push_back(&d);
  if (emb) r.embeddings = &*emb;
  return r;
}

void WriteConllPrediction(std::ostream& out, const std::vector<std::string>& tokens,
                          const std::vector<Tag>& tags) {
  for (std::size_t i = 0; i < tokens.size(); ++i) out << tokens[i] << '\t' << TagChar(tags[i]) << '\n';
  out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: NER dictionary construction from unlabeled text and seeds"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Segment and tokenize a corpus");
  std::string corpus_path, emit = "tokens", out_path;
  corpus_cmd->add_option("--corpus", corpus_path, "Directory or one-document-per-line file")->required();
  corpus_cmd->add_option("--emit", emit, "Output format")->check(CLI::IsMember({"tokens"}));
  corpus_cmd->add_option("--out", out_path, "Output file (default stdout)");

  // vocab
  auto* vocab_cmd = app.add_subcommand("vocab", "Count the most frequent word types");
  std::size_t top_k = 100000;
  vocab_cmd->add_option("--corpus", corpus_path)->required();
  vocab_cmd->add_option("--top-k", top_k);
  vocab_cmd->add_option("--out", out_path);

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Extract candidate phrases with patterns");
  std::string patterns_path, chunks_path;
  extract_cmd->add_option("--corpus", corpus_path)->required();
  extract_cmd->add_option("--patterns", patterns_path)->required();
  extract_cmd->add_option("--chunks", chunks_path, "Chunk annotation sidecar");
  extract_cmd->add_option("--out", out_path)->required();

  // views
  auto* views_cmd = app.add_subcommand("views", "Build spelling/context design matrices");
  std::string candidates_path;
  bool word_mode = false;
  views_cmd->add_option("--corpus", corpus_path)->required();
  views_cmd->add_option("--candidates", candidates_path);
  views_cmd->add_flag("--word-mode", word_mode, "Every frequent word type is a candidate");
  views_cmd->add_option("--top-k", top_k, "Vocabulary size in word mode");
  views_cmd->add_option("--out", out_path)->required();

  // cca
  auto* cca_cmd = app.add_subcommand("cca", "Solve CCA and write phrase embeddings");
  std::string views_dir;
  CcaOptions cca_opts;
  cca_opts.kappa_relative = true;
  bool kappa_absolute = false;
  cca_cmd->add_option("--views", views_dir)->required();
  cca_cmd->add_option("-k", cca_opts.k);
  cca_cmd->add_option("--kappa", cca_opts.kappa);
  cca_cmd->add_flag("--kappa-absolute", kappa_absolute, "Use kappa as is, not kappa*trace/d");
  cca_cmd->add_flag("--center", cca_opts.center);
  cca_cmd->add_option("--seed", cca_opts.svd.seed);
  cca_cmd->add_option("--oversample", cca_opts.svd.oversample);
  cca_cmd->add_option("--power-iterations", cca_opts.svd.power_iterations);
  cca_cmd->add_option("--full-whitening-max-dim", cca_opts.full_whitening_max_dim);
  cca_cmd->add_option("--out", out_path, "Output directory (cca.bin, embeddings.tsv)")->required();

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Train the seed SVM and emit a dictionary");
  std::string emb_path, seeds_path;
  SvmOptions svm_opts;
  std::size_t classify_k = 0;
  double threshold = 0.0;
  classify_cmd->add_option("--embeddings", emb_path)->required();
  classify_cmd->add_option("--seeds", seeds_path)->required();
  classify_cmd->add_option("-C", svm_opts.c);
  classify_cmd->add_option("-k", classify_k, "Use the first k dimensions");
  classify_cmd->add_flag("--balanced", svm_opts.balanced);
  classify_cmd->add_option("--threshold", threshold);
  classify_cmd->add_option("--candidates", candidates_path, "Restrict to these candidates");
  classify_cmd->add_option("--out", out_path)->required();

  // cotrain
  auto* cotrain_cmd = app.add_subcommand("cotrain", "Run DL-CoTrain and emit a dictionary");
  CotrainOptions co_opts;
  double theta = 0.4;
  std::string trace_path;
  cotrain_cmd->add_option("--views", views_dir)->required();
  cotrain_cmd->add_option("--seeds", seeds_path)->required();
  cotrain_cmd->add_option("-m", co_opts.m);
  cotrain_cmd->add_option("--epsilon", co_opts.epsilon);
  cotrain_cmd->add_option("--theta", theta);
  cotrain_cmd->add_flag("--smoothed", co_opts.estimator.smoothed);
  cotrain_cmd->add_option("--trace", trace_path);
  cotrain_cmd->add_option("--out", out_path)->required();

  // tag
  auto* tag_cmd = app.add_subcommand("tag", "Tag with a dictionary and score against gold");
  std::string dict_path, input_path, report_path;
  bool case_sensitive = false;
  tag_cmd->add_option("--dict", dict_path)->required();
  tag_cmd->add_option("--input", input_path, "CoNLL gold file")->required();
  tag_cmd->add_option("--report", report_path);
  tag_cmd->add_option("--out", out_path, "Predicted CoNLL");
  tag_cmd->add_flag("--case-sensitive", case_sensitive);

  // crf
  auto* crf_cmd = app.add_subcommand("crf", "Linear-chain CRF tagger");
  crf_cmd->require_subcommand(1);
  std::string data_path, dev_path, test_path, features = "baseline", lambda_grid = "1e-4..10",
                                                 model_path, word_emb_path, sizes_text = "10,50,200";
  std::vector<std::string> dict_specs;
  auto* crf_train = crf_cmd->add_subcommand("train", "Train with lambda chosen on dev");
  crf_train->add_option("--data", data_path)->required();
  crf_train->add_option("--dev", dev_path);
  crf_train->add_option("--features", features);
  crf_train->add_option("--dict", dict_specs, "Dictionary file(s), optionally name=path");
  crf_train->add_option("--emb", emb_path, "Embedding table");
  crf_train->add_option("--lambda-grid", lambda_grid);
  crf_train->add_option("--out", out_path)->required();
  auto* crf_tag = crf_cmd->add_subcommand("tag", "Tag a CoNLL file");
  crf_tag->add_option("--model", model_path)->required();
  crf_tag->add_option("--input", input_path)->required();
  crf_tag->add_option("--dict", dict_specs);
  crf_tag->add_option("--emb", emb_path);
  crf_tag->add_option("--report", report_path);
  crf_tag->add_option("--out", out_path);
  auto* crf_curve = crf_cmd->add_subcommand("curve", "Learning curves per feature variant");
  crf_curve->add_option("--train", data_path)->required();
  crf_curve->add_option("--dev", dev_path);
  crf_curve->add_option("--test", test_path)->required();
  crf_curve->add_option("--dict", dict_specs);
  crf_curve->add_option("--word-emb", word_emb_path);
  crf_curve->add_option("--phrase-emb", emb_path);
  crf_curve->add_option("--sizes", sizes_text);
  crf_curve->add_option("--lambda-grid", lambda_grid);
  crf_curve->add_option("--out", out_path, "TSV output");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the pipeline from a config");
  std::string config_path, stages_text;
  RunOptions run_opts;
  run_cmd->add_option("--config", config_path)->required();
  run_cmd->add_option("--stages", stages_text);
  run_cmd->add_option("--jobs", run_opts.jobs);
  run_cmd->add_flag("--force", run_opts.force, "Ignore cached stage results");

  auto* validate_cmd = app.add_subcommand("validate", "Check a pipeline config");
  validate_cmd->add_option("--config", config_path)->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic benchmark");
  SyntheticOptions syn;
  synth_cmd->add_option("--seed", syn.seed);
  synth_cmd->add_option("--sentences", syn.sentences);
  synth_cmd->add_option("--entities", syn.entities);
  synth_cmd->add_option("--distractors", syn.distractors);
  synth_cmd->add_option("--noise", syn.noise);
  synth_cmd->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (*corpus_cmd) {
      std::ofstream file;
      if (!out_path.empty()) file.open(out_path);
      std::ostream& out = out_path.empty() ? std::cout : file;
      CorpusReader(corpus_path).ForEachSentence([&](const Sentence& s) { WriteTokenLine(out, s); });
    } else if (*vocab_cmd) {
      VocabCounter counter;
      CorpusReader(corpus_path).ForEachSentence([&](const Sentence& s) { counter.Add(s); });
      VocabStats stats = counter.Finish(top_k);
      std::ofstream file;
      if (!out_path.empty()) file.open(out_path);
      std::ostream& out = out_path.empty() ? std::cout : file;
      for (const auto& [w, c] : stats.counts) out << w << '\t' << c << '\n';
    } else if (*extract_cmd) {
      const auto patterns = LoadPatterns(patterns_path);
      std::optional<ChunkAnnotations> chunks;
      if (!chunks_path.empty()) chunks = ChunkAnnotations::Load(chunks_path);
      CandidateAggregator agg;
      CorpusReader(corpus_path).ForEachSentence([&](const Sentence& s) {
        for (const auto& m : ExtractCandidates(s, patterns, chunks ? &*chunks : nullptr)) agg.Add(m.phrase);
      });
      const auto list = agg.Finish();
      SaveCandidates(out_path, list);
      spdlog::info("{} candidate phrases", list.size());
    } else if (*views_cmd) {
      std::vector<CandidatePhrase> candidates;
      if (word_mode) {
        VocabCounter counter;
        CorpusReader(corpus_path).ForEachSentence([&](const Sentence& s) { counter.Add(s); });
        candidates = WordCandidates(counter.Finish(top_k));
      } else {
        if (candidates_path.empty()) throw Error("--candidates is required unless --word-mode");
        candidates = LoadCandidates(candidates_path);
      }
      OccurrenceCollector collector(candidates);
      CorpusReader(corpus_path).ForEachSentence([&](const Sentence& s) { collector.Add(s); });
      OccurrenceSet set = std::move(collector).Finish();
      DesignMatrices m = BuildDesignMatrices(set);
      SaveViews(out_path, set, m);
      spdlog::info("n={} d1={} d2={}", m.x.rows(), m.space.d1(), m.space.d2());
    } else if (*cca_cmd) {
      cca_opts.kappa_relative = !kappa_absolute;
      ViewData views = LoadViews(views_dir);
      CcaModel model = SolveCca(AccumulateCovariance(views.matrices.x, views.matrices.z), cca_opts);
      fs::create_directories(out_path);
      model.Save(fs::path(out_path) / "cca.bin");
      EmbedPhrases(model, PhraseSpellingVectors(views.occurrences, views.matrices.space))
          .Save(fs::path(out_path) / "embeddings.tsv");
      spdlog::info("top canonical correlation {:.6f}", model.singular_values(0));
    } else if (*classify_cmd) {
      EmbeddingTable emb = EmbeddingTable::Load(emb_path);
      if (classify_k > 0) emb = emb.Truncated(classify_k);
      SeedSet seeds = SeedSet::Load(seeds_path);
      seeds.Validate();
      SeedTraining t = TrainOnSeeds(emb, seeds, svm_opts);
      std::vector<std::string> candidates;
      if (!candidates_path.empty()) {
        for (const auto& c : LoadCandidates(candidates_path)) candidates.push_back(c.lower);
      } else {
        candidates = emb.phrases();
      }
      Dictionary d = BuildDictionary(candidates, emb, t.model, threshold);
      d.Save(out_path);
      spdlog::info("{} entries", d.size());
    } else if (*cotrain_cmd) {
      SeedSet seeds = SeedSet::Load(seeds_path);
      seeds.Validate();
      DecisionListState state = DlCotrain(LoadOccurrences(views_dir), seeds, co_opts);
      if (!trace_path.empty()) {
        std::ofstream trace(trace_path);
        WriteTrace(trace, state);
      }
      Dictionary d = DictionaryFromRules(state, theta);
      d.Save(out_path);
      spdlog::info("{} iterations, {} entries", state.iteration, d.size());
    } else if (*tag_cmd) {
      Dictionary d = Dictionary::Load(dict_path);
      GoldCorpus gold = GoldCorpus::LoadConll(input_path);
      DictionaryTagger tagger(d, case_sensitive);
      std::vector<std::vector<Tag>> predicted;
      for (const auto& s : gold.sentences) predicted.push_back(tagger.Apply(s.tokens));
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        for (std::size_t i = 0; i < predicted.size(); ++i) {
          WriteConllPrediction(out, gold.sentences[i].tokens, predicted[i]);
        }
      }
      const std::string json = ReportJson(Evaluate(predicted, gold), &d);
      if (!report_path.empty()) std::ofstream(report_path) << json << '\n';
      std::cout << json << '\n';
    } else if (*crf_train) {
      auto dicts = LoadDictionaries(dict_specs);
      FeatureTemplates templates = FeatureTemplates::Parse(features);
      std::optional<EmbeddingTable> emb;
      if (!emb_path.empty()) emb = EmbeddingTable::Load(emb_path);
      ObservationExtractor extractor(templates, Resources(dicts, emb));
      GoldCorpus train = GoldCorpus::LoadConll(data_path);
      GoldCorpus dev;
      if (!dev_path.empty()) dev = GoldCorpus::LoadConll(dev_path);
      LambdaSelection sel;
      CrfModel model = TrainCrfSelectLambda(train.sentences, dev.sentences, extractor,
                                            GridOption(lambda_grid), {}, &sel);
      model.Save(out_path);
      for (const auto& [l, f1] : sel.grid) spdlog::info("lambda={} dev F1={:.4f}", l, f1);
      spdlog::info("selected lambda={}", sel.lambda);
    } else if (*crf_tag) {
      CrfModel model = CrfModel::Load(model_path);
      auto dicts = LoadDictionaries(dict_specs);
      std::optional<EmbeddingTable> emb;
      if (!emb_path.empty()) emb = EmbeddingTable::Load(emb_path);
      ObservationExtractor extractor(model.templates(), Resources(dicts, emb));
      GoldCorpus input = GoldCorpus::LoadConll(input_path);
      std::ofstream file;
      if (!out_path.empty()) file.open(out_path);
      std::ostream& out = out_path.empty() ? std::cout : file;
      std::vector<std::vector<Tag>> predicted;
      for (const auto& s : input.sentences) {
        predicted.push_back(TagWithCrf(model, extractor, s.tokens));
        WriteConllPrediction(out, s.tokens, predicted.back());
      }
      if (!report_path.empty()) {
        std::ofstream(report_path) << ReportJson(Evaluate(predicted, input)) << '\n';
      }
    } else if (*crf_curve) {
      auto dicts = LoadDictionaries(dict_specs);
      std::optional<EmbeddingTable> word_emb, phrase_emb;
      if (!word_emb_path.empty()) word_emb = EmbeddingTable::Load(word_emb_path);
      if (!emb_path.empty()) phrase_emb = EmbeddingTable::Load(emb_path);
      std::map<std::string, const Dictionary*> named;
      for (const auto& [name, d] : dicts) named[name] = &d;
      auto variants = StandardVariants(named, word_emb ? &*word_emb : nullptr,
                                       phrase_emb ? &*phrase_emb : nullptr);
      LearningCurveOptions opts;
      for (double s : GridOption(sizes_text)) opts.sizes.push_back(static_cast<std::size_t>(s));
      opts.lambdas = GridOption(lambda_grid);
      GoldCorpus dev;
      if (!dev_path.empty()) dev = GoldCorpus::LoadConll(dev_path);
      const auto points = RunLearningCurve(GoldCorpus::LoadConll(data_path), dev,
                                           GoldCorpus::LoadConll(test_path), variants, opts);
      std::cout << FormatCurveTable(points);
      if (!out_path.empty()) WriteCurveTsv(points, out_path);
    } else if (*run_cmd) {
      PipelineConfig cfg = PipelineConfig::Load(config_path);
      if (!stages_text.empty()) run_opts.stages = ParseStages(stages_text);
      RunManifest m = RunPipeline(cfg, run_opts);
      for (const auto& s : m.stages) {
        std::cout << s.name << (s.cached ? "\tcached" : "\tran") << '\t' << s.seconds << "s\n";
      }
    } else if (*validate_cmd) {
      PipelineConfig cfg = PipelineConfig::Load(config_path);
      std::cout << cfg.ToJson() << '\n';
    } else if (*synth_cmd) {
      WriteSynthetic(GenerateSynthetic(syn), out_path);
      spdlog::info("wrote synthetic benchmark to {}", out_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
