#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forge/svm.h"
#include "forge/tagger_eval.h"

namespace forge {

// Planted-entity benchmark. Entity and distractor names are pseudo-words;
// every phrase occurs at least once in "the X virus", and otherwise in
// templates typical of its class, except for a `noise` share of mentions
// placed in the other class's templates. Phrase frequencies are Zipfian.
struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::size_t sentences = 20000;
  std::size_t entities = 60;
  std::size_t distractors = 240;
  double noise = 0.1;
  double generic_share = 0.25;  // mentions in the extraction pattern
  double filler_share = 0.1;    // sentences without a mention
  double zipf_exponent = 0.9;
  std::size_t min_mentions = 4;
  std::size_t sentences_per_document = 10;
  std::size_t train_sentences = 400;
  std::size_t dev_sentences = 400;
  std::size_t test_sentences = 800;
  std::size_t seeds_per_class = 10;
};

struct SyntheticData {
  std::vector<std::string> documents;  // corpus, one document per line
  std::vector<std::string> entities;
  std::vector<std::string> distractors;
  SeedSet seeds;  // most frequent entities and distractors
  GoldCorpus train;
  GoldCorpus dev;
  GoldCorpus test;
  std::string patterns;  // pattern file text
};

SyntheticData GenerateSynthetic(const SyntheticOptions& options = {});

// Writes corpus.txt, patterns.tsv, seeds.txt, truth.txt, distractors.txt,
// train.conll, dev.conll, test.conll and pipeline.cfg (out = <dir>/out).
void WriteSynthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace forge
