#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/error.h"

namespace forge {

// Validation failure carrying one "section.key: message" line per problem.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Grid syntax: "a,b,c" lists values; "a..b" expands to the powers of ten
// from a to b; "a..b:s" steps linearly by s.
std::vector<double> ParseGrid(std::string_view text);

struct PipelineConfig {
  std::filesystem::path source;

  // [corpus]
  std::filesystem::path corpus;
  std::filesystem::path patterns;
  std::filesystem::path seeds;
  std::optional<std::filesystem::path> chunks;

  // [eval]
  std::optional<std::filesystem::path> dev;
  std::optional<std::filesystem::path> test;
  std::optional<std::filesystem::path> truth;  // reference entity list

  // [cca]
  std::size_t k = 30;
  double kappa = 1e-4;
  bool kappa_relative = true;
  bool center = false;
  std::size_t oversample = 10;
  std::size_t power_iterations = 4;
  std::size_t full_whitening_max_dim = 2000;

  // [svm]
  std::vector<double> c_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  std::vector<std::size_t> k_grid = {10, 20, 30};
  bool balanced = false;

  // [cotrain]
  std::size_t m = 5;
  double epsilon = 0.95;
  std::vector<double> theta_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  bool smoothed = false;

  // [crf]
  std::optional<std::filesystem::path> crf_train;
  std::string crf_features = "baseline,dict";
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::vector<std::size_t> crf_sizes = {10, 50, 200};

  // [run]
  std::filesystem::path out = "out";
  std::uint64_t seed = 13;

  // INI (sections with key = value) or, for *.json, a JSON object of
  // sections. Relative paths resolve against the config file's directory.
  // Throws ConfigError listing every problem found.
  static PipelineConfig Load(const std::filesystem::path& path);
  static PipelineConfig Parse(const std::map<std::string, std::string>& values,
                              const std::filesystem::path& base_dir);

  void Validate() const;
  // Canonical JSON form; stable across runs.
  std::string ToJson() const;
};

}  // namespace forge
