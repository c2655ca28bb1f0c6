#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forge/config.h"
#include "forge/error.h"

namespace forge {

inline constexpr std::string_view kToolVersion = "forge 0.1.0";

enum class Stage { kExtract, kViews, kCca, kClassify, kCotrain, kReport, kCrf };

std::string_view StageName(Stage stage);
Stage ParseStage(std::string_view name);
// Comma-separated stage names, returned in dependency order.
std::vector<Stage> ParseStages(std::string_view list);
// Every stage the config enables (crf only with crf.train).
std::vector<Stage> DefaultStages(const PipelineConfig& config);

// Failure inside one stage; what() is prefixed with "[stage]".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct GridPoint {
  std::size_t k = 0;   // 0 when the grid has no dimension axis
  double param = 0.0;  // C, lambda or theta
  double f1 = 0.0;
};

// Highest dev F1; ties go to the smaller k, then the smaller param.
GridPoint ModelSelect(const std::vector<GridPoint>& points);

struct StageRecord {
  std::string name;
  std::string key;  // hash of parameters and input hashes
  bool cached = false;
  double seconds = 0.0;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path relative to out -> sha256
  std::string details;                         // JSON object
};

struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;

  const StageRecord* Find(std::string_view stage) const;
  std::string ToJson() const;
  static RunManifest FromJson(const std::string& text);
  static RunManifest Load(const std::filesystem::path& path);
};

struct RunOptions {
  std::vector<Stage> stages;  // empty: DefaultStages(config)
  std::size_t jobs = 1;       // parallel classify grid points
  bool force = false;         // ignore cached results
};

// Runs the requested stages in dependency order, skipping those whose key
// and recorded outputs are unchanged, and writes <out>/manifest.json. A
// failing stage leaves its partial outputs under <out>/quarantine/<stage>.
RunManifest RunPipeline(const PipelineConfig& config, const RunOptions& options = {});

}  // namespace forge
