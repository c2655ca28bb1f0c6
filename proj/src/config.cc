#include "forge/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "forge/text.h"

namespace forge {
namespace {

std::string JoinProblems(const std::vector<std::string>& problems) {
  std::string out = "invalid config:";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

double ParseNumber(std::string_view text) {
  std::string s = Trim(std::string(text));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("not a number: '" + s + "'");
  }
  if (used != s.size()) throw Error("not a number: '" + s + "'");
  return v;
}

const std::set<std::string>& KnownKeys() {
  static const std::set<std::string> keys = {
      "corpus.path",         "corpus.patterns",     "corpus.seeds",       "corpus.chunks",
      "eval.dev",            "eval.test",           "eval.truth",         "cca.k",
      "cca.kappa",           "cca.kappa_relative",  "cca.center",         "cca.oversample",
      "cca.power_iterations", "cca.full_whitening_max_dim", "svm.c_grid", "svm.k_grid",
      "svm.balanced",        "cotrain.m",           "cotrain.epsilon",    "cotrain.theta_grid",
      "cotrain.smoothed",    "crf.train",           "crf.features",       "crf.lambda_grid",
      "crf.sizes",           "run.out",             "run.seed"};
  return keys;
}

void Flatten(const nlohmann::json& j, const std::string& prefix,
             std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) Flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    std::vector<std::string> parts;
    for (const auto& v : j) parts.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    out[prefix] = Join(parts, ",");
  } else if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else {
    out[prefix] = j.dump();
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(JoinProblems(problems)), problems_(std::move(problems)) {}

std::vector<double> ParseGrid(std::string_view text) {
  std::string s = Trim(std::string(text));
  if (s.empty()) return {};
  std::size_t dots = s.find("..");
  if (dots == std::string::npos) {
    std::vector<double> out;
    for (const auto& part : Split(s, ',')) {
      if (!Trim(part).empty()) out.push_back(ParseNumber(part));
    }
    return out;
  }
  std::string rest = s.substr(dots + 2);
  const double lo = ParseNumber(s.substr(0, dots));
  std::vector<double> out;
  if (std::size_t colon = rest.find(':'); colon != std::string::npos) {
    const double hi = ParseNumber(rest.substr(0, colon));
    const double step = ParseNumber(rest.substr(colon + 1));
    if (!(step > 0.0)) throw Error("grid step must be positive");
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
      // Round to suppress accumulated binary noise (0.1 + 0.2 and friends).
      out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
  }
  const double hi = ParseNumber(rest);
  if (!(lo > 0.0) || !(hi >= lo)) throw Error("decade grid needs 0 < a <= b");
  const double e_lo = std::log10(lo);
  const double e_hi = std::log10(hi);
  if (std::abs(e_lo - std::round(e_lo)) > 1e-9 || std::abs(e_hi - std::round(e_hi)) > 1e-9) {
    throw Error("decade grid bounds must be powers of ten");
  }
  for (long e = std::lround(e_lo); e <= std::lround(e_hi); ++e) {
    out.push_back(std::stod("1e" + std::to_string(e)));
  }
  return out;
}

PipelineConfig PipelineConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot read " + path.string()});
  std::map<std::string, std::string> values;
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError({std::string("config: ") + e.what()});
    }
    if (!j.is_object()) throw ConfigError({"config: top level must be an object"});
    Flatten(j, "", values);
  } else {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError({std::string("config: ") + e.what()});
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) {
        values[section] = body.data();
        continue;
      }
      for (const auto& [key, value] : body) values[section + "." + key] = value.data();
    }
  }
  PipelineConfig cfg = Parse(values, std::filesystem::absolute(path).parent_path());
  cfg.source = path;
  return cfg;
}

PipelineConfig PipelineConfig::Parse(const std::map<std::string, std::string>& values,
                                     const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::vector<std::string> problems;
  for (const auto& [key, value] : values) {
    if (!KnownKeys().count(key)) problems.push_back(key + ": unknown key");
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return Trim(it->second);
  };
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  auto path = [&](const std::string& key, std::filesystem::path& dst) {
    if (auto v = get(key); v && !v->empty()) dst = resolve(*v);
  };
  auto opt_path = [&](const std::string& key, std::optional<std::filesystem::path>& dst) {
    if (auto v = get(key); v && !v->empty()) dst = resolve(*v);
  };
  auto number = [&](const std::string& key, double& dst) {
    if (auto v = get(key)) {
      try {
        dst = ParseNumber(*v);
      } catch (const Error& e) {
        problems.push_back(key + ": " + e.what());
      }
    }
  };
  auto integer = [&](const std::string& key, auto& dst) {
    if (auto v = get(key)) {
      double d = 0.0;
      try {
        d = ParseNumber(*v);
      } catch (const Error& e) {
        problems.push_back(key + ": " + e.what());
        return;
      }
      if (d < 0 || d != std::floor(d)) {
        problems.push_back(key + ": must be a non-negative integer");
        return;
      }
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(d);
    }
  };
  auto boolean = [&](const std::string& key, bool& dst) {
    if (auto v = get(key)) {
      std::string s = Utf8Lower(*v);
      if (s == "true" || s == "1" || s == "yes" || s == "on") {
        dst = true;
      } else if (s == "false" || s == "0" || s == "no" || s == "off") {
        dst = false;
      } else {
        problems.push_back(key + ": expected a boolean, got '" + *v + "'");
      }
    }
  };
  auto grid = [&](const std::string& key, std::vector<double>& dst) {
    if (auto v = get(key)) {
      try {
        dst = ParseGrid(*v);
      } catch (const Error& e) {
        problems.push_back(key + ": " + e.what());
      }
    }
  };
  auto int_grid = [&](const std::string& key, std::vector<std::size_t>& dst) {
    std::vector<double> tmp;
    if (!get(key)) return;
    std::size_t before = problems.size();
    grid(key, tmp);
    if (problems.size() != before) return;
    dst.clear();
    for (double d : tmp) {
      if (d < 1 || d != std::floor(d)) {
        problems.push_back(key + ": entries must be positive integers");
        return;
      }
      dst.push_back(static_cast<std::size_t>(d));
    }
  };

  path("corpus.path", cfg.corpus);
  path("corpus.patterns", cfg.patterns);
  path("corpus.seeds", cfg.seeds);
  opt_path("corpus.chunks", cfg.chunks);
  opt_path("eval.dev", cfg.dev);
  opt_path("eval.test", cfg.test);
  opt_path("eval.truth", cfg.truth);
  integer("cca.k", cfg.k);
  number("cca.kappa", cfg.kappa);
  boolean("cca.kappa_relative", cfg.kappa_relative);
  boolean("cca.center", cfg.center);
  integer("cca.oversample", cfg.oversample);
  integer("cca.power_iterations", cfg.power_iterations);
  integer("cca.full_whitening_max_dim", cfg.full_whitening_max_dim);
  grid("svm.c_grid", cfg.c_grid);
  int_grid("svm.k_grid", cfg.k_grid);
  boolean("svm.balanced", cfg.balanced);
  integer("cotrain.m", cfg.m);
  number("cotrain.epsilon", cfg.epsilon);
  grid("cotrain.theta_grid", cfg.theta_grid);
  boolean("cotrain.smoothed", cfg.smoothed);
  opt_path("crf.train", cfg.crf_train);
  if (auto v = get("crf.features")) cfg.crf_features = *v;
  grid("crf.lambda_grid", cfg.lambda_grid);
  int_grid("crf.sizes", cfg.crf_sizes);
  if (auto v = get("run.out"); v && !v->empty()) cfg.out = resolve(*v);
  integer("run.seed", cfg.seed);

  try {
    cfg.Validate();
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

void PipelineConfig::Validate() const {
  std::vector<std::string> problems;
  auto require_file = [&](const std::string& key, const std::filesystem::path& p) {
    if (p.empty()) {
      problems.push_back(key + ": required");
    } else if (!std::filesystem::exists(p)) {
      problems.push_back(key + ": file not found: " + p.string());
    }
  };
  auto optional_file = [&](const std::string& key, const std::optional<std::filesystem::path>& p) {
    if (p && !std::filesystem::exists(*p)) {
      problems.push_back(key + ": file not found: " + p->string());
    }
  };
  require_file("corpus.path", corpus);
  require_file("corpus.patterns", patterns);
  require_file("corpus.seeds", seeds);
  optional_file("corpus.chunks", chunks);
  optional_file("eval.dev", dev);
  optional_file("eval.test", test);
  optional_file("eval.truth", truth);
  optional_file("crf.train", crf_train);

  if (k == 0) problems.push_back("cca.k: must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) problems.push_back("cca.kappa: must be positive");
  if (c_grid.empty()) problems.push_back("svm.c_grid: empty grid");
  for (double c : c_grid) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      problems.push_back("svm.c_grid: values must be positive");
      break;
    }
  }
  if (k_grid.empty()) problems.push_back("svm.k_grid: empty grid");
  for (std::size_t kk : k_grid) {
    if (kk == 0 || kk > k) {
      problems.push_back("svm.k_grid: values must lie in 1..cca.k (" + std::to_string(k) + ")");
      break;
    }
  }
  if (m == 0) problems.push_back("cotrain.m: must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) problems.push_back("cotrain.epsilon: must lie in (0, 1]");
  if (theta_grid.empty()) problems.push_back("cotrain.theta_grid: empty grid");
  for (double t : theta_grid) {
    if (!(t > 0.0 && t <= 1.0)) {
      problems.push_back("cotrain.theta_grid: values must lie in (0, 1]");
      break;
    }
  }
  if (lambda_grid.empty()) problems.push_back("crf.lambda_grid: empty grid");
  for (double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      problems.push_back("crf.lambda_grid: values must be non-negative");
      break;
    }
  }
  if (crf_train) {
    if (crf_sizes.empty()) problems.push_back("crf.sizes: empty list");
    if (!test) problems.push_back("eval.test: required when crf.train is set");
  }
  if (!std::is_sorted(crf_sizes.begin(), crf_sizes.end()) ||
      std::adjacent_find(crf_sizes.begin(), crf_sizes.end()) != crf_sizes.end()) {
    problems.push_back("crf.sizes: must be strictly ascending");
  }
  if (out.empty()) problems.push_back("run.out: required");
  if (!problems.empty()) throw ConfigError(problems);
}

std::string PipelineConfig::ToJson() const {
  auto opt = [](const std::optional<std::filesystem::path>& p) -> nlohmann::json {
    return p ? nlohmann::json(p->string()) : nlohmann::json();
  };
  nlohmann::json j = {
      {"corpus",
       {{"path", corpus.string()},
        {"patterns", patterns.string()},
        {"seeds", seeds.string()},
        {"chunks", opt(chunks)}}},
      {"eval", {{"dev", opt(dev)}, {"test", opt(test)}, {"truth", opt(truth)}}},
      {"cca",
       {{"k", k},
        {"kappa", kappa},
        {"kappa_relative", kappa_relative},
        {"center", center},
        {"oversample", oversample},
        {"power_iterations", power_iterations},
        {"full_whitening_max_dim", full_whitening_max_dim}}},
      {"svm", {{"c_grid", c_grid}, {"k_grid", k_grid}, {"balanced", balanced}}},
      {"cotrain",
       {{"m", m}, {"epsilon", epsilon}, {"theta_grid", theta_grid}, {"smoothed", smoothed}}},
      {"crf",
       {{"train", opt(crf_train)},
        {"features", crf_features},
        {"lambda_grid", lambda_grid},
        {"sizes", crf_sizes}}},
      {"run", {{"out", out.string()}, {"seed", seed}}}};
  return j.dump(2);
}

}  // namespace forge
