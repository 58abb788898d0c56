#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cohortshap/dataset.hpp"
#include "cohortshap/games.hpp"
#include "cohortshap/shapley.hpp"
#include "cohortshap/similarity.hpp"

namespace cohortshap::cli {

struct LinearSpec {
  std::vector<double> coefficients;
  double intercept = 0.0;
};
struct LogisticSpec {
  std::vector<double> coefficients;
  double intercept = 0.0;
};
struct ExternalSpec {
  std::string command;
  std::size_t workers = 1;
};
// Fit a logistic regression to a 0/1 column of the data file.
struct FitLogisticSpec {
  std::string label;
  int max_iterations = 100;
  double tolerance = 1e-10;
};
// Fit least squares to a response column, leaving `exclude` out of the model.
struct FitLinearSpec {
  std::string response;
  std::vector<std::string> exclude;
};

using ModelSpec = std::variant<LinearSpec, LogisticSpec, ExternalSpec,
                               FitLogisticSpec, FitLinearSpec>;

// Where y_i comes from for the cohort methods.
struct PredictionSpec {
  enum class Source { column, file, model } source = Source::model;
  std::string column;
  std::filesystem::path file;
};

struct AuditSpec {
  std::vector<double> thresholds{0.05, 0.1, 0.2, 0.3, 0.5, 1.0};
  std::vector<double> fractions{0.1, 0.2, 0.3};
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::optional<std::map<std::string, SimilarityRule>> rules;  // audit-only rules
  std::vector<std::size_t> split_targets;  // 0-based
  Method split_method = Method::bs;
};

struct CubeSpec {
  int d = 0;
  std::vector<double> values;
  std::optional<std::vector<double>> marginals;
  std::optional<std::vector<double>> weights;
};

struct RunConfig {
  std::filesystem::path data;
  std::vector<ColumnSchema> schema;
  std::map<std::string, SimilarityRule> similarity;
  std::optional<SimilarityRule> default_rule;
  std::optional<PredictionSpec> predictions;
  std::optional<ModelSpec> model;
  std::optional<Method> method;
  std::optional<std::vector<std::size_t>> targets;  // 0-based; unset = all
  EngineConfig engine;
  std::optional<std::vector<double>> baseline;      // unset = column means
  AuditSpec audit;
  std::optional<CubeSpec> cube;
  bool per_subject = false;
  int threads = 0;
  std::optional<std::filesystem::path> out;
};

// Values given on the command line; each set field replaces the config's.
struct Overrides {
  std::optional<std::filesystem::path> data;
  std::optional<std::string> method;
  std::optional<std::string> engine;
  std::optional<std::size_t> permutations;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> targets;
};

// Relative paths are resolved against `base_dir`. Throws ConfigError with
// the offending key on any problem.
RunConfig parse_config(const nlohmann::json& j,
                       const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

void apply_overrides(RunConfig& config, const Overrides& o);

// "all", "3", "1,5,8" or "2-10"; 1-based in, 0-based out. nullopt = all.
std::optional<std::vector<std::size_t>> parse_targets(const std::string& text);

SimilarityRule parse_rule(const nlohmann::json& j, const std::string& where);

// One rule per schema column from a name-keyed map plus optional default.
std::vector<SimilarityRule> rules_for_schema(
    const std::vector<ColumnSchema>& schema,
    const std::map<std::string, SimilarityRule>& by_name,
    const std::optional<SimilarityRule>& fallback);

}  // namespace cohortshap::cli
