#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cohortshap/cli/config.hpp"
#include "cohortshap/dataset.hpp"
#include "cohortshap/model.hpp"

namespace cohortshap::cli {

// Data, model and predictions wired from a config.
struct Workspace {
  CsvTable table;
  std::unique_ptr<Dataset> data;
  std::shared_ptr<const Model> model;
};

// Columns from the config's schema, or every header column except those
// feeding predictions or model fitting (numeric when all cells parse).
std::vector<ColumnSchema> resolve_schema(const RunConfig& config,
                                         const CsvTable& table);

// Loads the data, builds or fits the model and attaches predictions when a
// source is configured (or a model exists).
Workspace load_workspace(const RunConfig& config);

int cmd_local(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_global(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_audit(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_cube(const RunConfig& config, std::ostream& out, std::ostream& log);

// Entry point. Exit status: 0 success, 2 invalid configuration or usage,
// 1 failure while computing.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& log);

}  // namespace cohortshap::cli
