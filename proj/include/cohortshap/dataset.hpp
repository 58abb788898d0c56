#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cohortshap/csv.hpp"

namespace cohortshap {

enum class ColumnKind { numeric, categorical, binary };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

// Typed n x d predictor table plus optional per-row predictions y_i = f(x_i).
//
// Categorical columns (and binary columns given as two text labels) are
// interned to integer codes 0..k-1 following the sorted order of their
// labels, so codes do not depend on row order. Immutable once built.
class Dataset {
 public:
  // `values` is row-major n*d. `levels[j]` holds the labels of an interned
  // column j and is empty for columns stored as plain numbers.
  Dataset(std::vector<ColumnSchema> schema, std::vector<double> values,
          std::vector<std::vector<std::string>> levels = {},
          std::optional<std::vector<double>> predictions = std::nullopt);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return schema_.size(); }

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const ColumnSchema& column_schema(std::size_t j) const { return schema_[j]; }
  std::vector<std::string> column_names() const;
  std::optional<std::size_t> find_column(std::string_view name) const;

  double value(std::size_t i, std::size_t j) const {
    return values_[i * cols() + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols(), cols()};
  }
  std::span<const double> column(std::size_t j) const {
    return {by_column_.data() + j * rows_, rows_};
  }
  std::span<const double> values() const { return values_; }
  const std::vector<std::string>& levels(std::size_t j) const {
    return levels_[j];
  }
  // Text form of a cell: the label for interned columns, else the number.
  std::string cell_text(std::size_t i, std::size_t j) const;

  bool has_predictions() const { return predictions_.has_value(); }
  // Throws DataError when no predictions are attached.
  std::span<const double> predictions() const;

  // Rows in the given order, keeping schema, levels and predictions.
  Dataset select_rows(std::span<const std::size_t> indices) const;

  // Column means (1/n) sum_i x_i.
  std::vector<double> column_means() const;

 private:
  std::vector<ColumnSchema> schema_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
  std::vector<double> by_column_;
  std::vector<std::vector<std::string>> levels_;
  std::optional<std::vector<double>> predictions_;
};

// Builds a dataset from the schema columns of a parsed table. Columns not in
// the schema are ignored. When `prediction_column` names a column its values
// become the predictions.
Dataset dataset_from_table(const CsvTable& table,
                           const std::vector<ColumnSchema>& schema,
                           std::optional<std::string> prediction_column = {});

Dataset load_csv(const std::filesystem::path& path,
                 const std::vector<ColumnSchema>& schema,
                 std::optional<std::string> prediction_column = {});

// Numeric values of one column of a table (labels, responses).
std::vector<double> numeric_column(const CsvTable& table,
                                   std::string_view name);

// Writes header + rows; predictions are appended under `prediction_column`
// when given and attached.
void write_csv(const Dataset& ds, const std::filesystem::path& path,
               std::optional<std::string> prediction_column = {});

Dataset attach_predictions(const Dataset& ds, std::vector<double> y);

// Order-statistic quantile with linear interpolation between neighbours:
// h = (n-1)p, q = x_(floor h) + (h - floor h)(x_(floor h + 1) - x_(floor h)).
double quantile(const Dataset& ds, std::size_t column, double p);
double quantile(std::span<const double> values, double p);

struct HoldoutSplit {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Uniform random partition with |test| = round(fraction * n).
HoldoutSplit holdout_indices(std::size_t n, double fraction,
                             std::uint64_t seed);

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction,
                                          std::uint64_t seed);

}  // namespace cohortshap
