#include "cohortshap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "cohortshap/error.hpp"
#include "cohortshap/format.hpp"
#include "cohortshap/random.hpp"

namespace cohortshap {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric:
      return "numeric";
    case ColumnKind::categorical:
      return "categorical";
    case ColumnKind::binary:
      return "binary";
  }
  return "numeric";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "binary") return ColumnKind::binary;
  throw DataError("unknown column kind '" + std::string(text) +
                  "' (expected numeric, categorical or binary)");
}

Dataset::Dataset(std::vector<ColumnSchema> schema, std::vector<double> values,
                 std::vector<std::vector<std::string>> levels,
                 std::optional<std::vector<double>> predictions)
    : schema_(std::move(schema)),
      values_(std::move(values)),
      levels_(std::move(levels)),
      predictions_(std::move(predictions)) {
  const std::size_t d = schema_.size();
  if (d == 0) throw DataError("dataset needs at least one column");
  std::set<std::string> names;
  for (const auto& c : schema_) {
    if (!names.insert(c.name).second) {
      throw DataError("duplicate column name '" + c.name + "'");
    }
  }
  if (values_.size() % d != 0) {
    throw DataError("value count is not a multiple of the column count");
  }
  rows_ = values_.size() / d;
  if (rows_ == 0) throw DataError("no rows");
  if (levels_.empty()) levels_.resize(d);
  if (levels_.size() != d) throw DataError("levels size must equal columns");

  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = values_[i * d + j];
      if (!std::isfinite(v)) {
        throw DataError("row " + std::to_string(i + 1) + ", column '" +
                        schema_[j].name + "': non-finite value");
      }
      if (schema_[j].kind == ColumnKind::binary && v != 0.0 && v != 1.0) {
        throw DataError("row " + std::to_string(i + 1) + ", column '" +
                        schema_[j].name + "': binary value must be 0 or 1");
      }
    }
  }
  if (predictions_ && predictions_->size() != rows_) {
    throw DataError("predictions length " +
                    std::to_string(predictions_->size()) +
                    " does not match row count " + std::to_string(rows_));
  }
  if (predictions_) {
    for (double y : *predictions_) {
      if (!std::isfinite(y)) throw DataError("non-finite prediction");
    }
  }

  by_column_.resize(values_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      by_column_[j * rows_ + i] = values_[i * d + j];
    }
  }
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> names;
  names.reserve(schema_.size());
  for (const auto& c : schema_) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    if (schema_[j].name == name) return j;
  }
  return std::nullopt;
}

std::string Dataset::cell_text(std::size_t i, std::size_t j) const {
  const double v = value(i, j);
  if (!levels_[j].empty()) return levels_[j][static_cast<std::size_t>(v)];
  return format_double(v);
}

std::span<const double> Dataset::predictions() const {
  if (!predictions_) {
    throw DataError("dataset has no predictions attached");
  }
  return *predictions_;
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * cols());
  std::optional<std::vector<double>> y;
  if (predictions_) y.emplace();
  for (std::size_t i : indices) {
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (y) y->push_back((*predictions_)[i]);
  }
  return Dataset(schema_, std::move(values), levels_, std::move(y));
}

std::vector<double> Dataset::column_means() const {
  std::vector<double> means(cols());
  for (std::size_t j = 0; j < cols(); ++j) {
    auto c = column(j);
    means[j] = std::accumulate(c.begin(), c.end(), 0.0) /
               static_cast<double>(rows_);
  }
  return means;
}

namespace {

std::size_t header_index(const CsvTable& table, std::string_view name) {
  auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw DataError("missing column '" + std::string(name) + "' in header");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

[[noreturn]] void cell_error(const CsvTable& table, std::size_t r,
                             std::string_view column, const std::string& what) {
  throw DataError("line " + std::to_string(table.lines[r]) + ", column '" +
                  std::string(column) + "': " + what);
}

const std::string& cell(const CsvTable& table, std::size_t r, std::size_t c,
                        std::string_view column) {
  const auto& rec = table.records[r];
  if (rec.size() != table.header.size()) {
    throw DataError("line " + std::to_string(table.lines[r]) + ": expected " +
                    std::to_string(table.header.size()) + " fields, found " +
                    std::to_string(rec.size()));
  }
  if (rec[c].empty()) cell_error(table, r, column, "missing value");
  return rec[c];
}

// Sort labels numerically when they all parse as numbers, else lexically.
std::vector<std::string> sorted_levels(std::set<std::string> seen) {
  std::vector<std::string> levels(seen.begin(), seen.end());
  bool all_numeric = std::all_of(levels.begin(), levels.end(), [](auto& s) {
    return parse_double(s).has_value();
  });
  if (all_numeric) {
    std::stable_sort(levels.begin(), levels.end(), [](auto& a, auto& b) {
      return *parse_double(a) < *parse_double(b);
    });
  }
  return levels;
}

}  // namespace

Dataset dataset_from_table(const CsvTable& table,
                           const std::vector<ColumnSchema>& schema,
                           std::optional<std::string> prediction_column) {
  if (table.records.empty()) throw DataError("no rows");
  const std::size_t n = table.records.size();
  const std::size_t d = schema.size();
  std::vector<double> values(n * d);
  std::vector<std::vector<std::string>> levels(d);

  for (std::size_t j = 0; j < d; ++j) {
    const auto& col = schema[j];
    const std::size_t c = header_index(table, col.name);
    const bool textual = col.kind == ColumnKind::categorical ||
                         (col.kind == ColumnKind::binary &&
                          std::any_of(table.records.begin(),
                                      table.records.end(), [&](auto& rec) {
                                        return c < rec.size() &&
                                               !rec[c].empty() &&
                                               !parse_double(rec[c]);
                                      }));
    if (!textual) {
      for (std::size_t r = 0; r < n; ++r) {
        const auto& text = cell(table, r, c, col.name);
        auto v = parse_double(text);
        if (!v) cell_error(table, r, col.name, "cannot parse '" + text + "' as a number");
        if (!std::isfinite(*v)) cell_error(table, r, col.name, "non-finite value");
        if (col.kind == ColumnKind::binary && *v != 0.0 && *v != 1.0) {
          cell_error(table, r, col.name, "binary value must be 0 or 1, got '" + text + "'");
        }
        values[r * d + j] = *v;
      }
      continue;
    }
    std::set<std::string> seen;
    for (std::size_t r = 0; r < n; ++r) seen.insert(cell(table, r, c, col.name));
    levels[j] = sorted_levels(std::move(seen));
    if (col.kind == ColumnKind::binary && levels[j].size() > 2) {
      throw DataError("column '" + col.name + "': binary column has " +
                      std::to_string(levels[j].size()) + " distinct labels");
    }
    std::map<std::string, double> code;
    for (std::size_t k = 0; k < levels[j].size(); ++k) {
      code[levels[j][k]] = static_cast<double>(k);
    }
    for (std::size_t r = 0; r < n; ++r) {
      values[r * d + j] = code.at(table.records[r][c]);
    }
  }

  std::optional<std::vector<double>> y;
  if (prediction_column) y = numeric_column(table, *prediction_column);
  return Dataset(schema, std::move(values), std::move(levels), std::move(y));
}

Dataset load_csv(const std::filesystem::path& path,
                 const std::vector<ColumnSchema>& schema,
                 std::optional<std::string> prediction_column) {
  const CsvTable table = read_csv(path);
  try {
    return dataset_from_table(table, schema, std::move(prediction_column));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<double> numeric_column(const CsvTable& table,
                                   std::string_view name) {
  const std::size_t c = header_index(table, name);
  std::vector<double> out(table.records.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto& text = cell(table, r, c, name);
    auto v = parse_double(text);
    if (!v || !std::isfinite(*v)) {
      cell_error(table, r, name, "cannot parse '" + text + "' as a number");
    }
    out[r] = *v;
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path,
               std::optional<std::string> prediction_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  auto header = ds.column_names();
  const bool with_y = prediction_column && ds.has_predictions();
  if (with_y) header.push_back(*prediction_column);
  write_csv_row(out, header);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<std::string> fields;
    fields.reserve(header.size());
    for (std::size_t j = 0; j < ds.cols(); ++j) fields.push_back(ds.cell_text(i, j));
    if (with_y) fields.push_back(format_double(ds.predictions()[i]));
    write_csv_row(out, fields);
  }
}

Dataset attach_predictions(const Dataset& ds, std::vector<double> y) {
  if (y.size() != ds.rows()) {
    throw DataError("prediction vector has length " + std::to_string(y.size()) +
                    " but dataset has " + std::to_string(ds.rows()) + " rows");
  }
  std::vector<std::vector<std::string>> levels;
  for (std::size_t j = 0; j < ds.cols(); ++j) levels.push_back(ds.levels(j));
  return Dataset(ds.schema(), std::vector<double>(ds.values().begin(), ds.values().end()),
                 std::move(levels), std::move(y));
}

double quantile(std::span<const double> values, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("quantile probe must lie in [0, 1]");
  if (values.empty()) throw DataError("quantile of an empty column");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(const Dataset& ds, std::size_t column, double p) {
  if (column >= ds.cols()) throw DataError("quantile: column out of range");
  if (ds.column_schema(column).kind == ColumnKind::categorical) {
    throw DataError("quantile: column '" + ds.column_schema(column).name +
                    "' is categorical");
  }
  return quantile(ds.column(column), p);
}

HoldoutSplit holdout_indices(std::size_t n, double fraction,
                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DataError("holdout fraction must lie in (0, 1)");
  }
  const auto test_size =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (test_size < 1 || test_size >= n) {
    throw DataError("holdout fraction leaves an empty train or test split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  HoldoutSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction,
                                          std::uint64_t seed) {
  auto split = holdout_indices(ds.rows(), fraction, seed);
  return {ds.select_rows(split.train), ds.select_rows(split.test)};
}

}  // namespace cohortshap
