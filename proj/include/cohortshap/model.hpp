#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "cohortshap/dataset.hpp"

namespace cohortshap {

// Row-major matrix of query points, one per row.
class PointMatrix {
 public:
  explicit PointMatrix(std::size_t cols = 0) : cols_(cols) {}
  PointMatrix(std::size_t rows, std::size_t cols)
      : cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return cols_ ? data_.size() / cols_ : 0; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  void append(std::span<const double> point) {
    data_.insert(data_.end(), point.begin(), point.end());
  }
  void reserve(std::size_t rows) { data_.reserve(rows * cols_); }
  std::span<const double> data() const { return data_; }

  static PointMatrix from_dataset(const Dataset& ds);

 private:
  std::size_t cols_;
  std::vector<double> data_;
};

// Black-box predictor f. Implementations must be deterministic and safe to
// call from several threads.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::string describe() const = 0;

 protected:
  friend std::vector<double> predict(const Model&, const PointMatrix&);
  virtual std::vector<double> do_predict(const PointMatrix& points) const = 0;
};

// One prediction per row. Checks the column count and rejects non-finite
// outputs; throws ModelError.
std::vector<double> predict(const Model& model, const PointMatrix& points);
double predict_one(const Model& model, std::span<const double> point);

class LinearModel : public Model {
 public:
  LinearModel(std::vector<double> coefficients, double intercept);

  std::size_t dimension() const override { return coefficients_.size(); }
  std::string describe() const override;
  const std::vector<double>& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

 protected:
  std::vector<double> do_predict(const PointMatrix& points) const override;

 private:
  std::vector<double> coefficients_;
  double intercept_;
};

// Probability 1 / (1 + exp(-(b0 + b.x))).
class LogisticModel : public Model {
 public:
  LogisticModel(std::vector<double> coefficients, double intercept);

  std::size_t dimension() const override { return coefficients_.size(); }
  std::string describe() const override;
  const std::vector<double>& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

 protected:
  std::vector<double> do_predict(const PointMatrix& points) const override;

 private:
  std::vector<double> coefficients_;
  double intercept_;
};

// Predictions from a child process. Each call writes the points as CSV
// rows (d shortest round-trip decimals, newline terminated) to the
// command's standard input, closes it, and reads one decimal per line back
// in the same order. A nonzero exit status or a count mismatch is an error.
//
// Calls are serialized. With workers > 1 one batch is split into
// contiguous chunks served by that many concurrent processes.
class ExternalCommandModel : public Model {
 public:
  ExternalCommandModel(std::string command, std::size_t dimension,
                       std::size_t workers = 1);

  std::size_t dimension() const override { return dimension_; }
  std::string describe() const override;
  const std::string& command() const { return command_; }

 protected:
  std::vector<double> do_predict(const PointMatrix& points) const override;

 private:
  std::vector<double> run_chunk(const PointMatrix& points, std::size_t begin,
                                std::size_t end) const;

  std::string command_;
  std::size_t dimension_;
  std::size_t workers_;
  mutable std::mutex mutex_;
};

struct LogisticFitOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;
};

// Maximum likelihood by iteratively reweighted least squares on the raw
// column values (interned codes for categorical columns). Converged when the
// largest coefficient change falls below `tolerance`. Throws ModelError on
// constant labels, perfect separation or hitting the iteration cap.
LogisticModel fit_logistic(const Dataset& ds, std::span<const double> labels,
                           LogisticFitOptions options = {});

// Ordinary least squares. Columns listed in `excluded` are left out of the
// fit and receive a zero coefficient, so the model ignores them.
LinearModel fit_linear(const Dataset& ds, std::span<const double> response,
                       const std::vector<std::size_t>& excluded = {});

}  // namespace cohortshap
