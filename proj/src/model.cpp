#include "cohortshap/model.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include <Eigen/Dense>

#include "cohortshap/error.hpp"
#include "cohortshap/format.hpp"
#include "cohortshap/subprocess.hpp"

namespace cohortshap {

PointMatrix PointMatrix::from_dataset(const Dataset& ds) {
  PointMatrix m(ds.cols());
  m.data_.assign(ds.values().begin(), ds.values().end());
  return m;
}

std::vector<double> predict(const Model& model, const PointMatrix& points) {
  if (points.rows() > 0 && points.cols() != model.dimension()) {
    throw ModelError("model expects " + std::to_string(model.dimension()) +
                     " columns, got " + std::to_string(points.cols()));
  }
  std::vector<double> y = model.do_predict(points);
  if (y.size() != points.rows()) {
    throw ModelError("model returned " + std::to_string(y.size()) +
                     " predictions for " + std::to_string(points.rows()) +
                     " points");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) {
      throw ModelError("non-finite prediction for point " + std::to_string(i + 1));
    }
  }
  return y;
}

double predict_one(const Model& model, std::span<const double> point) {
  PointMatrix m(point.size());
  m.append(point);
  return predict(model, m)[0];
}

namespace {

double linear_predictor(std::span<const double> coef, double intercept,
                        std::span<const double> x) {
  double eta = intercept;
  for (std::size_t j = 0; j < coef.size(); ++j) eta += coef[j] * x[j];
  return eta;
}

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

std::string coef_text(const std::vector<double>& coef, double intercept) {
  std::string s = "intercept=" + format_double(intercept) + " coef=[";
  for (std::size_t j = 0; j < coef.size(); ++j) {
    if (j) s += ",";
    s += format_double(coef[j]);
  }
  return s + "]";
}

}  // namespace

LinearModel::LinearModel(std::vector<double> coefficients, double intercept)
    : coefficients_(std::move(coefficients)), intercept_(intercept) {
  if (coefficients_.empty()) throw ModelError("linear model needs coefficients");
}

std::string LinearModel::describe() const {
  return "linear(" + coef_text(coefficients_, intercept_) + ")";
}

std::vector<double> LinearModel::do_predict(const PointMatrix& points) const {
  std::vector<double> y(points.rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = linear_predictor(coefficients_, intercept_, points.row(i));
  }
  return y;
}

LogisticModel::LogisticModel(std::vector<double> coefficients, double intercept)
    : coefficients_(std::move(coefficients)), intercept_(intercept) {
  if (coefficients_.empty()) throw ModelError("logistic model needs coefficients");
}

std::string LogisticModel::describe() const {
  return "logistic(" + coef_text(coefficients_, intercept_) + ")";
}

std::vector<double> LogisticModel::do_predict(const PointMatrix& points) const {
  std::vector<double> y(points.rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = sigmoid(linear_predictor(coefficients_, intercept_, points.row(i)));
  }
  return y;
}

ExternalCommandModel::ExternalCommandModel(std::string command,
                                           std::size_t dimension,
                                           std::size_t workers)
    : command_(std::move(command)),
      dimension_(dimension),
      workers_(std::max<std::size_t>(workers, 1)) {
  if (command_.empty()) throw ModelError("external model command is empty");
  if (dimension_ == 0) throw ModelError("external model dimension must be positive");
}

std::string ExternalCommandModel::describe() const {
  return "external(" + command_ + ")";
}

std::vector<double> ExternalCommandModel::run_chunk(const PointMatrix& points,
                                                    std::size_t begin,
                                                    std::size_t end) const {
  std::string request;
  for (std::size_t i = begin; i < end; ++i) {
    auto row = points.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) request.push_back(',');
      request += format_double(row[j]);
    }
    request.push_back('\n');
  }
  const CommandResult res = run_command(command_, request);
  if (res.exit_code != 0) {
    throw ModelError("external model '" + command_ + "' exited with status " +
                     std::to_string(res.exit_code) +
                     (res.err.empty() ? "" : ": " + res.err));
  }
  std::vector<double> y;
  y.reserve(end - begin);
  std::istringstream lines(res.out);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && lines.peek() == EOF) break;
    auto v = parse_double(line);
    if (!v) {
      throw ModelError("external model output line " +
                       std::to_string(y.size() + 1) + " is not a number: '" +
                       line + "'");
    }
    y.push_back(*v);
  }
  if (y.size() != end - begin) {
    throw ModelError("external model returned " + std::to_string(y.size()) +
                     " lines for " + std::to_string(end - begin) + " points");
  }
  return y;
}

std::vector<double> ExternalCommandModel::do_predict(const PointMatrix& points) const {
  std::lock_guard lock(mutex_);
  const std::size_t n = points.rows();
  if (n == 0) return {};
  const std::size_t k = std::min(workers_, n);
  if (k == 1) return run_chunk(points, 0, n);
  std::vector<std::future<std::vector<double>>> parts;
  for (std::size_t w = 0; w < k; ++w) {
    const std::size_t begin = n * w / k, end = n * (w + 1) / k;
    parts.push_back(std::async(std::launch::async, [this, &points, begin, end] {
      return run_chunk(points, begin, end);
    }));
  }
  std::vector<double> y;
  y.reserve(n);
  for (auto& p : parts) {
    auto part = p.get();
    y.insert(y.end(), part.begin(), part.end());
  }
  return y;
}

LogisticModel fit_logistic(const Dataset& ds, std::span<const double> labels,
                           LogisticFitOptions options) {
  const std::size_t n = ds.rows(), d = ds.cols();
  if (labels.size() != n) throw DataError("label vector length must equal row count");
  std::size_t ones = 0;
  for (double v : labels) {
    if (v != 0.0 && v != 1.0) throw DataError("logistic labels must be 0 or 1");
    ones += v == 1.0;
  }
  if (ones == 0 || ones == n) {
    throw ModelError("labels are constant; the intercept diverges to " +
                     std::string(ones == 0 ? "-inf" : "+inf"));
  }

  Eigen::MatrixXd x(n, d + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) x(i, j + 1) = ds.value(i, j);
    y(i) = labels[i];
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd p(n), w(n);
    double worst_residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = sigmoid(eta(i));
      w(i) = p(i) * (1.0 - p(i));
      worst_residual = std::max(worst_residual, std::abs(y(i) - p(i)));
    }
    if (worst_residual < 1e-8) {
      throw ModelError("perfect separation: fitted probabilities reproduce the labels");
    }
    const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd score = x.transpose() * (y - p);
    Eigen::LDLT<Eigen::MatrixXd> solver(info);
    if (solver.info() != Eigen::Success || !solver.isPositive()) {
      throw ModelError("logistic fit: information matrix is singular");
    }
    const Eigen::VectorXd step = solver.solve(score);
    beta += step;
    if (!beta.allFinite() || beta.cwiseAbs().maxCoeff() > 1e8) {
      throw ModelError("perfect separation: coefficients diverge");
    }
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      std::vector<double> coef(beta.data() + 1, beta.data() + d + 1);
      return LogisticModel(std::move(coef), beta(0));
    }
  }
  throw ModelError("logistic fit did not converge in " +
                   std::to_string(options.max_iterations) + " iterations");
}

LinearModel fit_linear(const Dataset& ds, std::span<const double> response,
                       const std::vector<std::size_t>& excluded) {
  const std::size_t n = ds.rows(), d = ds.cols();
  if (response.size() != n) throw DataError("response length must equal row count");
  std::vector<std::size_t> used;
  for (std::size_t j = 0; j < d; ++j) {
    if (std::find(excluded.begin(), excluded.end(), j) == excluded.end()) used.push_back(j);
  }
  Eigen::MatrixXd x(n, used.size() + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t k = 0; k < used.size(); ++k) x(i, k + 1) = ds.value(i, used[k]);
    y(i) = response[i];
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  std::vector<double> coef(d, 0.0);
  for (std::size_t k = 0; k < used.size(); ++k) coef[used[k]] = beta(k + 1);
  return LinearModel(std::move(coef), beta(0));
}

}  // namespace cohortshap
