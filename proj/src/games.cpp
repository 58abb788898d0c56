#include "cohortshap/games.hpp"

#include <algorithm>
#include <stdexcept>

#include "cohortshap/error.hpp"
#include "cohortshap/parallel.hpp"

namespace cohortshap {

namespace {

constexpr std::size_t kTableChunk = 4096;
constexpr std::size_t kTargetBlock = 64;
// Upper bound on hybrid points per model call for all-baseline games.
constexpr std::size_t kMaxBatchPoints = std::size_t{1} << 18;

void check_dimension(int d) {
  if (d < 1) throw Error("game dimension must be at least 1");
  if (d > kMaxFeatures) {
    throw Error("game dimension " + std::to_string(d) + " exceeds " +
                std::to_string(kMaxFeatures) + " features");
  }
}

std::shared_ptr<const Model> require_model(std::shared_ptr<const Model> model,
                                           std::size_t d) {
  if (!model) throw ModelError("a model is required for this method");
  if (model->dimension() != d) {
    throw ModelError("model expects " + std::to_string(model->dimension()) +
                     " inputs but the data has " + std::to_string(d) +
                     " columns");
  }
  return model;
}

void check_target(const Dataset& ds, std::size_t t) {
  if (t >= ds.rows()) {
    throw Error("target " + std::to_string(t + 1) + " is outside 1.." +
                std::to_string(ds.rows()));
  }
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::cs: return "cs";
    case Method::cs2: return "cs2";
    case Method::bs: return "bs";
    case Method::bs2: return "bs2";
    case Method::abs: return "abs";
    case Method::abs2: return "abs2";
    case Method::var: return "var";
    case Method::table: return "table";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::cs, Method::cs2, Method::bs, Method::bs2,
                   Method::abs, Method::abs2, Method::var}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected cs, cs2, bs, bs2, abs, abs2 or var)");
}

bool is_squared(Method m) {
  return m == Method::cs2 || m == Method::bs2 || m == Method::abs2 ||
         m == Method::var;
}

Game::Game(int dimension, GameInfo info) : dimension_(dimension), info_(info) {
  check_dimension(dimension);
}

void Game::evaluate_batch(std::span<const Subset> subsets,
                          std::span<double> out) const {
  for (std::size_t k = 0; k < subsets.size(); ++k) out[k] = evaluate(subsets[k]);
}

std::vector<double> Game::value_table() const {
  if (dimension_ > kMaxTableDimension) {
    throw Error("value table for d = " + std::to_string(dimension_) +
                " is too large");
  }
  const std::size_t total = std::size_t{1} << dimension_;
  std::vector<double> values(total);
  std::vector<Subset> subsets(total);
  for (std::size_t u = 0; u < total; ++u) subsets[u] = u;
  const std::size_t chunks = (total + kTableChunk - 1) / kTableChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kTableChunk;
    const std::size_t len = std::min(kTableChunk, total - begin);
    evaluate_batch(std::span(subsets).subspan(begin, len),
                   std::span(values).subspan(begin, len));
  });
  values[0] = 0.0;
  return values;
}

TableGame::TableGame(int dimension, std::vector<double> values, GameInfo info)
    : Game(dimension, info), values_(std::move(values)) {
  if (dimension > kMaxTableDimension ||
      values_.size() != (std::size_t{1} << dimension)) {
    throw Error("value table must have 2^d entries");
  }
  if (values_[0] != 0.0) throw Error("value of the empty set must be 0");
}

CohortData::CohortData(std::span<const double> y) : summer_(y) {
  if (y.empty()) throw DataError("no rows");
  grand_mean_ = summer_.mean(CohortMask::all(y.size()));
}

std::vector<double> cohort_mean_table(const SimilarityMatrix& z,
                                      const MaskedSummer& summer) {
  const int d = static_cast<int>(z.features());
  check_dimension(d);
  if (d > Game::kMaxTableDimension) throw Error("too many features for a table");
  const std::size_t n = summer.size();
  std::vector<double> means(std::size_t{1} << d);
  // One scratch mask per depth; depth k holds the cohort of the current
  // k-element subset.
  std::vector<CohortMask> stack(static_cast<std::size_t>(d) + 1);
  stack[0] = CohortMask::all(n);
  means[0] = summer.mean(stack[0]);

  struct Frame {
    Subset u;
    int next;
    int depth;
  };
  std::vector<Frame> todo;
  todo.push_back({0, 0, 0});
  while (!todo.empty()) {
    Frame f = todo.back();
    todo.pop_back();
    const CohortMask& parent = stack[static_cast<std::size_t>(f.depth)];
    const double parent_mean = means[f.u];
    // The child is pushed last, so its whole subtree finishes before the
    // sibling frame reuses the next depth slot.
    if (f.next >= d) continue;
    const int j = f.next;
    if (j + 1 < d) todo.push_back({f.u, j + 1, f.depth});
    const Subset child = f.u | singleton(j);
    CohortMask& out = stack[static_cast<std::size_t>(f.depth) + 1];
    CohortMask::intersect(parent, z.column(static_cast<std::size_t>(j)), out);
    means[child] = out.count() == parent.count() ? parent_mean : summer.mean(out);
    todo.push_back({child, j + 1, f.depth + 1});
  }
  return means;
}

CohortGame::CohortGame(std::shared_ptr<const CohortData> data,
                       SimilarityMatrix z, bool squared)
    : Game(static_cast<int>(z.features()),
           {squared ? Method::cs2 : Method::cs, z.target()}),
      data_(std::move(data)),
      z_(std::move(z)),
      squared_(squared) {
  if (!data_ || z_.subjects() != data_->size()) {
    throw Error("similarity matrix and predictions differ in subject count");
  }
}

double CohortGame::transform(double cohort_mean) const {
  const double diff = cohort_mean - data_->grand_mean();
  return squared_ ? diff * diff : diff;
}

double CohortGame::evaluate(Subset u) const {
  if (u == 0) return 0.0;
  return transform(data_->summer().mean(cohort_mask(z_, u)));
}

std::vector<double> CohortGame::value_table() const {
  std::vector<double> values = cohort_mean_table(z_, data_->summer());
  for (double& v : values) v = transform(v);
  values[0] = 0.0;
  return values;
}

VarianceGame::VarianceGame(const Dataset& ds, const SimilarityRules& rules)
    : Game(static_cast<int>(ds.cols()), {Method::var, std::nullopt}),
      data_(std::make_shared<CohortData>(ds.predictions())),
      index_(rules, ds),
      subjects_(ds.rows()) {}

double VarianceGame::evaluate(Subset u) const {
  if (u == 0) return 0.0;
  const double ybar = data_->grand_mean();
  const std::size_t blocks = (subjects_ + kTargetBlock - 1) / kTargetBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b) {
    CohortMask mask;
    double acc = 0.0;
    const std::size_t end = std::min(subjects_, (b + 1) * kTargetBlock);
    for (std::size_t t = b * kTargetBlock; t < end; ++t) {
      mask = CohortMask::all(subjects_);
      for (int j = 0; j < dimension(); ++j) {
        if (contains(u, j)) mask.refine_in_place(index_.mask(static_cast<std::size_t>(j), t));
      }
      const double diff = data_->summer().mean(mask) - ybar;
      acc += diff * diff;
    }
    partial[b] = acc;
  });
  double sum = 0.0;
  for (double p : partial) sum += p;
  return sum / static_cast<double>(subjects_);
}

std::vector<double> VarianceGame::value_table() const {
  const int d = dimension();
  if (d > kMaxTableDimension) throw Error("too many features for a table");
  const std::size_t size = std::size_t{1} << d;
  const double ybar = data_->grand_mean();
  const std::size_t blocks = (subjects_ + kTargetBlock - 1) / kTargetBlock;
  std::vector<std::vector<double>> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> acc(size, 0.0);
    const std::size_t end = std::min(subjects_, (b + 1) * kTargetBlock);
    for (std::size_t t = b * kTargetBlock; t < end; ++t) {
      const auto means = cohort_mean_table(index_.row(t), data_->summer());
      for (std::size_t u = 1; u < size; ++u) {
        const double diff = means[u] - ybar;
        acc[u] += diff * diff;
      }
    }
    partial[b] = std::move(acc);
  });
  std::vector<double> values(size, 0.0);
  for (const auto& p : partial) {
    for (std::size_t u = 1; u < size; ++u) values[u] += p[u];
  }
  for (double& v : values) v /= static_cast<double>(subjects_);
  values[0] = 0.0;
  return values;
}

BaselinePoint mean_baseline(const Dataset& ds) { return ds.column_means(); }

std::vector<double> hybrid_point(std::span<const double> target,
                                 std::span<const double> baseline, Subset u) {
  std::vector<double> point(baseline.begin(), baseline.end());
  for (std::size_t j = 0; j < point.size(); ++j) {
    if (contains(u, static_cast<int>(j))) point[j] = target[j];
  }
  return point;
}

BaselineGame::BaselineGame(std::shared_ptr<const Model> model,
                           std::vector<double> target, BaselinePoint baseline,
                           bool squared, std::optional<std::size_t> target_index)
    : Game(static_cast<int>(target.size()),
           {squared ? Method::bs2 : Method::bs, target_index}),
      model_(require_model(std::move(model), target.size())),
      target_(std::move(target)),
      baseline_(std::move(baseline)),
      squared_(squared) {
  if (baseline_.size() != target_.size()) {
    throw ConfigError("baseline has " + std::to_string(baseline_.size()) +
                      " values but the data has " +
                      std::to_string(target_.size()) + " columns");
  }
  f_baseline_ = predict_one(*model_, baseline_);
}

double BaselineGame::evaluate(Subset u) const {
  if (u == 0) return 0.0;
  const double diff = predict_one(*model_, hybrid(u)) - f_baseline_;
  return squared_ ? diff * diff : diff;
}

void BaselineGame::evaluate_batch(std::span<const Subset> subsets,
                                  std::span<double> out) const {
  PointMatrix points(target_.size());
  points.reserve(subsets.size());
  for (Subset u : subsets) points.append(hybrid(u));
  const auto f = predict(*model_, points);
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    if (subsets[k] == 0) {
      out[k] = 0.0;
      continue;
    }
    const double diff = f[k] - f_baseline_;
    out[k] = squared_ ? diff * diff : diff;
  }
}

AllBaselineData::AllBaselineData(const Dataset& ds,
                                 std::shared_ptr<const Model> model)
    : model_(require_model(std::move(model), ds.cols())),
      rows_(PointMatrix::from_dataset(ds)) {
  f_rows_ = predict(*model_, rows_);
}

AllBaselineGame::AllBaselineGame(std::shared_ptr<const AllBaselineData> data,
                                 std::size_t target, bool squared)
    : Game(static_cast<int>(data->rows().cols()),
           {squared ? Method::abs2 : Method::abs, target}),
      data_(std::move(data)),
      squared_(squared) {
  if (target >= data_->rows().rows()) throw Error("target out of range");
  const auto row = data_->rows().row(target);
  target_.assign(row.begin(), row.end());
}

std::vector<double> AllBaselineGame::differences(Subset u) const {
  const PointMatrix& rows = data_->rows();
  PointMatrix points(rows.cols());
  points.reserve(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    points.append(hybrid_point(target_, rows.row(i), u));
  }
  auto f = predict(data_->model(), points);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] -= data_->predictions()[i];
  return f;
}

double AllBaselineGame::evaluate(Subset u) const {
  if (u == 0) return 0.0;
  double sum = 0.0;
  for (double diff : differences(u)) sum += squared_ ? diff * diff : diff;
  return sum / static_cast<double>(data_->rows().rows());
}

void AllBaselineGame::evaluate_batch(std::span<const Subset> subsets,
                                     std::span<double> out) const {
  const PointMatrix& rows = data_->rows();
  const std::size_t n = rows.rows();
  const std::size_t per_call = std::max<std::size_t>(1, kMaxBatchPoints / n);
  for (std::size_t begin = 0; begin < subsets.size(); begin += per_call) {
    const std::size_t end = std::min(subsets.size(), begin + per_call);
    PointMatrix points(rows.cols());
    points.reserve((end - begin) * n);
    for (std::size_t k = begin; k < end; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        points.append(hybrid_point(target_, rows.row(i), subsets[k]));
      }
    }
    const auto f = predict(data_->model(), points);
    for (std::size_t k = begin; k < end; ++k) {
      if (subsets[k] == 0) {
        out[k] = 0.0;
        continue;
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = f[(k - begin) * n + i] - data_->predictions()[i];
        sum += squared_ ? diff * diff : diff;
      }
      out[k] = sum / static_cast<double>(n);
    }
  }
}

CachedGame::CachedGame(const Game& inner)
    : Game(inner.dimension(), inner.info()), inner_(inner) {}

double CachedGame::evaluate(Subset u) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(u); it != cache_.end()) return it->second;
  }
  const double v = inner_.evaluate(u);
  std::lock_guard lock(mutex_);
  cache_.emplace(u, v);
  return v;
}

void CachedGame::evaluate_batch(std::span<const Subset> subsets,
                                std::span<double> out) const {
  std::vector<Subset> missing;
  std::vector<std::size_t> where;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t k = 0; k < subsets.size(); ++k) {
      if (auto it = cache_.find(subsets[k]); it != cache_.end()) {
        out[k] = it->second;
      } else {
        missing.push_back(subsets[k]);
        where.push_back(k);
      }
    }
  }
  if (missing.empty()) return;
  std::vector<double> values(missing.size());
  inner_.evaluate_batch(missing, values);
  std::lock_guard lock(mutex_);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    out[where[k]] = values[k];
    cache_.emplace(missing[k], values[k]);
  }
}

std::size_t CachedGame::cached() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

CohortGame make_cs_game(const Dataset& ds, SimilarityMatrix z, std::size_t t) {
  check_target(ds, t);
  return CohortGame(std::make_shared<CohortData>(ds.predictions()),
                    std::move(z), false);
}

CohortGame make_cs2_game(const Dataset& ds, SimilarityMatrix z, std::size_t t) {
  check_target(ds, t);
  return CohortGame(std::make_shared<CohortData>(ds.predictions()),
                    std::move(z), true);
}

BaselineGame make_bs_game(const Dataset& ds, std::size_t t,
                          BaselinePoint baseline,
                          std::shared_ptr<const Model> model) {
  check_target(ds, t);
  const auto row = ds.row(t);
  return BaselineGame(std::move(model), {row.begin(), row.end()},
                      std::move(baseline), false, t);
}

BaselineGame make_bs2_game(const Dataset& ds, std::size_t t,
                           BaselinePoint baseline,
                           std::shared_ptr<const Model> model) {
  check_target(ds, t);
  const auto row = ds.row(t);
  return BaselineGame(std::move(model), {row.begin(), row.end()},
                      std::move(baseline), true, t);
}

AllBaselineGame make_abs_game(const Dataset& ds, std::size_t t,
                              std::shared_ptr<const Model> model) {
  check_target(ds, t);
  return AllBaselineGame(std::make_shared<AllBaselineData>(ds, std::move(model)),
                         t, false);
}

AllBaselineGame make_abs2_game(const Dataset& ds, std::size_t t,
                               std::shared_ptr<const Model> model) {
  check_target(ds, t);
  return AllBaselineGame(std::make_shared<AllBaselineData>(ds, std::move(model)),
                         t, true);
}

VarianceGame make_var_game(const Dataset& ds, const SimilarityRules& rules) {
  return VarianceGame(ds, rules);
}

}  // namespace cohortshap
