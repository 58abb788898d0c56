#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cohortshap/cohort_mask.hpp"
#include "cohortshap/dataset.hpp"
#include "cohortshap/model.hpp"
#include "cohortshap/similarity.hpp"
#include "cohortshap/subset.hpp"

namespace cohortshap {

enum class Method { cs, cs2, bs, bs2, abs, abs2, var, table };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);
bool is_squared(Method m);

struct GameInfo {
  Method method = Method::table;
  std::optional<std::size_t> target;  // 0-based subject for local games
};

// Value function val(u) over subsets of 1:d with val({}) = 0.
// Evaluation is pure: the same u always yields the same bits.
class Game {
 public:
  virtual ~Game() = default;

  int dimension() const { return dimension_; }
  const GameInfo& info() const { return info_; }

  virtual double evaluate(Subset u) const = 0;

  // Default loops over evaluate(); model-backed games override it to make
  // one batched model call.
  virtual void evaluate_batch(std::span<const Subset> subsets,
                              std::span<double> out) const;

  // All 2^d values indexed by subset. Throws for d > kMaxTableDimension.
  virtual std::vector<double> value_table() const;

  static constexpr int kMaxTableDimension = 26;

 protected:
  Game(int dimension, GameInfo info);

 private:
  int dimension_;
  GameInfo info_;
};

// A game given by its complete table of 2^d values.
class TableGame : public Game {
 public:
  TableGame(int dimension, std::vector<double> values,
            GameInfo info = {Method::table, std::nullopt});

  double evaluate(Subset u) const override { return values_[u]; }
  std::vector<double> value_table() const override { return values_; }

 private:
  std::vector<double> values_;
};

// Predictions shared by every cohort game over one dataset.
class CohortData {
 public:
  explicit CohortData(std::span<const double> y);

  const MaskedSummer& summer() const { return summer_; }
  double grand_mean() const { return grand_mean_; }
  std::size_t size() const { return summer_.size(); }

 private:
  MaskedSummer summer_;
  double grand_mean_;
};

// ybar_{t,u} for all 2^d subsets, by a depth-first walk of the subset
// lattice in which every cohort is its parent refined by one column.
std::vector<double> cohort_mean_table(const SimilarityMatrix& z,
                                      const MaskedSummer& summer);

// Cohort Shapley value function ybar_{t,u} - ybar, or its square.
class CohortGame : public Game {
 public:
  CohortGame(std::shared_ptr<const CohortData> data, SimilarityMatrix z,
             bool squared);

  double evaluate(Subset u) const override;
  std::vector<double> value_table() const override;

  const SimilarityMatrix& similarity() const { return z_; }

 private:
  double transform(double cohort_mean) const;

  std::shared_ptr<const CohortData> data_;
  SimilarityMatrix z_;
  bool squared_;
};

// Variance Shapley value function (1/n) sum_t (ybar_{t,u} - ybar)^2.
class VarianceGame : public Game {
 public:
  VarianceGame(const Dataset& ds, const SimilarityRules& rules);

  double evaluate(Subset u) const override;
  // Target sweep in fixed-size blocks; identical for any worker count.
  std::vector<double> value_table() const override;

 private:
  std::shared_ptr<const CohortData> data_;
  SimilarityIndex index_;
  std::size_t subjects_;
};

using BaselinePoint = std::vector<double>;

// (1/n) sum_i x_i.
BaselinePoint mean_baseline(const Dataset& ds);

// x_{t,u}:x_{b,-u}
std::vector<double> hybrid_point(std::span<const double> target,
                                 std::span<const double> baseline, Subset u);

// Baseline Shapley: f(x_{t,u}:x_{b,-u}) - f(x_b), or its square.
class BaselineGame : public Game {
 public:
  BaselineGame(std::shared_ptr<const Model> model, std::vector<double> target,
               BaselinePoint baseline, bool squared,
               std::optional<std::size_t> target_index = std::nullopt);

  double evaluate(Subset u) const override;
  void evaluate_batch(std::span<const Subset> subsets,
                      std::span<double> out) const override;

  std::vector<double> hybrid(Subset u) const {
    return hybrid_point(target_, baseline_, u);
  }
  const std::vector<double>& target_point() const { return target_; }
  const BaselinePoint& baseline() const { return baseline_; }
  double baseline_prediction() const { return f_baseline_; }

 private:
  std::shared_ptr<const Model> model_;
  std::vector<double> target_;
  BaselinePoint baseline_;
  bool squared_;
  double f_baseline_;
};

// Data shared by the all-baseline games of one dataset: rows and f(x_i).
class AllBaselineData {
 public:
  AllBaselineData(const Dataset& ds, std::shared_ptr<const Model> model);

  const PointMatrix& rows() const { return rows_; }
  const std::vector<double>& predictions() const { return f_rows_; }
  const Model& model() const { return *model_; }
  std::shared_ptr<const Model> model_ptr() const { return model_; }

 private:
  std::shared_ptr<const Model> model_;
  PointMatrix rows_;
  std::vector<double> f_rows_;
};

// All-baseline Shapley: (1/n) sum_i [f(x_{t,u}:x_{i,-u}) - f(x_i)], or the
// mean of the squared differences.
class AllBaselineGame : public Game {
 public:
  AllBaselineGame(std::shared_ptr<const AllBaselineData> data,
                  std::size_t target, bool squared);

  double evaluate(Subset u) const override;
  void evaluate_batch(std::span<const Subset> subsets,
                      std::span<double> out) const override;

  // f(x_{t,u}:x_{i,-u}) - f(x_i) for every baseline i.
  std::vector<double> differences(Subset u) const;
  const AllBaselineData& data() const { return *data_; }
  const std::vector<double>& target_point() const { return target_; }

 private:
  std::shared_ptr<const AllBaselineData> data_;
  std::vector<double> target_;
  bool squared_;
};

// Memoizes another game per subset; safe for concurrent use.
class CachedGame : public Game {
 public:
  explicit CachedGame(const Game& inner);

  double evaluate(Subset u) const override;
  void evaluate_batch(std::span<const Subset> subsets,
                      std::span<double> out) const override;
  std::size_t cached() const;

 private:
  const Game& inner_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<Subset, double> cache_;
};

CohortGame make_cs_game(const Dataset& ds, SimilarityMatrix z, std::size_t target);
CohortGame make_cs2_game(const Dataset& ds, SimilarityMatrix z, std::size_t target);
BaselineGame make_bs_game(const Dataset& ds, std::size_t target,
                          BaselinePoint baseline, std::shared_ptr<const Model> model);
BaselineGame make_bs2_game(const Dataset& ds, std::size_t target,
                           BaselinePoint baseline, std::shared_ptr<const Model> model);
AllBaselineGame make_abs_game(const Dataset& ds, std::size_t target,
                              std::shared_ptr<const Model> model);
AllBaselineGame make_abs2_game(const Dataset& ds, std::size_t target,
                               std::shared_ptr<const Model> model);
VarianceGame make_var_game(const Dataset& ds, const SimilarityRules& rules);

}  // namespace cohortshap
