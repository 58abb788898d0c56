#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cohortshap/cohort_mask.hpp"
#include "cohortshap/dataset.hpp"
#include "cohortshap/subset.hpp"

namespace cohortshap {

struct IdentityRule {};
// |x_ij - x_tj| <= delta
struct AbsoluteThreshold {
  double delta = 0.0;
};
// Absolute threshold delta = fraction * (Q(hi_q) - Q(lo_q)) of the column.
struct RangeFraction {
  double fraction = 0.1;
  double lo_q = 0.0;
  double hi_q = 1.0;
};
// |x_ij - x_tj| <= delta * |x_tj|; not symmetric in (i, t).
struct RelativeThreshold {
  double delta = 0.0;
};

using SimilarityRule = std::variant<IdentityRule, AbsoluteThreshold,
                                    RangeFraction, RelativeThreshold>;

std::string describe(const SimilarityRule& rule);

// Same rule with its tolerance replaced by `threshold` (fraction of range for
// RangeFraction, delta otherwise). Identity is unchanged.
SimilarityRule at_threshold(const SimilarityRule& rule, double threshold);

// A rule bound to a dataset column: range quantiles already evaluated.
struct ResolvedRule {
  bool relative = false;
  double delta = 0.0;

  bool similar(double target, double other) const {
    const double diff = other > target ? other - target : target - other;
    return diff <= (relative ? delta * (target < 0 ? -target : target) : delta);
  }
};

// One validated, resolved rule per column of a dataset.
class SimilarityRules {
 public:
  SimilarityRules(const Dataset& ds, std::vector<SimilarityRule> rules);

  // Identity on every column.
  static SimilarityRules identity(const Dataset& ds);

  std::size_t size() const { return resolved_.size(); }
  const ResolvedRule& operator[](std::size_t j) const { return resolved_[j]; }
  const std::vector<SimilarityRule>& rules() const { return rules_; }

  // Subjects whose column-j value is similar to `target_value`.
  CohortMask column_mask(const Dataset& ds, std::size_t j,
                         double target_value) const;

  SimilarityRules at_threshold(const Dataset& ds, double threshold) const;

 private:
  std::vector<SimilarityRule> rules_;
  std::vector<ResolvedRule> resolved_;
};

// z_tj(x_ij) for all subjects i and columns j, stored column-wise.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::optional<std::size_t> target,
                   std::vector<CohortMask> columns)
      : target_(target), columns_(std::move(columns)) {}

  std::optional<std::size_t> target() const { return target_; }
  std::size_t subjects() const { return columns_.empty() ? 0 : columns_[0].size(); }
  std::size_t features() const { return columns_.size(); }
  const CohortMask& column(std::size_t j) const { return columns_[j]; }
  bool bit(std::size_t i, std::size_t j) const { return columns_[j].contains(i); }

 private:
  std::optional<std::size_t> target_;
  std::vector<CohortMask> columns_;
};

SimilarityMatrix similarity_row(const SimilarityRules& rules, const Dataset& ds,
                                std::size_t target);

// Similarity of every subject to an arbitrary query point.
SimilarityMatrix similarity_to_point(const SimilarityRules& rules,
                                     const Dataset& ds,
                                     std::span<const double> point);

// C_{t,u}: AND of the columns in u; all subjects for u = {}.
CohortMask cohort_mask(const SimilarityMatrix& z, Subset u);

// Mean of y over the cohort.
double cohort_mean(const CohortMask& mask, std::span<const double> y);

// Column masks keyed by observed value: for every column j and row r the
// set of subjects similar to a target whose column-j value is x_rj. Shared
// across all targets, query points built from observed values, and
// threshold sweeps of the realism audit.
class SimilarityIndex {
 public:
  SimilarityIndex(const SimilarityRules& rules, const Dataset& ds);

  const CohortMask& mask(std::size_t j, std::size_t row) const {
    return masks_[j][slot_[j][row]];
  }
  std::size_t distinct(std::size_t j) const { return masks_[j].size(); }
  std::size_t features() const { return masks_.size(); }

  // Same as similarity_row for subject t.
  SimilarityMatrix row(std::size_t t) const;

 private:
  std::vector<std::vector<CohortMask>> masks_;
  std::vector<std::vector<std::size_t>> slot_;
};

}  // namespace cohortshap
