#include "cohortshap/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "cohortshap/error.hpp"
#include "cohortshap/format.hpp"

namespace cohortshap {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_nonnegative(double v, const std::string& column) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DataError("similarity for column '" + column +
                    "': threshold must be a finite value >= 0");
  }
}

ResolvedRule resolve(const SimilarityRule& rule, const Dataset& ds,
                     std::size_t j) {
  const auto& col = ds.column_schema(j);
  const bool categorical = col.kind == ColumnKind::categorical;
  if (categorical && !std::holds_alternative<IdentityRule>(rule)) {
    throw DataError("similarity for categorical column '" + col.name +
                    "' must be identity");
  }
  return std::visit(
      overloaded{
          [](const IdentityRule&) { return ResolvedRule{false, 0.0}; },
          [&](const AbsoluteThreshold& r) {
            check_nonnegative(r.delta, col.name);
            return ResolvedRule{false, r.delta};
          },
          [&](const RangeFraction& r) {
            check_nonnegative(r.fraction, col.name);
            if (!(r.lo_q >= 0.0 && r.hi_q <= 1.0 && r.lo_q < r.hi_q)) {
              throw DataError("similarity for column '" + col.name +
                              "': need 0 <= lo_q < hi_q <= 1");
            }
            const double span = quantile(ds, j, r.hi_q) - quantile(ds, j, r.lo_q);
            return ResolvedRule{false, r.fraction * span};
          },
          [&](const RelativeThreshold& r) {
            check_nonnegative(r.delta, col.name);
            return ResolvedRule{true, r.delta};
          },
      },
      rule);
}

}  // namespace

std::string describe(const SimilarityRule& rule) {
  return std::visit(
      overloaded{
          [](const IdentityRule&) { return std::string("identity"); },
          [](const AbsoluteThreshold& r) {
            return "abs(" + format_double(r.delta) + ")";
          },
          [](const RangeFraction& r) {
            return "range_fraction(" + format_double(r.fraction) + ", q" +
                   format_double(r.lo_q) + "..q" + format_double(r.hi_q) + ")";
          },
          [](const RelativeThreshold& r) {
            return "relative(" + format_double(r.delta) + ")";
          },
      },
      rule);
}

SimilarityRule at_threshold(const SimilarityRule& rule, double threshold) {
  return std::visit(
      overloaded{
          [](const IdentityRule& r) -> SimilarityRule { return r; },
          [&](const AbsoluteThreshold&) -> SimilarityRule {
            return AbsoluteThreshold{threshold};
          },
          [&](const RangeFraction& r) -> SimilarityRule {
            return RangeFraction{threshold, r.lo_q, r.hi_q};
          },
          [&](const RelativeThreshold&) -> SimilarityRule {
            return RelativeThreshold{threshold};
          },
      },
      rule);
}

SimilarityRules::SimilarityRules(const Dataset& ds,
                                 std::vector<SimilarityRule> rules)
    : rules_(std::move(rules)) {
  if (rules_.size() != ds.cols()) {
    throw DataError("need one similarity rule per column: got " +
                    std::to_string(rules_.size()) + " for " +
                    std::to_string(ds.cols()) + " columns");
  }
  resolved_.reserve(rules_.size());
  for (std::size_t j = 0; j < rules_.size(); ++j) {
    resolved_.push_back(resolve(rules_[j], ds, j));
  }
}

SimilarityRules SimilarityRules::identity(const Dataset& ds) {
  return SimilarityRules(ds, std::vector<SimilarityRule>(ds.cols(), IdentityRule{}));
}

CohortMask SimilarityRules::column_mask(const Dataset& ds, std::size_t j,
                                        double target_value) const {
  const auto col = ds.column(j);
  const ResolvedRule& rule = resolved_[j];
  CohortMask mask = CohortMask::none(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (rule.similar(target_value, col[i])) mask.set(i);
  }
  return mask;
}

SimilarityRules SimilarityRules::at_threshold(const Dataset& ds,
                                              double threshold) const {
  std::vector<SimilarityRule> scaled;
  scaled.reserve(rules_.size());
  for (const auto& r : rules_) scaled.push_back(cohortshap::at_threshold(r, threshold));
  return SimilarityRules(ds, std::move(scaled));
}

SimilarityMatrix similarity_row(const SimilarityRules& rules, const Dataset& ds,
                                std::size_t target) {
  if (target >= ds.rows()) throw DataError("target subject out of range");
  std::vector<CohortMask> columns;
  columns.reserve(ds.cols());
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    columns.push_back(rules.column_mask(ds, j, ds.value(target, j)));
  }
  return SimilarityMatrix(target, std::move(columns));
}

SimilarityMatrix similarity_to_point(const SimilarityRules& rules,
                                     const Dataset& ds,
                                     std::span<const double> point) {
  if (point.size() != ds.cols()) {
    throw DataError("query point has " + std::to_string(point.size()) +
                    " coordinates, dataset has " + std::to_string(ds.cols()));
  }
  std::vector<CohortMask> columns;
  columns.reserve(ds.cols());
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    columns.push_back(rules.column_mask(ds, j, point[j]));
  }
  return SimilarityMatrix(std::nullopt, std::move(columns));
}

CohortMask cohort_mask(const SimilarityMatrix& z, Subset u) {
  CohortMask mask = CohortMask::all(z.subjects());
  for (std::size_t j = 0; j < z.features(); ++j) {
    if (contains(u, static_cast<int>(j))) mask.refine_in_place(z.column(j));
  }
  return mask;
}

double cohort_mean(const CohortMask& mask, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i : mask.members()) s += y[i];
  return s / static_cast<double>(mask.count());
}

SimilarityIndex::SimilarityIndex(const SimilarityRules& rules,
                                 const Dataset& ds)
    : masks_(ds.cols()), slot_(ds.cols()) {
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const auto col = ds.column(j);
    std::vector<double> distinct(col.begin(), col.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    masks_[j].reserve(distinct.size());
    for (double v : distinct) masks_[j].push_back(rules.column_mask(ds, j, v));
    slot_[j].resize(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
      slot_[j][i] = static_cast<std::size_t>(
          std::lower_bound(distinct.begin(), distinct.end(), col[i]) -
          distinct.begin());
    }
  }
}

SimilarityMatrix SimilarityIndex::row(std::size_t t) const {
  std::vector<CohortMask> columns;
  columns.reserve(masks_.size());
  for (std::size_t j = 0; j < masks_.size(); ++j) columns.push_back(mask(j, t));
  return SimilarityMatrix(t, std::move(columns));
}

}  // namespace cohortshap
