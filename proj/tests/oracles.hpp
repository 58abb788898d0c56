#pragma once

// Reference implementations used to check the engines. They are written
// directly from the definitions, favour clarity over speed and share no
// code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cohortshap/dataset.hpp"
#include "cohortshap/similarity.hpp"

namespace oracle {

using Subset = std::uint64_t;

// Average of marginal contributions over all d! orders.
inline std::vector<double> permutation_shapley(
    int d, const std::function<double(Subset)>& val) {
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::vector<long double> sum(static_cast<std::size_t>(d), 0.0L);
  long double count = 0;
  do {
    Subset u = 0;
    double prev = val(0);
    for (int j : order) {
      u |= Subset{1} << j;
      const double v = val(u);
      sum[static_cast<std::size_t>(j)] += static_cast<long double>(v) - prev;
      prev = v;
    }
    count += 1;
  } while (std::next_permutation(order.begin(), order.end()));
  std::vector<double> phi(sum.size());
  for (std::size_t j = 0; j < sum.size(); ++j) phi[j] = static_cast<double>(sum[j] / count);
  return phi;
}

inline std::vector<double> permutation_shapley(int d, const std::vector<double>& table) {
  return permutation_shapley(d, [&](Subset u) { return table[u]; });
}

// Subset formula with weights from factorials, in long double.
inline std::vector<double> subset_shapley(int d, const std::vector<double>& table) {
  auto fact = [](int k) {
    long double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  std::vector<double> phi(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    long double s = 0;
    for (Subset u = 0; u < table.size(); ++u) {
      if (u >> j & 1) continue;
      const int k = __builtin_popcountll(u);
      s += fact(k) * fact(d - k - 1) / fact(d) * (static_cast<long double>(table[u | (Subset{1} << j)]) - table[u]);
    }
    phi[static_cast<std::size_t>(j)] = static_cast<double>(s);
  }
  return phi;
}

inline bool similar(const cohortshap::SimilarityRule& rule, double delta_resolved,
                    double target, double other) {
  if (std::holds_alternative<cohortshap::IdentityRule>(rule)) return other == target;
  if (std::holds_alternative<cohortshap::RelativeThreshold>(rule)) {
    return std::abs(other - target) <= delta_resolved * std::abs(target);
  }
  return std::abs(other - target) <= delta_resolved;
}

// Tolerance of a rule on one column, resolving range fractions with a
// sort-based quantile.
inline double resolved_delta(const cohortshap::SimilarityRule& rule,
                             std::vector<double> column) {
  if (auto* a = std::get_if<cohortshap::AbsoluteThreshold>(&rule)) return a->delta;
  if (auto* r = std::get_if<cohortshap::RelativeThreshold>(&rule)) return r->delta;
  if (auto* f = std::get_if<cohortshap::RangeFraction>(&rule)) {
    std::sort(column.begin(), column.end());
    auto q = [&](double p) {
      const double h = (static_cast<double>(column.size()) - 1) * p;
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const auto hi = std::min(lo + 1, column.size() - 1);
      return column[lo] + (h - static_cast<double>(lo)) * (column[hi] - column[lo]);
    };
    return f->fraction * (q(f->hi_q) - q(f->lo_q));
  }
  return 0.0;
}

// Members of C_{t,u} by scanning every subject and column.
inline std::vector<std::size_t> cohort(const cohortshap::Dataset& ds,
                                       const std::vector<cohortshap::SimilarityRule>& rules,
                                       std::size_t t, Subset u) {
  std::vector<double> delta(ds.cols());
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const auto col = ds.column(j);
    delta[j] = resolved_delta(rules[j], {col.begin(), col.end()});
  }
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    bool in = true;
    for (std::size_t j = 0; j < ds.cols() && in; ++j) {
      if (u >> j & 1) in = similar(rules[j], delta[j], ds.value(t, j), ds.value(i, j));
    }
    if (in) members.push_back(i);
  }
  return members;
}

inline double mean_over(const std::vector<std::size_t>& members,
                        std::span<const double> y) {
  long double s = 0;
  for (auto i : members) s += y[i];
  return static_cast<double>(s / members.size());
}

// ybar_{t,u} - ybar (squared on request) for every u.
inline std::vector<double> cs_table(const cohortshap::Dataset& ds,
                                    const std::vector<cohortshap::SimilarityRule>& rules,
                                    std::size_t t, bool squared) {
  const auto y = ds.predictions();
  std::vector<std::size_t> everyone(ds.rows());
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  const double ybar = mean_over(everyone, y);
  std::vector<double> table(std::size_t{1} << ds.cols());
  for (Subset u = 1; u < table.size(); ++u) {
    const double diff = mean_over(cohort(ds, rules, t, u), y) - ybar;
    table[u] = squared ? diff * diff : diff;
  }
  return table;
}

// Full factorial on 3 binary predictors, x1 slowest, y = 2 x1 + x2.
inline cohortshap::Dataset t8() {
  std::vector<double> values;
  std::vector<double> y;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int c = 0; c < 2; ++c) {
        values.insert(values.end(), {double(a), double(b), double(c)});
        y.push_back(2.0 * a + b);
      }
    }
  }
  return cohortshap::Dataset({{"x1", cohortshap::ColumnKind::binary},
                              {"x2", cohortshap::ColumnKind::binary},
                              {"x3", cohortshap::ColumnKind::binary}},
                             values, {}, y);
}

// Random game table with val({}) = 0.
inline std::vector<double> random_table(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> t(std::size_t{1} << d);
  for (std::size_t u = 1; u < t.size(); ++u) t[u] = normal(rng);
  return t;
}

// Random dataset with small integer-valued columns so cohorts are
// non-trivial; predictions are a noisy nonlinear function.
inline cohortshap::Dataset random_dataset(std::size_t n, std::size_t d,
                                          std::mt19937_64& rng) {
  std::uniform_int_distribution<int> level(0, 4);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> values(n * d);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) {
      values[i * d + j] = level(rng) + (j % 2 ? 0.5 * noise(rng) : 0.0);
      s += (j + 1) * values[i * d + j] * (j == 0 ? values[i * d + d - 1] : 1.0);
    }
    y[i] = s + noise(rng);
  }
  std::vector<cohortshap::ColumnSchema> schema;
  for (std::size_t j = 0; j < d; ++j) {
    schema.push_back({"c" + std::to_string(j + 1), cohortshap::ColumnKind::numeric});
  }
  return cohortshap::Dataset(schema, values, {}, y);
}

inline std::vector<cohortshap::SimilarityRule> random_rules(std::size_t d,
                                                            std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<cohortshap::SimilarityRule> rules;
  for (std::size_t j = 0; j < d; ++j) {
    switch (kind(rng)) {
      case 0: rules.push_back(cohortshap::IdentityRule{}); break;
      case 1: rules.push_back(cohortshap::AbsoluteThreshold{u01(rng)}); break;
      case 2: rules.push_back(cohortshap::RangeFraction{0.3 * u01(rng), 0.05, 0.95}); break;
      default: rules.push_back(cohortshap::RelativeThreshold{0.5 * u01(rng)}); break;
    }
  }
  return rules;
}

}  // namespace oracle
