#include "cohortshap/audit.hpp"

#include <cmath>
#include <ostream>

#include "cohortshap/csv.hpp"
#include "cohortshap/error.hpp"
#include "cohortshap/exact_sum.hpp"
#include "cohortshap/format.hpp"
#include "cohortshap/parallel.hpp"
#include "cohortshap/random.hpp"

namespace cohortshap {

namespace {

// Stream tags for derive_seed so samples and splits never share a stream.
constexpr std::uint64_t kMarginalStream = 0;
constexpr std::uint64_t kHoldoutStream = 1;

// True when the AND of the masks has a member; stops early on empty.
bool witnessed(std::span<const CohortMask* const> masks, CohortMask& scratch,
               const CohortMask* restrict_to = nullptr) {
  scratch = *masks[0];
  for (std::size_t j = 1; j < masks.size() && !scratch.empty(); ++j) {
    scratch.refine_in_place(*masks[j]);
  }
  if (restrict_to && !scratch.empty()) scratch.refine_in_place(*restrict_to);
  return !scratch.empty();
}

// Realism of every hybrid of `target` with `baseline`, given the column
// masks of both points.
std::vector<char> hybrid_realism(const std::vector<CohortMask>& target_masks,
                                 const std::vector<CohortMask>& baseline_masks,
                                 int d) {
  const std::size_t size = std::size_t{1} << d;
  std::vector<char> out(size);
  std::vector<const CohortMask*> masks(static_cast<std::size_t>(d));
  CohortMask scratch;
  for (Subset u = 0; u < size; ++u) {
    for (int j = 0; j < d; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      masks[ju] = contains(u, j) ? &target_masks[ju] : &baseline_masks[ju];
    }
    out[u] = witnessed(masks, scratch) ? 1 : 0;
  }
  return out;
}

std::vector<CohortMask> point_masks(const SimilarityRules& rules,
                                    const Dataset& ds,
                                    std::span<const double> point) {
  std::vector<CohortMask> masks;
  masks.reserve(ds.cols());
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    masks.push_back(rules.column_mask(ds, j, point[j]));
  }
  return masks;
}

}  // namespace

std::vector<std::size_t> sample_marginal_rows(std::size_t n, std::size_t d,
                                              std::size_t m, std::uint64_t seed) {
  if (n == 0) throw DataError("no rows");
  std::vector<std::size_t> rows(m * d);
  Rng rng(seed);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.uniform_index(n));
  return rows;
}

PointMatrix sample_marginal_product(const Dataset& ds, std::size_t m,
                                    std::uint64_t seed) {
  if (m == 0) throw ConfigError("sample count must be positive");
  const std::size_t d = ds.cols();
  const auto rows = sample_marginal_rows(ds.rows(), d, m, seed);
  PointMatrix points(m, d);
  for (std::size_t k = 0; k < m; ++k) {
    auto p = points.row(k);
    for (std::size_t j = 0; j < d; ++j) p[j] = ds.value(rows[k * d + j], j);
  }
  return points;
}

RealismVerdict is_realistic(std::span<const double> point, const Dataset& ds,
                            const SimilarityRules& rules) {
  const auto z = similarity_to_point(rules, ds, point);
  const auto mask = cohort_mask(z, full_set(static_cast<int>(ds.cols())));
  RealismVerdict v;
  v.point.assign(point.begin(), point.end());
  v.witness = mask.first();
  v.realistic = v.witness.has_value();
  return v;
}

RealismReport realism_curve(const Dataset& ds, const SimilarityRules& base,
                            const RealismConfig& config) {
  if (config.runs < 1) throw ConfigError("realism audit needs at least one run");
  if (config.thresholds.empty()) throw ConfigError("no realism thresholds given");
  for (double f : config.fractions) {
    holdout_indices(ds.rows(), f, 0);  // validates the split size
  }
  const std::size_t n = ds.rows();
  const std::size_t d = ds.cols();
  const std::size_t m = config.samples ? config.samples : 10 * n;
  const std::size_t nt = config.thresholds.size();
  const std::size_t nf = config.fractions.size();

  std::vector<SimilarityIndex> indexes;
  indexes.reserve(nt);
  for (double t : config.thresholds) {
    indexes.emplace_back(base.at_threshold(ds, t), ds);
  }

  // rates[run][threshold][0] marginal, [1 + f] holdout fraction f
  std::vector<std::vector<std::vector<double>>> rates(
      config.runs, std::vector<std::vector<double>>(nt, std::vector<double>(1 + nf)));

  parallel_for(config.runs, [&](std::size_t run) {
    const auto sampled = sample_marginal_rows(
        n, d, m, derive_seed(config.seed, run, kMarginalStream));
    std::vector<HoldoutSplit> splits;
    std::vector<CohortMask> train_masks;
    for (std::size_t f = 0; f < nf; ++f) {
      splits.push_back(holdout_indices(
          n, config.fractions[f], derive_seed(config.seed, run, kHoldoutStream, f)));
      CohortMask train = CohortMask::none(n);
      for (std::size_t i : splits.back().train) train.set(i);
      train_masks.push_back(std::move(train));
    }
    std::vector<const CohortMask*> masks(d);
    CohortMask scratch;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const SimilarityIndex& index = indexes[ti];
      std::size_t hits = 0;
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < d; ++j) masks[j] = &index.mask(j, sampled[k * d + j]);
        if (witnessed(masks, scratch)) ++hits;
      }
      rates[run][ti][0] = static_cast<double>(hits) / static_cast<double>(m);
      for (std::size_t f = 0; f < nf; ++f) {
        std::size_t ok = 0;
        for (std::size_t r : splits[f].test) {
          for (std::size_t j = 0; j < d; ++j) masks[j] = &index.mask(j, r);
          if (witnessed(masks, scratch, &train_masks[f])) ++ok;
        }
        rates[run][ti][1 + f] =
            static_cast<double>(ok) / static_cast<double>(splits[f].test.size());
      }
    }
  });

  RealismReport report;
  report.thresholds = config.thresholds;
  report.fractions = config.fractions;
  report.runs = config.runs;
  report.samples = m;
  report.seed = config.seed;
  report.marginal_rates.assign(nt, 0.0);
  report.holdout_rates.assign(nt, std::vector<double>(nf, 0.0));
  const double runs = static_cast<double>(config.runs);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    for (std::size_t c = 0; c <= nf; ++c) {
      ExactSum s;
      for (std::size_t run = 0; run < config.runs; ++run) s.add(rates[run][ti][c]);
      const double mean = s.value() / runs;
      if (c == 0) {
        report.marginal_rates[ti] = mean;
      } else {
        report.holdout_rates[ti][c - 1] = mean;
      }
    }
  }
  return report;
}

void write_realism_csv(const RealismReport& report, std::ostream& out) {
  write_csv_row(out, {"threshold", "source", "fraction", "rate"});
  for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
    const std::string t = format_double(report.thresholds[ti]);
    write_csv_row(out, {t, "marginal", "", format_double(report.marginal_rates[ti])});
    for (std::size_t f = 0; f < report.fractions.size(); ++f) {
      write_csv_row(out, {t, "holdout", format_double(report.fractions[f]),
                          format_double(report.holdout_rates[ti][f])});
    }
  }
}

double SplitAttribution::unrealistic_share() const {
  double r = 0.0, u = 0.0;
  for (double p : phi_realistic) r += std::abs(p);
  for (double p : phi_unrealistic) u += std::abs(p);
  return r + u > 0.0 ? u / (r + u) : 0.0;
}

SplitAttribution bs_realism_split(const Dataset& ds, const BaselineGame& game,
                                  const SimilarityRules& rules,
                                  const EngineConfig& engine) {
  const int d = game.dimension();
  if (static_cast<std::size_t>(d) != ds.cols()) {
    throw Error("game and dataset differ in dimension");
  }
  const auto target_masks = point_masks(rules, ds, game.target_point());
  const auto baseline_masks = point_masks(rules, ds, game.baseline());

  PartitionedAttribution part;
  if (engine.kind == EngineKind::exact) {
    if (d > engine.exact_cap) {
      throw ConfigError("exact Shapley is limited to d <= " +
                        std::to_string(engine.exact_cap));
    }
    const auto realistic = hybrid_realism(target_masks, baseline_masks, d);
    const IncrementClassifier classify = [&](Subset u, int j) {
      return realistic[u] && realistic[u | singleton(j)];
    };
    part = shapley_exact_partitioned(game.value_table(), d, classify, game.info());
  } else {
    const auto hybrid_ok = [&](Subset u) {
      std::vector<const CohortMask*> masks(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        masks[ju] = contains(u, j) ? &target_masks[ju] : &baseline_masks[ju];
      }
      CohortMask scratch;
      return witnessed(masks, scratch);
    };
    const IncrementClassifier classify = [&](Subset u, int j) {
      return hybrid_ok(u) && hybrid_ok(u | singleton(j));
    };
    const std::size_t m = engine.permutations ? engine.permutations
                                              : default_permutations(d);
    part = shapley_permutation_partitioned(game, m, engine.seed, classify);
  }
  return {std::move(part.full), std::move(part.selected), std::move(part.rest)};
}

SplitAttribution abs_realism_split(const Dataset& ds, const AllBaselineGame& game,
                                   const SimilarityRules& rules,
                                   const EngineConfig& engine) {
  if (engine.kind != EngineKind::exact) {
    throw ConfigError("the all-baseline realism split supports the exact engine only");
  }
  const int d = game.dimension();
  if (d > engine.exact_cap) {
    throw ConfigError("exact Shapley is limited to d <= " +
                      std::to_string(engine.exact_cap));
  }
  if (static_cast<std::size_t>(d) != ds.cols()) {
    throw Error("game and dataset differ in dimension");
  }
  const bool squared = game.info().method == Method::abs2;
  const std::size_t size = std::size_t{1} << d;
  const std::size_t n = game.data().rows().rows();
  const auto du = static_cast<std::size_t>(d);

  // diffs[u][i] = f(x_{t,u}:x_{i,-u}) - f(x_i), squared for abs2.
  std::vector<std::vector<double>> diffs(size);
  parallel_for(size, [&](std::size_t u) {
    if (u == 0) {
      diffs[u].assign(n, 0.0);
      return;
    }
    diffs[u] = game.differences(u);
    if (squared) {
      for (double& v : diffs[u]) v *= v;
    }
  });

  const SimilarityIndex index(rules, ds);
  const auto target_masks = point_masks(rules, ds, game.target_point());
  // realistic[i][u]
  std::vector<std::vector<char>> realistic(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<CohortMask> baseline_masks;
    baseline_masks.reserve(du);
    for (std::size_t j = 0; j < du; ++j) baseline_masks.push_back(index.mask(j, i));
    realistic[i] = hybrid_realism(target_masks, baseline_masks, d);
  });

  const auto full = shapley_exact(game, engine.exact_cap);
  const auto w = shapley_weight_table(d);
  const double inv_n = 1.0 / static_cast<double>(n);
  SplitAttribution out{full, std::vector<double>(du), std::vector<double>(du)};
  parallel_for(du, [&](std::size_t j) {
    const Subset bit = singleton(static_cast<int>(j));
    ExactSum picked;
    for (Subset u = 0; u < size; ++u) {
      if (u & bit) continue;
      const double weight = w[static_cast<std::size_t>(cardinality(u))] * inv_n;
      for (std::size_t i = 0; i < n; ++i) {
        if (realistic[i][u] && realistic[i][u | bit]) {
          picked.add(weight * (diffs[u | bit][i] - diffs[u][i]));
        }
      }
    }
    out.phi_realistic[j] = picked.value();
    balance_parts(full.phi[j], out.phi_realistic[j], out.phi_unrealistic[j]);
  });
  return out;
}

}  // namespace cohortshap
