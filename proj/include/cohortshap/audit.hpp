#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cohortshap/dataset.hpp"
#include "cohortshap/games.hpp"
#include "cohortshap/model.hpp"
#include "cohortshap/shapley.hpp"
#include "cohortshap/similarity.hpp"

namespace cohortshap {

// m points whose column j is x_{I_j, j} with I_j uniform on the rows,
// independently across columns and samples.
PointMatrix sample_marginal_product(const Dataset& ds, std::size_t m,
                                    std::uint64_t seed);

// Row indices behind sample_marginal_product: entry (k, j) is I_j of
// sample k. Same stream, so the two always agree.
std::vector<std::size_t> sample_marginal_rows(std::size_t n, std::size_t d,
                                              std::size_t m, std::uint64_t seed);

struct RealismVerdict {
  std::vector<double> point;
  bool realistic = false;
  std::optional<std::size_t> witness;  // first similar subject
};

// A point is realistic when some subject is similar to it in every column,
// with the point taken as the target of the rules.
RealismVerdict is_realistic(std::span<const double> point, const Dataset& ds,
                            const SimilarityRules& rules);

struct RealismConfig {
  std::vector<double> thresholds;
  std::vector<double> fractions{0.1, 0.2, 0.3};
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  std::size_t samples = 0;  // per run; 0 selects 10 n
};

struct RealismReport {
  std::vector<double> thresholds;
  std::vector<double> fractions;
  std::vector<double> marginal_rates;              // per threshold
  std::vector<std::vector<double>> holdout_rates;  // [threshold][fraction]
  std::size_t runs = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

// Each rule is rescaled to every threshold with at_threshold. Marginal
// samples are checked against the whole dataset; holdout test rows against
// their train split. Samples and splits are shared across thresholds.
RealismReport realism_curve(const Dataset& ds, const SimilarityRules& base,
                            const RealismConfig& config);

// Header threshold,source,fraction,rate; the fraction is empty for
// marginal rows.
void write_realism_csv(const RealismReport& report, std::ostream& out);

struct SplitAttribution {
  Attribution full;
  std::vector<double> phi_realistic;
  std::vector<double> phi_unrealistic;

  // sum |phi_unrealistic| / (sum |phi_realistic| + sum |phi_unrealistic|)
  double unrealistic_share() const;
};

// Baseline Shapley with each increment val(u + j) - val(u) booked as
// realistic when both hybrid points involved are realistic.
SplitAttribution bs_realism_split(const Dataset& ds, const BaselineGame& game,
                                  const SimilarityRules& rules,
                                  const EngineConfig& engine = {});

// All-baseline Shapley split per baseline subject: the increment for
// baseline i is realistic when both of its hybrids with x_i are. Exact
// engine only.
SplitAttribution abs_realism_split(const Dataset& ds, const AllBaselineGame& game,
                                   const SimilarityRules& rules,
                                   const EngineConfig& engine = {});

}  // namespace cohortshap
