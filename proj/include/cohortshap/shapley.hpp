#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cohortshap/games.hpp"

namespace cohortshap {

struct Attribution {
  std::vector<double> phi;
  double total = 0.0;  // val(1:d)
  Method method = Method::table;
  std::optional<std::size_t> target;
  std::optional<std::vector<double>> std_error;  // Monte Carlo only
  std::optional<std::size_t> permutations;

  // |sum(phi) - total| / max(1, |total|), with sum(phi) summed exactly.
  double efficiency_gap() const;
};

inline constexpr int kDefaultExactCap = 20;

// Exact Shapley values from all 2^d coalition values. Refuses d > cap.
Attribution shapley_exact(const Game& game, int cap = kDefaultExactCap);

// Same, from a complete value table indexed by subset.
Attribution shapley_from_values(std::span<const double> values, int d,
                                GameInfo info = {});

// Decides, for the increment val(u + j) - val(u), which of two parts it
// belongs to (true = first part).
using IncrementClassifier = std::function<bool(Subset u, int j)>;

struct PartitionedAttribution {
  Attribution full;
  std::vector<double> selected;  // increments classified true
  std::vector<double> rest;      // the others; selected + rest == full.phi
};

// Exact Shapley values with every weighted increment routed to one of two
// parts. Each part is an exactly rounded sum of its terms, then both are
// moved by at most a few ulps (see balance_parts) so that
// selected[j] + rest[j] reproduces full.phi[j] in floating point.
PartitionedAttribution shapley_exact_partitioned(std::span<const double> values,
                                                 int d,
                                                 const IncrementClassifier& classify,
                                                 GameInfo info = {});

// Moves `rest` (and if needed `part`) by a few ulps so that part + rest ==
// total in floating point. Returns false, with rest = total - part, when no
// nearby pair exists; that needs the parts to cancel far below the
// precision of either.
bool balance_parts(double total, double& part, double& rest);

// max(1000, ceil(50 d ln d))
std::size_t default_permutations(int d);

// Permutation Monte Carlo. Permutation k is drawn from a stream seeded by
// (seed, k), and permutations are reduced in fixed blocks in index order,
// so results are bit-identical for any worker count. std_error is the
// sample standard deviation of the per-permutation increments over sqrt(m).
Attribution shapley_permutation(const Game& game, std::size_t m,
                                std::uint64_t seed);

PartitionedAttribution shapley_permutation_partitioned(
    const Game& game, std::size_t m, std::uint64_t seed,
    const IncrementClassifier& classify);

// The order of features in permutation k of a run seeded with `seed`.
std::vector<int> sampled_permutation(int d, std::uint64_t seed, std::size_t k);

enum class EngineKind { exact, mc };

struct EngineConfig {
  EngineKind kind = EngineKind::exact;
  std::size_t permutations = 0;  // 0 selects default_permutations(d)
  std::uint64_t seed = 0;
  int exact_cap = kDefaultExactCap;
};

Attribution compute_shapley(const Game& game, const EngineConfig& engine);

// w(s) = 1 / (d C(d-1, s)) for s = 0..d-1.
std::vector<double> shapley_weight_table(int d);

// C(n, k) as a double; exact whenever the result fits in 53 bits.
double binomial(int n, int k);

// sum_{r=s-1}^{d-1} C(r, s-1) == C(d, s), in exact integer arithmetic.
bool hockey_stick_holds(int d, int s);

}  // namespace cohortshap
