#include "cohortshap/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cohortshap/error.hpp"
#include "cohortshap/exact_sum.hpp"
#include "cohortshap/parallel.hpp"
#include "cohortshap/random.hpp"

namespace cohortshap {

namespace {

constexpr std::size_t kPermutationBlock = 64;

std::optional<std::uint64_t> binomial_exact(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return static_cast<std::uint64_t>(r);
}

// Running moments of one feature's increments within a block.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double n = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * (o.count / n);
    m2 += o.m2 + delta * delta * (count * o.count / n);
    count = n;
  }
};

struct BlockResult {
  std::vector<ExactSum> all;
  std::vector<ExactSum> selected;
  std::vector<Moments> moments;
};

void check_permutations(std::size_t m) {
  if (m < 2) throw ConfigError("at least 2 permutations are required");
}

PartitionedAttribution run_permutations(const Game& game, std::size_t m,
                                        std::uint64_t seed,
                                        const IncrementClassifier* classify) {
  check_permutations(m);
  const int d = game.dimension();
  const auto du = static_cast<std::size_t>(d);
  const std::size_t blocks = (m + kPermutationBlock - 1) / kPermutationBlock;
  std::vector<BlockResult> results(blocks);

  parallel_for(blocks, [&](std::size_t b) {
    BlockResult r{std::vector<ExactSum>(du), std::vector<ExactSum>(du),
                  std::vector<Moments>(du)};
    std::vector<Subset> prefixes(du);
    std::vector<double> values(du);
    const std::size_t end = std::min(m, (b + 1) * kPermutationBlock);
    for (std::size_t k = b * kPermutationBlock; k < end; ++k) {
      const auto order = sampled_permutation(d, seed, k);
      Subset u = 0;
      for (std::size_t s = 0; s < du; ++s) {
        u |= singleton(order[s]);
        prefixes[s] = u;
      }
      game.evaluate_batch(prefixes, values);
      double prev = 0.0;
      Subset before = 0;
      for (std::size_t s = 0; s < du; ++s) {
        const int j = order[s];
        const double inc = values[s] - prev;
        const auto ju = static_cast<std::size_t>(j);
        r.all[ju].add(inc);
        r.moments[ju].add(inc);
        if (classify && (*classify)(before, j)) r.selected[ju].add(inc);
        prev = values[s];
        before = prefixes[s];
      }
    }
    results[b] = std::move(r);
  });

  std::vector<ExactSum> all(du), selected(du);
  std::vector<Moments> moments(du);
  for (const auto& r : results) {
    for (std::size_t j = 0; j < du; ++j) {
      all[j].merge(r.all[j]);
      selected[j].merge(r.selected[j]);
      moments[j].merge(r.moments[j]);
    }
  }

  PartitionedAttribution out;
  Attribution& a = out.full;
  a.method = game.info().method;
  a.target = game.info().target;
  a.total = game.evaluate(full_set(d));
  a.permutations = m;
  a.phi.resize(du);
  std::vector<double> se(du);
  out.selected.resize(du);
  out.rest.resize(du);
  const double md = static_cast<double>(m);
  for (std::size_t j = 0; j < du; ++j) {
    a.phi[j] = all[j].value() / md;
    const double var = moments[j].m2 / (md - 1.0);
    se[j] = std::sqrt(std::max(0.0, var) / md);
    out.selected[j] = selected[j].value() / md;
    balance_parts(a.phi[j], out.selected[j], out.rest[j]);
  }
  a.std_error = std::move(se);
  return out;
}

}  // namespace

double Attribution::efficiency_gap() const {
  ExactSum s;
  for (double p : phi) s.add(p);
  s.add(-total);
  return std::abs(s.value()) / std::max(1.0, std::abs(total));
}

Attribution shapley_exact(const Game& game, int cap) {
  const int d = game.dimension();
  if (d > cap) {
    throw ConfigError("exact Shapley is limited to d <= " + std::to_string(cap) +
                      " (got d = " + std::to_string(d) +
                      "); use the permutation engine");
  }
  const auto values = game.value_table();
  return shapley_from_values(values, d, game.info());
}

Attribution shapley_from_values(std::span<const double> values, int d,
                                GameInfo info) {
  auto split = shapley_exact_partitioned(values, d, nullptr, info);
  return std::move(split.full);
}

PartitionedAttribution shapley_exact_partitioned(std::span<const double> values,
                                                 int d,
                                                 const IncrementClassifier& classify,
                                                 GameInfo info) {
  if (d < 1 || d > Game::kMaxTableDimension) {
    throw Error("exact Shapley needs 1 <= d <= " +
                std::to_string(Game::kMaxTableDimension));
  }
  const std::size_t size = std::size_t{1} << d;
  if (values.size() != size) throw Error("value table must have 2^d entries");
  if (values[0] != 0.0) throw Error("value of the empty set must be 0");

  const auto w = shapley_weight_table(d);
  const auto du = static_cast<std::size_t>(d);
  PartitionedAttribution out;
  out.full.phi.resize(du);
  out.selected.assign(du, 0.0);
  out.rest.assign(du, 0.0);

  parallel_for(du, [&](std::size_t j) {
    const Subset bit = singleton(static_cast<int>(j));
    ExactSum all, picked;
    for (Subset u = 0; u < size; ++u) {
      if (u & bit) continue;
      const double term = w[static_cast<std::size_t>(cardinality(u))] *
                          (values[u | bit] - values[u]);
      all.add(term);
      if (classify && classify(u, static_cast<int>(j))) picked.add(term);
    }
    out.full.phi[j] = all.value();
    if (classify) {
      out.selected[j] = picked.value();
      balance_parts(out.full.phi[j], out.selected[j], out.rest[j]);
    } else {
      out.rest[j] = out.full.phi[j];
    }
  });

  out.full.total = values[size - 1];
  out.full.method = info.method;
  out.full.target = info.target;
  return out;
}

namespace {

// x near total - part with part + x == total, if one is within a few ulps.
std::optional<double> complement(double total, double part) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double x = total - part;
  for (int step = 0; step < 8; ++step) {
    const double sum = part + x;
    if (sum == total) return x;
    x = std::nextafter(x, sum < total ? inf : -inf);
  }
  return std::nullopt;
}

}  // namespace

bool balance_parts(double total, double& part, double& rest) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double up = part, down = part;
  for (int step = 0; step < 16; ++step) {
    for (double candidate : {up, down}) {
      if (auto x = complement(total, candidate)) {
        part = candidate;
        rest = *x;
        return true;
      }
    }
    up = std::nextafter(up, inf);
    down = std::nextafter(down, -inf);
  }
  rest = total - part;
  return false;
}

std::size_t default_permutations(int d) {
  const double m = std::ceil(50.0 * d * std::log(static_cast<double>(std::max(d, 1))));
  return std::max<std::size_t>(1000, static_cast<std::size_t>(m));
}

std::vector<int> sampled_permutation(int d, std::uint64_t seed, std::size_t k) {
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, k));
  rng.shuffle(std::span<int>(order));
  return order;
}

Attribution shapley_permutation(const Game& game, std::size_t m,
                                std::uint64_t seed) {
  return run_permutations(game, m, seed, nullptr).full;
}

PartitionedAttribution shapley_permutation_partitioned(
    const Game& game, std::size_t m, std::uint64_t seed,
    const IncrementClassifier& classify) {
  return run_permutations(game, m, seed, &classify);
}

Attribution compute_shapley(const Game& game, const EngineConfig& engine) {
  if (engine.kind == EngineKind::exact) return shapley_exact(game, engine.exact_cap);
  const std::size_t m = engine.permutations ? engine.permutations
                                            : default_permutations(game.dimension());
  return shapley_permutation(game, m, engine.seed);
}

std::vector<double> shapley_weight_table(int d) {
  if (d < 1) throw Error("weight table needs d >= 1");
  std::vector<double> w(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) {
    w[static_cast<std::size_t>(s)] = 1.0 / (d * binomial(d - 1, s));
  }
  return w;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (auto exact = binomial_exact(n, k)) return static_cast<double>(*exact);
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0));
}

bool hockey_stick_holds(int d, int s) {
  if (s < 1 || s > d) throw Error("hockey-stick check needs 1 <= s <= d");
  unsigned __int128 sum = 0;
  for (int r = s - 1; r <= d - 1; ++r) {
    auto c = binomial_exact(r, s - 1);
    if (!c) throw Error("binomial coefficient overflow");
    sum += *c;
  }
  auto rhs = binomial_exact(d, s);
  if (!rhs) throw Error("binomial coefficient overflow");
  return sum == *rhs;
}

}  // namespace cohortshap
