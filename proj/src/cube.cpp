#include "cohortshap/cube.hpp"

#include <cmath>

#include "cohortshap/error.hpp"
#include "cohortshap/exact_sum.hpp"

namespace cohortshap {

namespace {

constexpr int kMaxEffectsDimension = 12;

void check_cube(int d, std::size_t size) {
  if (d < 1 || d > kDefaultExactCap) {
    throw ConfigError("cube dimension must be between 1 and " +
                      std::to_string(kDefaultExactCap));
  }
  if (size != (std::size_t{1} << d)) {
    throw ConfigError("cube table has " + std::to_string(size) +
                      " values; expected 2^" + std::to_string(d) + " = " +
                      std::to_string(std::size_t{1} << d));
  }
}

void check_measure(const CubeFunction& g, const ProductMeasure& m) {
  if (m.dimension() != g.d) throw ConfigError("measure and cube dimensions differ");
}

Attribution split_by_size(const std::vector<double>& weights, int d,
                          Method method) {
  const auto du = static_cast<std::size_t>(d);
  std::vector<ExactSum> sums(du);
  ExactSum total;
  for (Subset u = 1; u < weights.size(); ++u) {
    const double share = weights[u] / cardinality(u);
    total.add(weights[u]);
    for (int j = 0; j < d; ++j) {
      if (contains(u, j)) sums[static_cast<std::size_t>(j)].add(share);
    }
  }
  Attribution a;
  a.method = method;
  a.total = total.value();
  a.phi.resize(du);
  for (std::size_t j = 0; j < du; ++j) a.phi[j] = sums[j].value();
  return a;
}

}  // namespace

CubeFunction::CubeFunction(int d_, std::vector<double> values_)
    : d(d_), values(std::move(values_)) {
  check_cube(d, values.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("cube values must be finite");
  }
}

double CubeDecomposition::reconstruct(Subset w) const {
  ExactSum s;
  // Enumerate the subsets of w.
  for (Subset u = w;; u = (u - 1) & w) {
    s.add(components[u]);
    if (u == 0) break;
  }
  return s.value();
}

ProductMeasure::ProductMeasure(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw ConfigError("measure needs at least one coordinate");
  for (double q : p_) {
    if (!(q >= 0.0 && q <= 1.0)) {
      throw ConfigError("marginal probabilities must lie in [0, 1]");
    }
  }
}

ProductMeasure ProductMeasure::uniform(int d) {
  return ProductMeasure(std::vector<double>(static_cast<std::size_t>(d), 0.5));
}

ProductMeasure ProductMeasure::from_weights(std::span<const double> weights,
                                            int d, double tolerance) {
  check_cube(d, weights.size());
  ExactSum total;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("corner weights must be nonnegative");
    total.add(w);
  }
  if (std::abs(total.value() - 1.0) > tolerance) {
    throw ConfigError("corner weights must sum to 1");
  }
  std::vector<double> p(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    ExactSum s;
    for (Subset z = 0; z < weights.size(); ++z) {
      if (contains(z, j)) s.add(weights[z]);
    }
    p[static_cast<std::size_t>(j)] = s.value();
  }
  ProductMeasure m(std::move(p));
  for (Subset z = 0; z < weights.size(); ++z) {
    if (std::abs(m.weight(z) - weights[z]) > tolerance) {
      throw ConfigError(
          "corner weights are not a product of independent coordinates");
    }
  }
  return m;
}

double ProductMeasure::weight(Subset z) const {
  double w = 1.0;
  for (std::size_t j = 0; j < p_.size(); ++j) {
    w *= contains(z, static_cast<int>(j)) ? p_[j] : 1.0 - p_[j];
  }
  return w;
}

CubeDecomposition anchored_cube(const CubeFunction& g) {
  CubeDecomposition dec{g.d, g.values};
  auto& c = dec.components;
  for (int j = 0; j < g.d; ++j) {
    const Subset bit = singleton(j);
    for (Subset u = 0; u < c.size(); ++u) {
      if (u & bit) c[u] -= c[u ^ bit];
    }
  }
  return dec;
}

Attribution shapley_from_anchored(const CubeDecomposition& dec) {
  return split_by_size(dec.components, dec.d, Method::table);
}

AnovaDecomposition anova_cube(const CubeFunction& g, const ProductMeasure& measure) {
  check_measure(g, measure);
  std::vector<double> c = g.values;
  for (int j = 0; j < g.d; ++j) {
    const double p = measure.marginals()[static_cast<std::size_t>(j)];
    const double s = std::sqrt(p * (1.0 - p));
    const Subset bit = singleton(j);
    for (Subset u = 0; u < c.size(); ++u) {
      if (u & bit) continue;
      const double a0 = c[u];
      const double a1 = c[u | bit];
      c[u] = (1.0 - p) * a0 + p * a1;
      c[u | bit] = s * (a1 - a0);
    }
  }
  AnovaDecomposition a;
  a.d = g.d;
  a.mean = c[0];
  a.sigma2.assign(c.size(), 0.0);
  ExactSum total;
  for (Subset u = 1; u < c.size(); ++u) {
    a.sigma2[u] = c[u] * c[u];
    total.add(a.sigma2[u]);
  }
  a.total_variance = total.value();
  return a;
}

std::vector<std::vector<double>> anova_effects(const CubeFunction& g,
                                               const ProductMeasure& measure) {
  check_measure(g, measure);
  if (g.d > kMaxEffectsDimension) {
    throw ConfigError("effect functions are limited to d <= " +
                      std::to_string(kMaxEffectsDimension));
  }
  const std::size_t size = g.values.size();
  const Subset all = full_set(g.d);
  // cond[v][z] = E[g | z_v], filled from the full set downwards by averaging
  // out one coordinate at a time.
  std::vector<std::vector<double>> cond(size);
  cond[all] = g.values;
  for (Subset v = all; v-- > 0;) {
    int j = 0;
    while (contains(v, j)) ++j;
    const Subset bit = singleton(j);
    const double p = measure.marginals()[static_cast<std::size_t>(j)];
    const auto& finer = cond[v | bit];
    auto& h = cond[v];
    h.resize(size);
    for (Subset z = 0; z < size; ++z) {
      h[z] = (1.0 - p) * finer[z & ~bit] + p * finer[z | bit];
    }
  }
  // Moebius inversion over v: g_u = sum over v within u of (-1)^|u-v| E[g | z_v].
  for (int j = 0; j < g.d; ++j) {
    const Subset bit = singleton(j);
    for (Subset u = 0; u < size; ++u) {
      if (!(u & bit)) continue;
      auto& hu = cond[u];
      const auto& lower = cond[u ^ bit];
      for (Subset z = 0; z < size; ++z) hu[z] -= lower[z];
    }
  }
  return cond;
}

double cube_mean(const CubeFunction& g, const ProductMeasure& measure) {
  check_measure(g, measure);
  ExactSum s;
  for (Subset z = 0; z < g.values.size(); ++z) {
    s.add(measure.weight(z) * g.values[z]);
  }
  return s.value();
}

double cube_variance(const CubeFunction& g, const ProductMeasure& measure) {
  const double mu = cube_mean(g, measure);
  ExactSum s;
  for (Subset z = 0; z < g.values.size(); ++z) {
    const double diff = g.values[z] - mu;
    s.add(measure.weight(z) * diff * diff);
  }
  return s.value();
}

Attribution shapley_effects_independent(const AnovaDecomposition& a) {
  auto out = split_by_size(a.sigma2, a.d, Method::var);
  out.total = a.total_variance;
  return out;
}

}  // namespace cohortshap
