#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cohortshap/aggregate.hpp"
#include "cohortshap/cube.hpp"
#include "cohortshap/error.hpp"
#include "oracles.hpp"

using namespace cohortshap;

namespace {

CubeFunction random_cube(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> v(std::size_t{1} << d);
  for (auto& x : v) x = normal(rng);
  return CubeFunction(d, v);
}

// g(z) = sum_j a_j z_j + c
CubeFunction additive(const std::vector<double>& a, double c) {
  const int d = static_cast<int>(a.size());
  std::vector<double> v(std::size_t{1} << d, c);
  for (Subset u = 0; u < v.size(); ++u) {
    for (int j = 0; j < d; ++j) {
      if (contains(u, j)) v[u] += a[static_cast<std::size_t>(j)];
    }
  }
  return CubeFunction(d, v);
}

}  // namespace

TEST(Anchored, AdditiveCubeHasOnlyMainTerms) {
  const auto dec = anchored_cube(additive({1.5, -2, 0.25}, 4));
  EXPECT_EQ(dec.components[0], 4.0);
  EXPECT_DOUBLE_EQ(dec.components[1], 1.5);
  EXPECT_DOUBLE_EQ(dec.components[2], -2.0);
  EXPECT_DOUBLE_EQ(dec.components[4], 0.25);
  for (Subset u : {3u, 5u, 6u, 7u}) EXPECT_NEAR(dec.components[u], 0.0, 1e-15);
  const auto phi = shapley_from_anchored(dec).phi;
  EXPECT_DOUBLE_EQ(phi[0], 1.5);
  EXPECT_DOUBLE_EQ(phi[1], -2.0);
  EXPECT_DOUBLE_EQ(phi[2], 0.25);
}

TEST(Anchored, ProductCube) {
  const auto dec = anchored_cube(CubeFunction(2, {0, 0, 0, 1}));
  EXPECT_EQ(dec.components, (std::vector<double>{0, 0, 0, 1}));
  const auto a = shapley_from_anchored(dec);
  EXPECT_EQ(a.phi, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(a.total, 1.0);
}

TEST(Anchored, ReconstructionAndVanishing) {
  std::mt19937_64 rng(1);
  for (int d = 1; d <= 8; ++d) {
    const auto g = random_cube(d, rng);
    const auto dec = anchored_cube(g);
    for (Subset w = 0; w < g.values.size(); ++w) {
      EXPECT_NEAR(dec.reconstruct(w), g.values[w], 1e-12);
      // Terms evaluated at e_w, by inclusion-exclusion over the corners.
      for (Subset u = 0; u < g.values.size(); ++u) {
        double direct = 0.0;
        for (Subset v = u;; v = (v - 1) & u) {
          const int sign = (cardinality(u) - cardinality(v)) % 2 ? -1 : 1;
          direct += sign * g.values[v & w];
          if (v == 0) break;
        }
        EXPECT_NEAR(direct, dec.term_at(u, w), 1e-11) << "u=" << u << " w=" << w;
      }
    }
  }
}

TEST(Anchored, ShapleyRouteMatchesExactEngine) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const int d = 1 + rep % 10;
    const auto g = random_cube(d, rng);
    std::vector<double> shifted(g.values);
    for (auto& v : shifted) v -= g.values[0];
    const auto exact = shapley_from_values(shifted, d);
    const auto anchored = shapley_from_anchored(anchored_cube(g));
    for (std::size_t j = 0; j < exact.phi.size(); ++j) {
      EXPECT_NEAR(anchored.phi[j], exact.phi[j], 1e-12);
    }
    EXPECT_NEAR(anchored.total, g.values.back() - g.values[0], 1e-12);
  }
}

TEST(Anova, UniformLinearCube) {
  const auto a = anova_cube(additive({2, 1, 0}, 0), ProductMeasure::uniform(3));
  EXPECT_DOUBLE_EQ(a.sigma2[1], 1.0);
  EXPECT_DOUBLE_EQ(a.sigma2[2], 0.25);
  for (Subset u : {0u, 3u, 4u, 5u, 6u, 7u}) EXPECT_NEAR(a.sigma2[u], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(a.mean, 1.5);
  const auto phi = shapley_effects_independent(a).phi;
  EXPECT_DOUBLE_EQ(phi[0], 1.0);
  EXPECT_DOUBLE_EQ(phi[1], 0.25);
  EXPECT_NEAR(phi[2], 0.0, 1e-15);
}

TEST(Anova, XorCube) {
  const auto a = anova_cube(CubeFunction(2, {0, 1, 1, 0}), ProductMeasure::uniform(2));
  EXPECT_NEAR(a.sigma2[1], 0.0, 1e-15);
  EXPECT_NEAR(a.sigma2[2], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(a.sigma2[3], 0.25);
  const auto phi = shapley_effects_independent(a).phi;
  EXPECT_DOUBLE_EQ(phi[0], 0.125);
  EXPECT_DOUBLE_EQ(phi[1], 0.125);
}

TEST(Anova, ConstantCube) {
  const auto a = anova_cube(CubeFunction(3, std::vector<double>(8, 2.0)),
                            ProductMeasure(std::vector<double>{0.2, 0.5, 0.9}));
  for (double s : a.sigma2) EXPECT_NEAR(s, 0.0, 1e-30);
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
}

TEST(Anova, VarianceAddsUpAndEffectsAreOrthogonal) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> p(0.05, 0.95);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 1 + rep % 6;
    const auto g = random_cube(d, rng);
    std::vector<double> marg(static_cast<std::size_t>(d));
    for (auto& m : marg) m = p(rng);
    const ProductMeasure measure(marg);
    const auto a = anova_cube(g, measure);
    EXPECT_NEAR(a.total_variance, cube_variance(g, measure), 1e-12);
    EXPECT_NEAR(a.mean, cube_mean(g, measure), 1e-12);
    const auto effects = anova_effects(g, measure);
    const std::size_t size = g.values.size();
    for (Subset u = 0; u < size; ++u) {
      for (Subset v = u; v < size; ++v) {
        double inner = 0.0;
        for (Subset z = 0; z < size; ++z) inner += measure.weight(z) * effects[u][z] * effects[v][z];
        if (u == v && u != 0) {
          EXPECT_NEAR(inner, a.sigma2[u], 1e-12);
        } else if (u != v) {
          EXPECT_LE(std::abs(inner), 1e-10);
        }
      }
    }
    // The effects add back up to g.
    for (Subset z = 0; z < size; ++z) {
      double s = 0.0;
      for (Subset u = 0; u < size; ++u) s += effects[u][z];
      EXPECT_NEAR(s, g.values[z], 1e-12);
    }
  }
}

TEST(Anova, RejectsNonProductWeights) {
  EXPECT_THROW(ProductMeasure::from_weights(std::vector<double>{0.5, 0, 0, 0.5}, 2),
               ConfigError);
  const auto m = ProductMeasure::from_weights(std::vector<double>{0.56, 0.24, 0.14, 0.06}, 2);
  EXPECT_NEAR(m.marginals()[0], 0.3, 1e-15);
  EXPECT_NEAR(m.marginals()[1], 0.2, 1e-15);
  EXPECT_THROW(ProductMeasure::from_weights(std::vector<double>{0.5, 0.5, 0.5}, 2), ConfigError);
}

TEST(Anova, MatchesVarianceShapleyOnFullFactorial) {
  const auto ds = oracle::t8();
  std::vector<double> g(8);
  for (std::size_t i = 0; i < 8; ++i) {
    Subset z = 0;
    for (int j = 0; j < 3; ++j) {
      if (ds.value(i, static_cast<std::size_t>(j)) == 1.0) z |= singleton(j);
    }
    g[z] = ds.predictions()[i];
  }
  const auto from_cube = shapley_effects_independent(
      anova_cube(CubeFunction(3, g), ProductMeasure::uniform(3)));
  const auto from_data = variance_shapley(ds, SimilarityRules::identity(ds));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(from_cube.phi[j], from_data.phi_var[j], 1e-14);
}

TEST(Cube, ValidatesTable) {
  EXPECT_THROW(CubeFunction(2, {1, 2, 3}), ConfigError);
  EXPECT_THROW(CubeFunction(0, {1}), ConfigError);
  EXPECT_THROW(CubeFunction(1, {1, NAN}), ConfigError);
}
