#pragma once

#include <span>
#include <vector>

#include "cohortshap/shapley.hpp"
#include "cohortshap/subset.hpp"

namespace cohortshap {

// g on the corners of {0,1}^d; values[u] = g(e_u), where e_u has ones
// exactly at the coordinates in u.
struct CubeFunction {
  CubeFunction(int d, std::vector<double> values);

  int d;
  std::vector<double> values;
};

// Anchored decomposition with anchor 0: components[u] is the u-term
// evaluated at the all-ones corner, i.e. the interaction of the features in
// u. The term itself vanishes at any corner missing a coordinate of u.
struct CubeDecomposition {
  int d = 0;
  std::vector<double> components;

  // sum over u within w of components[u]; reproduces g(e_w).
  double reconstruct(Subset w) const;
  // The u-term evaluated at corner e_w.
  double term_at(Subset u, Subset w) const {
    return (u & ~w) == 0 ? components[u] : 0.0;
  }
};

// Independent Bernoulli(p_j) coordinates.
class ProductMeasure {
 public:
  explicit ProductMeasure(std::vector<double> p);
  static ProductMeasure uniform(int d);
  // Recovers the marginals from 2^d corner probabilities and rejects weights
  // that do not factor into them.
  static ProductMeasure from_weights(std::span<const double> weights, int d,
                                     double tolerance = 1e-12);

  int dimension() const { return static_cast<int>(p_.size()); }
  const std::vector<double>& marginals() const { return p_; }
  double weight(Subset z) const;

 private:
  std::vector<double> p_;
};

struct AnovaDecomposition {
  int d = 0;
  double mean = 0.0;
  std::vector<double> sigma2;  // sigma2[0] == 0
  double total_variance = 0.0;
};

CubeDecomposition anchored_cube(const CubeFunction& g);

// phi_j = sum over u containing j of components[u] / |u|.
Attribution shapley_from_anchored(const CubeDecomposition& dec);

// Variance components under the product measure, via an orthonormal
// Fourier basis transform in d 2^(d-1) steps.
AnovaDecomposition anova_cube(const CubeFunction& g, const ProductMeasure& measure);

// The effect functions g_u themselves, built by inclusion-exclusion from
// conditional expectations: effects[u][z] = g_u(e_z). Costs 4^d; d <= 12.
std::vector<std::vector<double>> anova_effects(const CubeFunction& g,
                                               const ProductMeasure& measure);

// E[g] and Var[g] under the measure, summed directly over the corners.
double cube_mean(const CubeFunction& g, const ProductMeasure& measure);
double cube_variance(const CubeFunction& g, const ProductMeasure& measure);

// phi_j = sum over u containing j of sigma2[u] / |u|.
Attribution shapley_effects_independent(const AnovaDecomposition& a);

}  // namespace cohortshap
