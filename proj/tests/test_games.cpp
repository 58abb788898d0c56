#include <gtest/gtest.h>

#include <random>

#include "cohortshap/error.hpp"
#include "cohortshap/games.hpp"
#include "oracles.hpp"

using namespace cohortshap;

namespace {

const Subset k1 = 0b001, k2 = 0b010, k3 = 0b100, k12 = 0b011, kAll = 0b111;

std::shared_ptr<const Model> t8_linear() {
  return std::make_shared<LinearModel>(std::vector<double>{2, 1, 0}, 0.0);
}

CohortGame t8_cs(bool squared) {
  const auto ds = oracle::t8();
  auto z = similarity_row(SimilarityRules::identity(ds), ds, 7);
  return squared ? make_cs2_game(ds, std::move(z), 7) : make_cs_game(ds, std::move(z), 7);
}

}  // namespace

TEST(CohortGames, T8Values) {
  const auto cs = t8_cs(false);
  EXPECT_EQ(cs.evaluate(0), 0.0);
  EXPECT_DOUBLE_EQ(cs.evaluate(k1), 1.0);
  EXPECT_DOUBLE_EQ(cs.evaluate(k2), 0.5);
  EXPECT_DOUBLE_EQ(cs.evaluate(k3), 0.0);
  EXPECT_DOUBLE_EQ(cs.evaluate(kAll), 1.5);
  const auto cs2 = t8_cs(true);
  EXPECT_DOUBLE_EQ(cs2.evaluate(k1), 1.0);
  EXPECT_DOUBLE_EQ(cs2.evaluate(k12), 2.25);
  EXPECT_DOUBLE_EQ(cs2.evaluate(k3), 0.0);
  EXPECT_EQ(cs2.evaluate(0), 0.0);
}

TEST(CohortGames, SingletonCohortTotalIsPredictionGap) {
  const auto ds = oracle::t8();
  for (std::size_t t = 0; t < 8; ++t) {
    const auto g = make_cs_game(ds, similarity_row(SimilarityRules::identity(ds), ds, t), t);
    EXPECT_DOUBLE_EQ(g.evaluate(kAll), ds.predictions()[t] - 1.5);
  }
}

TEST(CohortGames, TableMatchesEvaluateAndOracle) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto ds = oracle::random_dataset(300 + 40 * rep, 5, rng);
    const auto rule_list = oracle::random_rules(5, rng);
    const SimilarityRules rules(ds, rule_list);
    auto data = std::make_shared<CohortData>(ds.predictions());
    for (std::size_t t = 0; t < ds.rows(); t += 61) {
      const CohortGame g(data, similarity_row(rules, ds, t), rep % 2 == 1);
      const auto table = g.value_table();
      const auto expected = oracle::cs_table(ds, rule_list, t, rep % 2 == 1);
      for (Subset u = 0; u < table.size(); ++u) {
        EXPECT_EQ(table[u], g.evaluate(u)) << "u=" << u;
        EXPECT_NEAR(table[u], expected[u], 1e-10);
      }
    }
  }
}

TEST(BaselineGames, T8LinearValues) {
  const auto ds = oracle::t8();
  const auto bs = make_bs_game(ds, 7, mean_baseline(ds), t8_linear());
  EXPECT_EQ(bs.evaluate(0), 0.0);
  EXPECT_DOUBLE_EQ(bs.evaluate(k1), 1.0);
  EXPECT_DOUBLE_EQ(bs.evaluate(kAll), 3.0 - 1.5);
  EXPECT_EQ(bs.hybrid(k1), (std::vector<double>{1, 0.5, 0.5}));
  const auto bs2 = make_bs2_game(ds, 7, mean_baseline(ds), t8_linear());
  EXPECT_DOUBLE_EQ(bs2.evaluate(kAll), 2.25);
  EXPECT_EQ(bs2.evaluate(0), 0.0);
}

TEST(BaselineGames, LinearMeanBaselineMatchesCohortTotal) {
  std::mt19937_64 rng(4);
  const auto base = oracle::random_dataset(200, 4, rng);
  auto model = std::make_shared<LinearModel>(std::vector<double>{1.5, -2, 0.3, 4}, 0.7);
  const auto ds = attach_predictions(base, predict(*model, PointMatrix::from_dataset(base)));
  const auto rules = SimilarityRules::identity(ds);
  for (std::size_t t = 0; t < ds.rows(); t += 9) {
    const auto cs = make_cs_game(ds, similarity_row(rules, ds, t), t);
    const auto bs = make_bs_game(ds, t, mean_baseline(ds), model);
    // Identity rules on continuous data leave only t in the full cohort.
    ASSERT_EQ(cohort_mask(cs.similarity(), full_set(4)).count(), 1u);
    EXPECT_NEAR(bs.evaluate(full_set(4)), cs.evaluate(full_set(4)), 1e-9);
  }
}

TEST(AllBaselineGames, T8Values) {
  const auto ds = oracle::t8();
  const auto abs = make_abs_game(ds, 7, t8_linear());
  EXPECT_DOUBLE_EQ(abs.evaluate(k1), 1.0);
  EXPECT_EQ(abs.evaluate(0), 0.0);
  EXPECT_DOUBLE_EQ(abs.evaluate(kAll), 1.5);
  const auto abs2 = make_abs2_game(ds, 7, t8_linear());
  EXPECT_DOUBLE_EQ(abs2.evaluate(kAll), 3.5);
  EXPECT_GE(abs2.evaluate(kAll), t8_cs(true).evaluate(kAll));
}

TEST(AllBaselineGames, TotalsAgainstCohortGames) {
  std::mt19937_64 rng(6);
  const auto base = oracle::random_dataset(150, 3, rng);
  auto model = std::make_shared<LogisticModel>(std::vector<double>{0.4, -0.3, 0.2}, -0.1);
  const auto ds = attach_predictions(base, predict(*model, PointMatrix::from_dataset(base)));
  const auto rules = SimilarityRules::identity(ds);
  const auto shared = std::make_shared<AllBaselineData>(ds, model);
  for (std::size_t t = 0; t < ds.rows(); t += 11) {
    const auto cs = make_cs_game(ds, similarity_row(rules, ds, t), t);
    const auto cs2 = make_cs2_game(ds, similarity_row(rules, ds, t), t);
    const AllBaselineGame abs(shared, t, false), abs2(shared, t, true);
    if (cohort_mask(cs.similarity(), full_set(3)).count() == 1) {
      EXPECT_NEAR(abs.evaluate(full_set(3)), cs.evaluate(full_set(3)), 1e-12);
    }
    EXPECT_GE(abs2.evaluate(full_set(3)), cs2.evaluate(full_set(3)) - 1e-15);
  }
}

TEST(VarianceGame, T8Values) {
  const auto ds = oracle::t8();
  const auto g = make_var_game(ds, SimilarityRules::identity(ds));
  EXPECT_EQ(g.evaluate(0), 0.0);
  EXPECT_DOUBLE_EQ(g.evaluate(kAll), 1.25);
  EXPECT_DOUBLE_EQ(g.evaluate(k1), 1.0);
}

TEST(VarianceGame, EqualsMeanOfSquaredCohortGames) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 5; ++rep) {
    const auto ds = oracle::random_dataset(130 + 50 * rep, 4, rng);
    const SimilarityRules rules(ds, oracle::random_rules(4, rng));
    const auto var = make_var_game(ds, rules);
    const auto table = var.value_table();
    std::vector<long double> mean(16, 0.0L);
    for (std::size_t t = 0; t < ds.rows(); ++t) {
      const auto g = make_cs2_game(ds, similarity_row(rules, ds, t), t);
      for (Subset u = 0; u < 16; ++u) mean[u] += g.evaluate(u);
    }
    for (Subset u = 0; u < 16; ++u) {
      EXPECT_EQ(table[u], var.evaluate(u));
      EXPECT_NEAR(table[u], static_cast<double>(mean[u] / ds.rows()), 1e-12 * (1 + table[u]));
    }
  }
}

TEST(Games, EvaluationIsPureAndBatchMatchesScalar) {
  const auto ds = oracle::t8();
  const auto bs = make_bs_game(ds, 3, mean_baseline(ds), t8_linear());
  const auto abs = make_abs2_game(ds, 3, t8_linear());
  std::vector<Subset> all(8);
  for (Subset u = 0; u < 8; ++u) all[u] = u;
  for (const Game* g : std::initializer_list<const Game*>{&bs, &abs}) {
    std::vector<double> batch(8);
    g->evaluate_batch(all, batch);
    for (Subset u = 0; u < 8; ++u) {
      EXPECT_EQ(batch[u], g->evaluate(u));
      EXPECT_EQ(g->evaluate(u), g->evaluate(u));
    }
  }
}

TEST(Games, CachedGameEvaluatesEachSubsetOnce) {
  const auto cs = t8_cs(false);
  const CachedGame cached(cs);
  for (int rep = 0; rep < 3; ++rep) {
    for (Subset u = 0; u < 8; ++u) EXPECT_EQ(cached.evaluate(u), cs.evaluate(u));
  }
  EXPECT_EQ(cached.cached(), 8u);
}

TEST(Games, TableGameRequiresZeroAtEmptySet) {
  EXPECT_THROW(TableGame(2, {1, 0, 0, 0}), Error);
  EXPECT_THROW(TableGame(2, {0, 0, 0}), Error);
  EXPECT_NO_THROW(TableGame(2, {0, 1, 2, 3}));
}

TEST(Games, ModelDimensionChecked) {
  const auto ds = oracle::t8();
  auto wrong = std::make_shared<LinearModel>(std::vector<double>{1, 2}, 0.0);
  EXPECT_THROW(make_bs_game(ds, 0, mean_baseline(ds), wrong), ModelError);
  EXPECT_THROW(make_bs_game(ds, 0, {0.5, 0.5}, t8_linear()), Error);
  EXPECT_THROW(make_bs_game(ds, 8, mean_baseline(ds), t8_linear()), Error);
}

TEST(Method, ParsesNames) {
  EXPECT_EQ(parse_method("abs2"), Method::abs2);
  EXPECT_EQ(to_string(Method::var), "var");
  EXPECT_THROW(parse_method("kernel"), ConfigError);
}
