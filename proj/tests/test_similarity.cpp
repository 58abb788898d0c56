#include <gtest/gtest.h>

#include <random>

#include "cohortshap/error.hpp"
#include "cohortshap/similarity.hpp"
#include "oracles.hpp"

using namespace cohortshap;

namespace {

std::vector<std::size_t> members(const CohortMask& m) { return m.members(); }

}  // namespace

TEST(CohortMask, BasicOperations) {
  auto a = CohortMask::all(70);
  EXPECT_EQ(a.count(), 70u);
  EXPECT_EQ(a.words().back() >> 6, 0u);
  auto b = CohortMask::none(70);
  b.set(3);
  b.set(65);
  b.set(65);
  EXPECT_EQ(b.count(), 2u);
  EXPECT_TRUE(b.is_subset_of(a));
  EXPECT_EQ(a.refine(b), b);
  EXPECT_EQ(*b.first(), 3u);
  EXPECT_EQ(members(b), (std::vector<std::size_t>{3, 65}));
  EXPECT_FALSE(CohortMask::none(5).first());
}

TEST(MaskedSummer, TableAgreesWithScan) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  std::bernoulli_distribution coin(0.3);
  for (std::size_t n : {5u, 255u, 256u, 1045u}) {
    std::vector<double> y(n);
    for (auto& v : y) v = u(rng);
    const MaskedSummer summer(y);
    EXPECT_EQ(summer.uses_table(), n >= MaskedSummer::kTableThreshold);
    for (int rep = 0; rep < 20; ++rep) {
      auto m = CohortMask::none(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (coin(rng)) m.set(i);
      }
      if (m.empty()) m.set(0);
      long double s = 0;
      for (auto i : m.members()) s += y[i];
      EXPECT_NEAR(summer.sum(m), static_cast<double>(s), 1e-11 * n);
    }
  }
}

TEST(Similarity, T8CohortSizes) {
  const auto ds = oracle::t8();
  const auto rules = SimilarityRules::identity(ds);
  const auto z = similarity_row(rules, ds, 7);
  EXPECT_EQ(cohort_mask(z, 0).count(), 8u);
  EXPECT_EQ(cohort_mask(z, 0b001).count(), 4u);
  EXPECT_EQ(cohort_mask(z, 0b011).count(), 2u);
  EXPECT_EQ(cohort_mask(z, 0b111).count(), 1u);
}

TEST(Similarity, T8CohortMeans) {
  const auto ds = oracle::t8();
  const auto z = similarity_row(SimilarityRules::identity(ds), ds, 7);
  EXPECT_DOUBLE_EQ(cohort_mean(cohort_mask(z, 0b001), ds.predictions()), 2.5);
  EXPECT_DOUBLE_EQ(cohort_mean(cohort_mask(z, 0), ds.predictions()), 1.5);
  EXPECT_DOUBLE_EQ(cohort_mean(cohort_mask(z, 0b111), ds.predictions()), 3.0);
}

TEST(Similarity, ZeroThresholdEqualsIdentity) {
  std::mt19937_64 rng(5);
  const auto ds = oracle::random_dataset(60, 3, rng);
  const auto id = SimilarityRules::identity(ds);
  const SimilarityRules zero(ds, {AbsoluteThreshold{0}, AbsoluteThreshold{0},
                                  AbsoluteThreshold{0}});
  for (std::size_t t = 0; t < ds.rows(); ++t) {
    const auto a = similarity_row(id, ds, t);
    const auto b = similarity_row(zero, ds, t);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(a.column(j), b.column(j));
  }
}

TEST(Similarity, RangeFractionResolvesOnQuantiles) {
  std::vector<double> col;
  for (int i = 0; i <= 100; ++i) col.push_back(i);
  const Dataset ds({{"x", ColumnKind::numeric}}, col);
  const SimilarityRules r(ds, {RangeFraction{0.1, 0.05, 0.95}});
  EXPECT_DOUBLE_EQ(r[0].delta, 9.0);
  const SimilarityRules mm(ds, {RangeFraction{0.1}});
  EXPECT_DOUBLE_EQ(mm[0].delta, 10.0);
  EXPECT_EQ(similarity_row(r, ds, 50).column(0).count(), 19u);
}

TEST(Similarity, RelativeThresholdIsTargetScaled) {
  const Dataset ds({{"x", ColumnKind::numeric}}, {10, 11, 12, 1, 0.95});
  const SimilarityRules r(ds, {RelativeThreshold{0.1}});
  EXPECT_EQ(members(similarity_row(r, ds, 0).column(0)), (std::vector<std::size_t>{0, 1}));
  // Not symmetric: 11 counts 12 as similar, 10 does not.
  EXPECT_EQ(members(similarity_row(r, ds, 1).column(0)), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(members(similarity_row(r, ds, 3).column(0)), (std::vector<std::size_t>{3, 4}));
}

TEST(Similarity, ValidatesRules) {
  const Dataset ds({{"c", ColumnKind::categorical}, {"x", ColumnKind::numeric}},
                   {0, 1, 1, 2}, {{"a", "b"}, {}});
  EXPECT_THROW(SimilarityRules(ds, {RelativeThreshold{0.1}, IdentityRule{}}), Error);
  EXPECT_THROW(SimilarityRules(ds, {AbsoluteThreshold{1}, IdentityRule{}}), Error);
  EXPECT_THROW(SimilarityRules(ds, {IdentityRule{}, AbsoluteThreshold{-1}}), Error);
  EXPECT_THROW(SimilarityRules(ds, {IdentityRule{}, RangeFraction{0.1, 0.9, 0.1}}), Error);
  EXPECT_THROW(SimilarityRules(ds, {IdentityRule{}}), Error);
}

TEST(Similarity, TargetAlwaysInCohortAndRefinementIsMonotone) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const auto ds = oracle::random_dataset(80, 4, rng);
    const SimilarityRules rules(ds, oracle::random_rules(4, rng));
    for (std::size_t t = 0; t < ds.rows(); t += 7) {
      const auto z = similarity_row(rules, ds, t);
      for (Subset u = 0; u < 16; ++u) {
        const auto m = cohort_mask(z, u);
        EXPECT_TRUE(m.contains(t));
        for (int j = 0; j < 4; ++j) {
          const auto child = cohort_mask(z, u | singleton(j));
          EXPECT_TRUE(child.is_subset_of(m));
          EXPECT_EQ(m.refine(z.column(static_cast<std::size_t>(j))), child);
        }
      }
    }
  }
}

TEST(Similarity, AgreesWithNaiveScan) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const auto ds = oracle::random_dataset(50 + 13 * rep, 4, rng);
    const auto rule_list = oracle::random_rules(4, rng);
    const SimilarityRules rules(ds, rule_list);
    for (std::size_t t = 0; t < ds.rows(); t += 5) {
      const auto z = similarity_row(rules, ds, t);
      for (Subset u = 0; u < 16; ++u) {
        EXPECT_EQ(cohort_mask(z, u).members(), oracle::cohort(ds, rule_list, t, u));
      }
    }
  }
}

TEST(Similarity, DuplicatedColumnsGiveSwappableCohorts) {
  std::mt19937_64 rng(29);
  auto base = oracle::random_dataset(60, 3, rng);
  std::vector<double> v;
  for (std::size_t i = 0; i < base.rows(); ++i) {
    v.insert(v.end(), {base.value(i, 0), base.value(i, 1), base.value(i, 1)});
  }
  const Dataset ds({{"a", ColumnKind::numeric}, {"b", ColumnKind::numeric},
                    {"b2", ColumnKind::numeric}},
                   v);
  const SimilarityRules rules(ds, {AbsoluteThreshold{0.5}, AbsoluteThreshold{0.3},
                                   AbsoluteThreshold{0.3}});
  for (std::size_t t = 0; t < ds.rows(); ++t) {
    const auto z = similarity_row(rules, ds, t);
    for (Subset u = 0; u < 8; ++u) {
      const Subset swapped = (u & 1) | ((u >> 1 & 1) << 2) | ((u >> 2 & 1) << 1);
      EXPECT_EQ(cohort_mask(z, u), cohort_mask(z, swapped));
    }
  }
}

TEST(SimilarityIndex, MatchesPerTargetRows) {
  std::mt19937_64 rng(31);
  const auto ds = oracle::random_dataset(120, 5, rng);
  const SimilarityRules rules(ds, oracle::random_rules(5, rng));
  const SimilarityIndex index(rules, ds);
  for (std::size_t t = 0; t < ds.rows(); ++t) {
    const auto z = similarity_row(rules, ds, t);
    const auto zi = index.row(t);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(z.column(j), zi.column(j));
  }
}

TEST(Similarity, PointQueryUsesPointAsTarget) {
  const auto ds = oracle::t8();
  const auto z = similarity_to_point(SimilarityRules::identity(ds), ds,
                                     std::vector<double>{1, 0, 1});
  EXPECT_EQ(cohort_mask(z, 0b111).members(), (std::vector<std::size_t>{5}));
  EXPECT_THROW(similarity_to_point(SimilarityRules::identity(ds), ds,
                                   std::vector<double>{1, 0}),
               DataError);
}

TEST(Similarity, AtThresholdRescalesTolerance) {
  const SimilarityRule r = RangeFraction{0.1, 0.05, 0.95};
  const auto s = std::get<RangeFraction>(at_threshold(r, 0.3));
  EXPECT_DOUBLE_EQ(s.fraction, 0.3);
  EXPECT_DOUBLE_EQ(s.lo_q, 0.05);
  EXPECT_DOUBLE_EQ(std::get<AbsoluteThreshold>(at_threshold(AbsoluteThreshold{1}, 2)).delta, 2);
  EXPECT_TRUE(std::holds_alternative<IdentityRule>(at_threshold(IdentityRule{}, 2)));
}
