#include <gtest/gtest.h>

#include "hashednets/budget.hpp"
#include "hashednets/error.hpp"

using namespace hashednets;

TEST(Budget, RoundHalfUp) {
  EXPECT_EQ(round_half_up(2.5), 3);
  EXPECT_EQ(round_half_up(2.4999), 2);
  EXPECT_EQ(round_half_up(0.5), 1);
}

TEST(Budget, HashedCountSingleHiddenLayer) {
  const Architecture arch{{784, 1000, 10}, 0.125};
  EXPECT_EQ(hashed_layer_budget(arch.widths, 0, 0.125), 98125u);
  EXPECT_EQ(hashed_layer_budget(arch.widths, 1, 0.125), 1250u);
  EXPECT_EQ(param_count_hashed(arch), 99385u);
}

TEST(Budget, ShrinkageEqualsCompressionForOneHiddenLayer) {
  const ShrinkageResult r = solve_shrinkage(Architecture{{784, 1000, 10}, 0.125});
  EXPECT_EQ(r.r, 0.125);
  EXPECT_EQ(r.widths, (std::vector<std::size_t>{784, 125, 10}));
  EXPECT_EQ(r.n_standard, 99385u);
  EXPECT_EQ(r.n_hash, 99385u);
  EXPECT_TRUE(r.within_slack);
}

TEST(Budget, ShrinkageTwoHiddenLayers) {
  // a = 1500, b = 5380, C = 1720; r = 0.295377060931776...
  const Architecture arch{{100, 50, 30, 10}, 0.25};
  const ShrinkageQuadratic q = shrinkage_quadratic(arch);
  EXPECT_EQ(q.quadratic, 1500.0);
  EXPECT_EQ(q.linear, 5380.0);
  EXPECT_EQ(q.constant, 1720.0);
  const ShrinkageResult r = solve_shrinkage(arch);
  EXPECT_NEAR(r.r, 0.29537706093177663, 1e-15);
  EXPECT_EQ(r.n_hash, 1731u);
  EXPECT_EQ(r.widths, (std::vector<std::size_t>{100, 15, 9, 10}));
  EXPECT_EQ(r.n_standard, 1759u);
  EXPECT_TRUE(r.within_slack);
}

TEST(Budget, DenseCount) {
  EXPECT_EQ(param_count_dense({784, 50, 10}), 785u * 50u + 51u * 10u);
  EXPECT_EQ(param_count_standard(Architecture{{784, 1000, 10}, 0.5}, 0.5), 785u * 500u + 501u * 10u);
}

TEST(Budget, Errors) {
  EXPECT_THROW(solve_shrinkage(Architecture{{784, 10}, 0.5}), DegenerateArchitecture);
  EXPECT_THROW(solve_shrinkage(Architecture{{784, 100, 10}, 0.0}), ConfigError);
  EXPECT_THROW(solve_shrinkage(Architecture{{784, 100, 10}, -1.0}), ConfigError);
  EXPECT_THROW(shrunk_widths({784, 10, 10}, 0.01), DegenerateArchitecture);
}

TEST(Budget, ExpansionFactorAboveOne) {
  const ShrinkageResult r = solve_shrinkage(Architecture{{784, 50, 10}, 4.0});
  EXPECT_EQ(r.r, 4.0);
  EXPECT_EQ(r.widths[1], 200u);
}
