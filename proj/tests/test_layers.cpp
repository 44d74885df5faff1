#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hashednets/error.hpp"
#include "hashednets/feature_hash.hpp"
#include "hashednets/layers.hpp"
#include "hashednets/random.hpp"

using namespace hashednets;

namespace {

Vector random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void fill_params(Layer& layer, std::uint64_t seed) {
  Rng rng(seed);
  for (double& p : layer.params()) p = rng.uniform(-1.0, 1.0);
}

double max_abs_diff(const Vector& a, const Vector& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

double sample_variance(std::span<const double> xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return sq / (xs.size() - 1);
}

}  // namespace

TEST(HashedLayer, SingleBucketWithoutSign) {
  HashedLayer layer(4, 3, HashSpec{9, 0, 1}, HashedLayerOptions{false, true});
  layer.shared_weights()[0] = -0.8;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j <= 4; ++j) EXPECT_EQ(layer.virtual_weight(i, j), -0.8);
}

TEST(HashedLayer, SharedWeightWorkedExample) {
  // Connection (2, 1) of layer 0 lands in bucket 0 with sign +1 for seed 1, K = 3.
  HashedLayer layer(4, 3, HashSpec{1, 0, 3});
  ASSERT_EQ(layer.bucket(2, 1), 0u);
  ASSERT_EQ(layer.sign(2, 1), 1);
  const double w[] = {3.2, 1.1, 2.5};
  std::copy(std::begin(w), std::end(w), layer.shared_weights().begin());
  EXPECT_EQ(layer.virtual_weight(2, 1), 3.2);
}

TEST(HashedLayer, VirtualMatrixMatchesIndependentAssembly) {
  HashedLayer layer(2, 4, HashSpec{42, 1, 5});
  const double w[] = {0.5, -1.25, 2.0, 0.75, -0.3};
  std::copy(std::begin(w), std::end(w), layer.shared_weights().begin());
  const double expected[4][3] = {
      {0.75, 2.0, -0.3}, {-0.75, 0.5, -0.75}, {2.0, -0.5, -0.5}, {-0.5, -2.0, 0.75}};
  Matrix v;
  layer.materialize(v);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(layer.virtual_weight(i, j), expected[i][j]);
      EXPECT_EQ(v(i, j), expected[i][j]);
    }
}

TEST(HashedLayer, VirtualWeightRangeChecked) {
  HashedLayer layer(3, 2, HashSpec{1, 0, 4});
  EXPECT_THROW(layer.virtual_weight(2, 0), DimensionError);
  EXPECT_THROW(layer.virtual_weight(0, 4), DimensionError);
  EXPECT_NO_THROW(layer.virtual_weight(1, 3));
}

TEST(HashedLayer, ParamCountIsBucketCount) {
  EXPECT_EQ(HashedLayer(500, 300, HashSpec{1, 0, 77}).param_count(), 77u);
  EXPECT_EQ(HashedLayer(5, 3, HashSpec{1, 0, 77}).param_count(), 77u);
  EXPECT_EQ(HashedLayer(5, 3, HashSpec{1, 0, 77}, HashedLayerOptions{true, false}).param_count(), 80u);
}

TEST(HashedLayer, ZeroInputWithFreeBiasGivesZero) {
  HashedLayer layer(6, 4, HashSpec{2, 0, 5}, HashedLayerOptions{true, false});
  for (double& w : layer.shared_weights()) w = 1.7;
  const Vector z = forward(layer, Vector(6, 0.0));
  for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(HashedLayer, ForwardMatchesFeatureHashing) {
  HashedLayer layer(7, 5, HashSpec{7, 0, 11});
  fill_params(layer, 7);
  const Vector a = random_vector(7, 8);
  EXPECT_LE(max_abs_diff(forward(layer, a), oracle_forward(layer, a)), 1e-15);
}

TEST(HashedLayer, BackwardMatchesTwoStagePropagation) {
  for (bool hash_bias : {true, false}) {
    HashedLayer layer(9, 6, HashSpec{3, 2, 13}, HashedLayerOptions{true, hash_bias});
    fill_params(layer, 4);
    const Vector delta = random_vector(6, 5);
    const Vector z = random_vector(9, 6);
    EXPECT_LE(max_abs_diff(backward_error(layer, delta, z, ActivationKind::tanh),
                           oracle_backward_error(layer, delta, z, ActivationKind::tanh)),
              1e-14);
  }
}

TEST(HashedLayer, GradientMatchesFeatureHashing) {
  HashedLayer layer(9, 6, HashSpec{3, 2, 13});
  fill_params(layer, 4);
  const Vector a = random_vector(9, 5);
  const Vector delta = random_vector(6, 6);
  EXPECT_LE(max_abs_diff(gradient_shared(layer, a, delta), oracle_gradient(layer, a, delta)), 1e-14);
}

TEST(HashedLayer, ZeroDeltaGivesZeroErrorAndGradient) {
  HashedLayer layer(5, 4, HashSpec{3, 0, 7});
  fill_params(layer, 1);
  for (double v : backward_error(layer, Vector(4, 0.0), random_vector(5, 2), ActivationKind::relu)) EXPECT_EQ(v, 0.0);
  for (double v : gradient_shared(layer, random_vector(5, 3), Vector(4, 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(HashedLayer, CollisionFreeEqualsStandard) {
  const std::size_t n_in = 6, n_out = 4;
  HashedLayer hashed(n_in, n_out, BucketAssignment::injective(n_out, n_in + 1));
  fill_params(hashed, 10);
  Matrix v;
  hashed.materialize(v);
  StandardLayer standard(v);
  const Vector a = random_vector(n_in, 11);
  const Vector delta = random_vector(n_out, 12);
  const Vector z = random_vector(n_in, 13);
  EXPECT_EQ(forward(hashed, a), forward(standard, a));
  EXPECT_EQ(backward_error(hashed, delta, z, ActivationKind::sigmoid),
            backward_error(standard, delta, z, ActivationKind::sigmoid));
  const Vector shared = gradient_shared(hashed, a, delta);
  const Matrix dense = gradient_standard(standard, a, delta);
  ASSERT_EQ(shared.size(), dense.size());
  for (std::size_t k = 0; k < shared.size(); ++k) EXPECT_EQ(shared[k], dense.data()[k]);
}

TEST(HashedLayer, IndexModesAgreeBitwise) {
  HashedLayer fly(40, 30, HashSpec{5, 1, 97});
  fill_params(fly, 2);
  HashedLayer cached = fly;
  cached.set_index_mode(IndexMode::precomputed);
  Matrix a, b;
  fly.materialize(a);
  cached.materialize(b);
  EXPECT_EQ(a, b);
  const Vector x = random_vector(40, 3);
  const Vector d = random_vector(30, 4);
  EXPECT_EQ(gradient_shared(fly, x, d), gradient_shared(cached, x, d));
}

TEST(HashedLayer, ReferenceOperationsAgreeWithBatchedPath) {
  HashedLayer layer(33, 21, HashSpec{8, 3, 50}, HashedLayerOptions{true, false});
  fill_params(layer, 5);
  const Vector a = random_vector(33, 6);
  const Vector d = random_vector(21, 7);
  const Vector z = random_vector(33, 8);
  EXPECT_LE(max_abs_diff(reference::hashed_forward(layer, a), forward(layer, a)), 1e-13);
  EXPECT_LE(max_abs_diff(reference::hashed_backward_error(layer, d, z, ActivationKind::tanh),
                         backward_error(layer, d, z, ActivationKind::tanh)),
            1e-13);
  EXPECT_LE(max_abs_diff(reference::hashed_gradient(layer, a, d), gradient_shared(layer, a, d)), 1e-13);
}

TEST(HashedLayer, PerturbingOneBucketMovesOutputsBySignedInputSums) {
  HashedLayer layer(8, 5, HashSpec{4, 0, 6});
  fill_params(layer, 9);
  const Vector a = random_vector(8, 10);
  const Vector base = forward(layer, a);
  const std::size_t k = 2;
  const double eps = 0.125;
  layer.shared_weights()[k] += eps;
  const Vector moved = forward(layer, a);
  for (std::size_t i = 0; i < 5; ++i) {
    double expected = 0.0;
    for (std::size_t j = 0; j <= 8; ++j) {
      if (layer.bucket(i, j) == k) expected += layer.sign(i, j) * (j == 0 ? 1.0 : a[j - 1]);
    }
    EXPECT_NEAR(moved[i] - base[i], eps * expected, 1e-14);
  }
}

TEST(HashedLayer, GradientMatchesFiniteDifferencesOfLinearLoss) {
  HashedLayer layer(5, 4, HashSpec{6, 0, 7});
  fill_params(layer, 1);
  const Vector a = random_vector(5, 2);
  const Vector u = random_vector(4, 3);
  auto loss = [&] {
    const Vector z = forward(layer, a);
    return std::inner_product(z.begin(), z.end(), u.begin(), 0.0);
  };
  const Vector g = gradient_shared(layer, a, u);
  for (std::size_t k = 0; k < 7; ++k) {
    const double s = layer.shared_weights()[k];
    layer.shared_weights()[k] = s + 1e-5;
    const double up = loss();
    layer.shared_weights()[k] = s - 1e-5;
    const double down = loss();
    layer.shared_weights()[k] = s;
    const double numeric = (up - down) / 2e-5;
    EXPECT_LE(std::abs(g[k] - numeric), 1e-6 * std::max(1.0, std::abs(g[k])));
  }
}

TEST(StandardLayer, GradientOfUnitVectors) {
  StandardLayer layer(4, 3);
  Vector a(4, 0.0), d(3, 0.0);
  a[1] = 1.0;
  d[2] = 1.0;
  const Matrix g = gradient_standard(layer, a, d);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const bool hot = i == 2 && (j == 0 || j == 2);
      EXPECT_EQ(g(i, j), hot ? 1.0 : 0.0) << i << "," << j;
    }
}

TEST(StandardLayer, DimensionChecks) {
  StandardLayer layer(4, 3);
  EXPECT_THROW(forward(layer, Vector(3, 0.0)), DimensionError);
  EXPECT_THROW(backward_error(layer, Vector(2, 0.0), Vector(4, 0.0), ActivationKind::relu), DimensionError);
  EXPECT_THROW(backward_error(layer, Vector(3, 0.0), Vector(5, 0.0), ActivationKind::relu), DimensionError);
}

TEST(Init, DeterministicPerSeed) {
  HashedLayer a(20, 10, HashSpec{1, 0, 30}), b(20, 10, HashSpec{1, 0, 30});
  a.init_weights(5);
  b.init_weights(5);
  EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  StandardLayer s1(20, 10), s2(20, 10);
  s1.init_weights(5);
  s2.init_weights(6);
  EXPECT_FALSE(std::equal(s1.params().begin(), s1.params().end(), s2.params().begin()));
}

TEST(Init, GlorotVariance) {
  StandardLayer standard(400, 250);
  standard.init_weights(3);
  const Matrix& w = standard.weights();
  std::vector<double> entries;
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 1; j < w.cols(); ++j) entries.push_back(w(i, j));
  ASSERT_EQ(entries.size(), 100000u);
  const double target = 2.0 / 650.0;
  EXPECT_NEAR(sample_variance(entries), target, 0.05 * target);

  HashedLayer hashed(400, 250, HashSpec{2, 0, 100000});
  hashed.init_weights(4);
  EXPECT_NEAR(sample_variance(hashed.shared_weights()), target, 0.05 * target);
}

TEST(Init, SingleBucketHasOneScalar) {
  HashedLayer layer(10, 10, HashSpec{1, 0, 1});
  layer.init_weights(1);
  ASSERT_EQ(layer.param_count(), 1u);
  EXPECT_LE(std::abs(layer.shared_weights()[0]), layer.glorot_limit());
}

TEST(EdgeRemovedLayer, KeepsExactCount) {
  EdgeRemovedLayer layer(30, 20, 155, 4);
  EXPECT_EQ(layer.kept(), 155u);
  EXPECT_DOUBLE_EQ(layer.keep_probability(), 155.0 / (31.0 * 20.0));
  Matrix v;
  layer.init_weights(1);
  layer.materialize(v);
  std::size_t nonzero = 0;
  for (double x : v.data()) nonzero += x != 0.0;
  EXPECT_LE(nonzero, 155u);
  EXPECT_THROW(EdgeRemovedLayer(3, 2, 9, 1), ConfigError);
}

TEST(EdgeRemovedLayer, KeepingEverythingIsAStandardLayer) {
  EdgeRemovedLayer edge(12, 7, 13 * 7, 99);
  StandardLayer standard(12, 7);
  edge.init_weights(8);
  standard.init_weights(8);
  Matrix v;
  edge.materialize(v);
  EXPECT_EQ(v, standard.weights());
}

TEST(EdgeRemovedLayer, GradientIsMasked) {
  EdgeRemovedLayer layer(6, 5, 10, 3);
  const Matrix g = gradient_standard(layer, random_vector(6, 1), random_vector(5, 2));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j <= 6; ++j) {
      if (!layer.is_kept(i, j)) EXPECT_EQ(g(i, j), 0.0);
    }
}

TEST(LowRankLayer, EffectiveMatrixIsProduct) {
  LowRankLayer layer(6, 4, 2, 17);
  layer.init_weights(3);
  Matrix v;
  layer.materialize(v);
  const Matrix& b = layer.fixed_factor();
  const Matrix& a = layer.trainable_factor();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(v(i, j), b(i, 0) * a(0, j) + b(i, 1) * a(1, j), 1e-15);
  EXPECT_EQ(layer.param_count(), 2u * 7u);
  EXPECT_THROW(LowRankLayer(3, 3, 0, 1), ConfigError);
}

TEST(LowRankLayer, FixedFactorScale) {
  LowRankLayer layer(400, 500, 200, 5);
  EXPECT_NEAR(sample_variance(layer.fixed_factor().data()), 1.0 / 400.0, 0.02 / 400.0);
}

TEST(LowRankLayer, TrainableGradientMatchesFiniteDifferences) {
  LowRankLayer layer(5, 4, 3, 2);
  layer.init_weights(1);
  const Vector a = random_vector(5, 3);
  const Vector u = random_vector(4, 4);
  auto loss = [&] {
    const Vector z = forward(layer, a);
    return std::inner_product(z.begin(), z.end(), u.begin(), 0.0);
  };
  const Matrix g = gradient_standard(layer, a, u);
  ASSERT_EQ(g.size(), layer.param_count());
  auto p = layer.params();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double s = p[k];
    p[k] = s + 1e-5;
    const double up = loss();
    p[k] = s - 1e-5;
    const double down = loss();
    p[k] = s;
    const double numeric = (up - down) / 2e-5;
    EXPECT_LE(std::abs(g.data()[k] - numeric), 1e-6 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(LayerKind, ParseAndName) {
  EXPECT_EQ(parse_layer_kind("edge_removed"), LayerKind::edge_removed);
  EXPECT_EQ(layer_kind_name(LayerKind::low_rank), "low_rank");
  EXPECT_THROW(parse_layer_kind("conv"), ConfigError);
  EXPECT_EQ(parse_index_mode("precomputed"), IndexMode::precomputed);
  EXPECT_THROW(parse_index_mode("lazy"), ConfigError);
}
