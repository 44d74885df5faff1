#include "hashednets/feature_hash.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hashednets/error.hpp"
#include "hashednets/random.hpp"

namespace hashednets {

Vector phi(const PhiMap& map, std::span<const double> x) {
  Vector out(map.bucket_count(), 0.0);
  for (std::size_t j = map.first_key; j < x.size(); ++j) {
    out[map.assignment.bucket(map.output_index, j)] += map.assignment.sign(map.output_index, j) * x[j];
  }
  return out;
}

double hashed_dot(std::span<const double> w, const PhiMap& map, std::span<const double> x) {
  if (w.size() != map.bucket_count()) throw DimensionError("hashed_dot: weight length differs from K");
  const Vector projected = phi(map, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) sum += w[k] * projected[k];
  return sum;
}

PhiMap phi_map_for(const HashedLayer& layer, std::size_t output_index) {
  if (output_index >= layer.n_out()) throw DimensionError("phi_map_for: output index out of range");
  return PhiMap{layer.assignment(), output_index, layer.hash_bias() ? 0U : 1U};
}

Vector augment_with_bias(std::span<const double> a) {
  Vector x(a.size() + 1);
  x[0] = 1.0;
  std::copy(a.begin(), a.end(), x.begin() + 1);
  return x;
}

Vector oracle_forward(const HashedLayer& layer, std::span<const double> a_prev) {
  if (a_prev.size() != layer.n_in()) throw DimensionError("oracle_forward: input width mismatch");
  const Vector x = augment_with_bias(a_prev);
  Vector z(layer.n_out());
  for (std::size_t i = 0; i < layer.n_out(); ++i) {
    z[i] = hashed_dot(layer.shared_weights(), phi_map_for(layer, i), x);
    if (!layer.hash_bias()) z[i] += layer.free_bias()[i];
  }
  return z;
}

Vector oracle_backward_error(const HashedLayer& layer, std::span<const double> delta_next,
                             std::span<const double> z_prev, ActivationKind activation) {
  if (delta_next.size() != layer.n_out() || z_prev.size() != layer.n_in()) {
    throw DimensionError("oracle_backward_error: shape mismatch");
  }
  const auto w = layer.shared_weights();
  const std::size_t k_count = w.size();
  const auto& map = layer.assignment();

  // Error on the hashed representation phi_i(a), one row per output unit.
  Matrix half(layer.n_out(), k_count);
  for (std::size_t i = 0; i < layer.n_out(); ++i) {
    for (std::size_t k = 0; k < k_count; ++k) half(i, k) = w[k] * delta_next[i];
  }

  Vector delta(layer.n_in());
  for (std::size_t j = 1; j <= layer.n_in(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < layer.n_out(); ++i) sum += map.sign(i, j) * half(i, map.bucket(i, j));
    delta[j - 1] = sum * activate_derivative(activation, z_prev[j - 1]);
  }
  return delta;
}

Vector oracle_gradient(const HashedLayer& layer, std::span<const double> a_prev,
                       std::span<const double> delta_next) {
  if (a_prev.size() != layer.n_in() || delta_next.size() != layer.n_out()) {
    throw DimensionError("oracle_gradient: shape mismatch");
  }
  const Vector x = augment_with_bias(a_prev);
  Vector grad(layer.bucket_count(), 0.0);
  for (std::size_t i = 0; i < layer.n_out(); ++i) {
    const Vector projected = phi(phi_map_for(layer, i), x);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += projected[k] * delta_next[i];
  }
  return grad;
}

namespace {

template <typename Sample>
TrialStats run_trials(std::size_t n_seeds, Sample&& sample) {
  if (n_seeds < 100) throw ConfigError("Monte Carlo trials need at least 100 seeds");
  // Welford accumulation.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const double value = sample(s);
    const double step = value - mean;
    mean += step / static_cast<double>(s + 1);
    m2 += step * (value - mean);
  }
  const double n = static_cast<double>(n_seeds);
  const double variance = m2 / (n - 1.0);
  return TrialStats{mean, std::sqrt(variance / n), n_seeds};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

}  // namespace

TrialStats unbiasedness_trial(std::span<const double> x, std::span<const double> x2, std::uint32_t bucket_count,
                              std::size_t n_seeds, std::uint64_t master_seed) {
  if (x.size() != x2.size()) throw DimensionError("unbiasedness_trial: vectors differ in length");
  return run_trials(n_seeds, [&](std::size_t s) {
    const HashSpec spec{derive_seed(master_seed, s), 0, bucket_count};
    const PhiMap map{BucketAssignment::seeded(spec), 0, 0};
    return dot(phi(map, x), phi(map, x2));
  });
}

TrialStats interference_trial(std::span<const double> u, std::span<const double> x,
                              std::uint32_t bucket_count, std::size_t n_seeds,
                              std::uint64_t master_seed) {
  if (u.size() != x.size()) throw DimensionError("interference_trial: vectors differ in length");
  return run_trials(n_seeds, [&](std::size_t s) {
    const HashSpec spec{derive_seed(master_seed, s), 0, bucket_count};
    const auto assignment = BucketAssignment::seeded(spec);
    return dot(phi(PhiMap{assignment, 0, 0}, u), phi(PhiMap{assignment, 1, 0}, x));
  });
}

double EquivalenceReport::worst() const noexcept { return std::max({forward, backward_error, gradient}); }

EquivalenceReport equivalence_suite(std::size_t layer_count, std::uint64_t seed) {
  constexpr ActivationKind kActivations[] = {ActivationKind::tanh, ActivationKind::relu, ActivationKind::sigmoid};
  EquivalenceReport report;
  report.layers = layer_count;
  Rng rng(seed);
  auto max_diff = [](const Vector& a, const Vector& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
  };
  for (std::size_t t = 0; t < layer_count; ++t) {
    const std::size_t n_in = 1 + rng.below(32);
    const std::size_t n_out = 1 + rng.below(32);
    const auto k = static_cast<std::uint32_t>(1 + rng.below(64));
    HashedLayerOptions options;
    options.sign_enabled = rng.below(2) == 0;
    options.hash_bias = rng.below(2) == 0;
    options.index_mode = rng.below(2) == 0 ? IndexMode::on_the_fly : IndexMode::precomputed;
    const HashSpec spec{rng.next_u64(), static_cast<std::uint32_t>(rng.below(8)), k};
    HashedLayer layer(n_in, n_out, spec, options);
    for (double& p : layer.params()) p = rng.uniform(-1.0, 1.0);

    Vector a(n_in), z(n_in), delta(n_out);
    for (double& v : a) v = rng.normal();
    for (double& v : z) v = rng.normal();
    for (double& v : delta) v = rng.normal();
    const ActivationKind act = kActivations[t % 3];

    if (forward(layer, a).size() != n_out || gradient_shared(layer, a, delta).size() != k) {
      throw DimensionError("equivalence_suite: layer operation returned the wrong length");
    }
    report.forward = std::max(report.forward, max_diff(forward(layer, a), oracle_forward(layer, a)));
    report.backward_error = std::max(report.backward_error, max_diff(backward_error(layer, delta, z, act),
                                                                     oracle_backward_error(layer, delta, z, act)));
    report.gradient =
        std::max(report.gradient, max_diff(gradient_shared(layer, a, delta), oracle_gradient(layer, a, delta)));
  }
  return report;
}

}  // namespace hashednets
