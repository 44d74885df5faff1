#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "hashednets/core_math.hpp"
#include "hashednets/hashing.hpp"
#include "hashednets/layers.hpp"

// Feature-hashing view of a hashed layer: output unit i sees the input through
// its own signed bucket-sum projection phi_i into R^K and takes an inner
// product with the shared weight vector. Everything here is written from that
// view, independently of the batched kernels, and serves as their oracle.

namespace hashednets {

/// phi_i for one output unit. Keys j below `first_key` are skipped, which is
/// how a layer with a free (unhashed) bias excludes column 0.
struct PhiMap {
  BucketAssignment assignment;
  std::size_t output_index = 0;
  std::size_t first_key = 0;

  std::uint32_t bucket_count() const noexcept { return assignment.bucket_count(); }
};

/// [phi(x)]_k = sum over j >= first_key with h(i, j) = k of xi(i, j) x_j.
Vector phi(const PhiMap& map, std::span<const double> x);

/// w^T phi_i(x).
double hashed_dot(std::span<const double> w, const PhiMap& map, std::span<const double> x);

/// The map a hashed layer uses for output unit i, over the bias-augmented
/// input (1, a_1, ..., a_n).
PhiMap phi_map_for(const HashedLayer& layer, std::size_t output_index);

/// (1, a_1, ..., a_n)
Vector augment_with_bias(std::span<const double> a);

// Layer-level oracles expressed through phi.

/// z_i = <w, phi_i(1, a)> (+ free bias).
Vector oracle_forward(const HashedLayer& layer, std::span<const double> a_prev);

/// Two-stage propagation: first to the hashed representation,
/// delta_half(i, k) = w_k delta_next_i, then back to the inputs,
/// delta_j = (sum_i xi(i, j) delta_half(i, h(i, j))) f'(z_j).
Vector oracle_backward_error(const HashedLayer& layer, std::span<const double> delta_next,
                             std::span<const double> z_prev, ActivationKind activation);

/// dL/dw_k = sum_i [phi_i(1, a)]_k delta_next_i.
Vector oracle_gradient(const HashedLayer& layer, std::span<const double> a_prev,
                       std::span<const double> delta_next);

struct TrialStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// Monte Carlo estimate of E[phi(x)^T phi(x2)] over independently seeded maps
/// into K buckets. Requires n_seeds >= 100.
TrialStats unbiasedness_trial(std::span<const double> x, std::span<const double> x2, std::uint32_t bucket_count,
                              std::size_t n_seeds, std::uint64_t master_seed = 0);

/// Monte Carlo estimate of E[phi_0(u)^T phi_1(x)] for two independent maps of
/// the same seed family (different output indices): a weight vector embedded
/// through one map does not pick up an input hashed through another.
TrialStats interference_trial(std::span<const double> u, std::span<const double> x,
                              std::uint32_t bucket_count, std::size_t n_seeds,
                              std::uint64_t master_seed = 0);

/// Largest absolute disagreement between the layer operations (forward,
/// backward_error, gradient_shared) and the phi-based oracles over randomly
/// drawn hashed layers: n_in, n_out in [1, 32], K in [1, 64], random sign,
/// bias and index-mode settings, activations cycling through every kind.
struct EquivalenceReport {
  std::size_t layers = 0;
  double forward = 0.0;
  double backward_error = 0.0;
  double gradient = 0.0;

  double worst() const noexcept;
};

EquivalenceReport equivalence_suite(std::size_t layer_count, std::uint64_t seed);

}  // namespace hashednets
