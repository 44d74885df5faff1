// Serial reference kernels against their OpenMP versions, and the per-sample
// hashed-layer reference against the batched path used in training.

#include <benchmark/benchmark.h>

#include "hashednets/kernels.hpp"
#include "hashednets/layers.hpp"
#include "hashednets/random.hpp"

using namespace hashednets;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Args: n_out, n_in, batch.
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({125, 784, 50})->Args({1000, 784, 50})->Args({10, 1000, 50});
}

template <auto Kernel>
void affine_forward(benchmark::State& state) {
  const auto n_out = static_cast<std::size_t>(state.range(0));
  const auto n_in = static_cast<std::size_t>(state.range(1));
  const auto batch = static_cast<std::size_t>(state.range(2));
  const Matrix v = random_matrix(n_out, n_in + 1, 1);
  const Matrix a = random_matrix(batch, n_in, 2);
  Matrix z;
  for (auto _ : state) {
    Kernel(v, a, z);
    benchmark::DoNotOptimize(z.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n_out * (n_in + 1) * batch));
}

template <auto Kernel>
void backprop_input(benchmark::State& state) {
  const auto n_out = static_cast<std::size_t>(state.range(0));
  const auto n_in = static_cast<std::size_t>(state.range(1));
  const auto batch = static_cast<std::size_t>(state.range(2));
  const Matrix v = random_matrix(n_out, n_in + 1, 1);
  const Matrix d = random_matrix(batch, n_out, 3);
  Matrix out;
  for (auto _ : state) {
    Kernel(v, d, out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n_out * n_in * batch));
}

template <auto Kernel>
void weight_gradient(benchmark::State& state) {
  const auto n_out = static_cast<std::size_t>(state.range(0));
  const auto n_in = static_cast<std::size_t>(state.range(1));
  const auto batch = static_cast<std::size_t>(state.range(2));
  const Matrix d = random_matrix(batch, n_out, 3);
  const Matrix a = random_matrix(batch, n_in, 2);
  Matrix g;
  for (auto _ : state) {
    Kernel(d, a, g);
    benchmark::DoNotOptimize(g.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n_out * (n_in + 1) * batch));
}

BENCHMARK(affine_forward<kernels::serial::affine_forward>)->Apply(shapes)->Name("affine_forward/serial");
BENCHMARK(affine_forward<kernels::parallel::affine_forward>)->Apply(shapes)->Name("affine_forward/parallel");
BENCHMARK(backprop_input<kernels::serial::backprop_input>)->Apply(shapes)->Name("backprop_input/serial");
BENCHMARK(backprop_input<kernels::parallel::backprop_input>)->Apply(shapes)->Name("backprop_input/parallel");
BENCHMARK(weight_gradient<kernels::serial::weight_gradient>)->Apply(shapes)->Name("weight_gradient/serial");
BENCHMARK(weight_gradient<kernels::parallel::weight_gradient>)->Apply(shapes)->Name("weight_gradient/parallel");

// Hashed 784 -> 125 layer at 1/8 compression, forward over a batch of 50.
constexpr std::size_t kIn = 784, kOut = 125, kBatch = 50;
constexpr std::uint32_t kBuckets = (kIn + 1) * kOut / 8;

HashedLayer bench_layer(IndexMode mode) {
  HashedLayer layer(kIn, kOut, HashSpec{7, 0, kBuckets}, HashedLayerOptions{true, true, mode});
  layer.init_weights(8);
  return layer;
}

void hashed_forward_reference(benchmark::State& state) {
  const HashedLayer layer = bench_layer(IndexMode::on_the_fly);
  const Matrix a = random_matrix(kBatch, kIn, 2);
  for (auto _ : state) {
    for (std::size_t b = 0; b < kBatch; ++b) benchmark::DoNotOptimize(reference::hashed_forward(layer, a.row(b)));
  }
}

void hashed_forward_batched(benchmark::State& state) {
  const HashedLayer layer = bench_layer(static_cast<IndexMode>(state.range(0)));
  const Matrix a = random_matrix(kBatch, kIn, 2);
  Matrix v, z;
  for (auto _ : state) {
    layer.materialize(v);
    kernels::parallel::affine_forward(v, a, z);
    benchmark::DoNotOptimize(z.data().data());
  }
}

BENCHMARK(hashed_forward_reference)->Name("hashed_forward/reference");
BENCHMARK(hashed_forward_batched)
    ->Arg(static_cast<int>(IndexMode::on_the_fly))
    ->Arg(static_cast<int>(IndexMode::precomputed))
    ->ArgName("precomputed")
    ->Name("hashed_forward/batched");

}  // namespace

BENCHMARK_MAIN();
