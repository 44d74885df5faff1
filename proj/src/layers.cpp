#include "hashednets/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hashednets/error.hpp"
#include "hashednets/kernels.hpp"
#include "hashednets/random.hpp"

namespace hashednets {

LayerKind parse_layer_kind(std::string_view name) {
  if (name == "standard") return LayerKind::standard;
  if (name == "hashed") return LayerKind::hashed;
  if (name == "edge_removed") return LayerKind::edge_removed;
  if (name == "low_rank") return LayerKind::low_rank;
  throw ConfigError("unknown layer kind '" + std::string(name) +
                    "' (expected standard, hashed, edge_removed or low_rank)");
}

std::string_view layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::standard: return "standard";
    case LayerKind::hashed: return "hashed";
    case LayerKind::edge_removed: return "edge_removed";
    case LayerKind::low_rank: return "low_rank";
  }
  return "standard";
}

IndexMode parse_index_mode(std::string_view name) {
  if (name == "on_the_fly") return IndexMode::on_the_fly;
  if (name == "precomputed") return IndexMode::precomputed;
  throw ConfigError("unknown index mode '" + std::string(name) +
                    "' (expected on_the_fly or precomputed)");
}

std::string_view index_mode_name(IndexMode mode) noexcept {
  return mode == IndexMode::precomputed ? "precomputed" : "on_the_fly";
}

Layer::Layer(std::size_t n_in, std::size_t n_out) : n_in_(n_in), n_out_(n_out) {
  if (n_in == 0 || n_out == 0) throw DimensionError("layer widths must be at least 1");
}

double Layer::glorot_limit() const noexcept {
  return std::sqrt(6.0 / static_cast<double>(n_in_ + n_out_));
}

// ---------------------------------------------------------------------------
// StandardLayer

StandardLayer::StandardLayer(std::size_t n_in, std::size_t n_out)
    : Layer(n_in, n_out), weights_(n_out, n_in + 1) {}

StandardLayer::StandardLayer(Matrix weights)
    : Layer(weights.cols() == 0 ? 0 : weights.cols() - 1, weights.rows()), weights_(std::move(weights)) {}

void StandardLayer::accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const {
  if (virtual_grad.rows() != n_out() || virtual_grad.cols() != n_in() + 1 ||
      grad.size() != param_count()) {
    throw DimensionError("StandardLayer: gradient shape mismatch");
  }
  const auto g = virtual_grad.data();
  for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
}

void StandardLayer::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  const double limit = glorot_limit();
  for (std::size_t i = 0; i < n_out(); ++i) {
    weights_(i, 0) = 0.0;
    for (std::size_t j = 1; j <= n_in(); ++j) weights_(i, j) = rng.uniform(-limit, limit);
  }
}

// ---------------------------------------------------------------------------
// HashedLayer

namespace {

void check_hash_dims(std::size_t n_in, std::size_t n_out) {
  constexpr std::size_t kMax = std::numeric_limits<std::uint32_t>::max();
  if (n_in + 1 > kMax || n_out > kMax) throw DimensionError("hashed layer too wide for 32-bit keys");
}

}  // namespace

HashedLayer::HashedLayer(std::size_t n_in, std::size_t n_out, HashSpec spec, HashedLayerOptions options)
    : HashedLayer(n_in, n_out, BucketAssignment::seeded(spec, options.sign_enabled), options.hash_bias,
                  options.index_mode) {}

HashedLayer::HashedLayer(std::size_t n_in, std::size_t n_out, BucketAssignment assignment, bool hash_bias,
                         IndexMode mode)
    : Layer(n_in, n_out), assignment_(std::move(assignment)), hash_bias_(hash_bias), mode_(mode) {
  check_hash_dims(n_in, n_out);
  if (!assignment_.is_seeded()) {
    if (assignment_.table_cols() != n_in + 1 ||
        assignment_.table_buckets().size() != n_out * (n_in + 1)) {
      throw DimensionError("bucket table does not cover an n_out x (n_in + 1) layer");
    }
  }
  params_.assign(bucket_count() + (hash_bias_ ? 0 : n_out), 0.0);
  if (mode_ == IndexMode::precomputed) build_cache();
}

std::span<double> HashedLayer::free_bias() noexcept {
  if (hash_bias_) return {};
  return {params_.data() + bucket_count(), n_out()};
}

std::span<const double> HashedLayer::free_bias() const noexcept {
  if (hash_bias_) return {};
  return {params_.data() + bucket_count(), n_out()};
}

void HashedLayer::set_index_mode(IndexMode mode) {
  mode_ = mode;
  if (mode_ == IndexMode::precomputed) {
    build_cache();
  } else {
    cached_buckets_.clear();
    cached_buckets_.shrink_to_fit();
    cached_signs_.clear();
    cached_signs_.shrink_to_fit();
  }
}

void HashedLayer::build_cache() {
  const std::size_t cols = n_in() + 1;
  cached_buckets_.resize(n_out() * cols);
  cached_signs_.resize(n_out() * cols);
  const auto rows = static_cast<std::ptrdiff_t>(n_out());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < cols; ++j) {
      cached_buckets_[i * cols + j] = assignment_.bucket(i, j);
      cached_signs_[i * cols + j] = static_cast<std::int8_t>(assignment_.sign(i, j));
    }
  }
}

std::uint32_t HashedLayer::bucket_unchecked(std::size_t i, std::size_t j) const noexcept {
  if (mode_ == IndexMode::precomputed) return cached_buckets_[i * (n_in() + 1) + j];
  return assignment_.bucket(i, j);
}

int HashedLayer::sign_unchecked(std::size_t i, std::size_t j) const noexcept {
  if (mode_ == IndexMode::precomputed) return cached_signs_[i * (n_in() + 1) + j];
  return assignment_.sign(i, j);
}

std::uint32_t HashedLayer::bucket(std::size_t i, std::size_t j) const {
  if (i >= n_out() || j > n_in()) throw DimensionError("connection index out of range");
  return bucket_unchecked(i, j);
}

int HashedLayer::sign(std::size_t i, std::size_t j) const {
  if (i >= n_out() || j > n_in()) throw DimensionError("connection index out of range");
  return sign_unchecked(i, j);
}

double HashedLayer::virtual_weight(std::size_t i, std::size_t j) const {
  if (i >= n_out() || j > n_in()) throw DimensionError("virtual_weight: index out of range");
  if (j == 0 && !hash_bias_) return params_[bucket_count() + i];
  return sign_unchecked(i, j) * params_[bucket_unchecked(i, j)];
}

void HashedLayer::materialize(Matrix& v) const {
  const std::size_t cols = n_in() + 1;
  v.assign(n_out(), cols);
  const double* w = params_.data();
  const auto rows = static_cast<std::ptrdiff_t>(n_out());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* vi = v.row(i).data();
    std::size_t j = 0;
    if (!hash_bias_) {
      vi[0] = w[bucket_count() + i];
      j = 1;
    }
    if (mode_ == IndexMode::precomputed) {
      const std::uint32_t* idx = cached_buckets_.data() + i * cols;
      const std::int8_t* sgn = cached_signs_.data() + i * cols;
      for (; j < cols; ++j) vi[j] = sgn[j] * w[idx[j]];
    } else {
      for (; j < cols; ++j) vi[j] = assignment_.sign(i, j) * w[assignment_.bucket(i, j)];
    }
  }
}

void HashedLayer::accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const {
  const std::size_t cols = n_in() + 1;
  if (virtual_grad.rows() != n_out() || virtual_grad.cols() != cols || grad.size() != param_count()) {
    throw DimensionError("HashedLayer: gradient shape mismatch");
  }
  // Serial scatter in (i, j) order so both index modes and every thread count
  // produce the same sums.
  const std::size_t k = bucket_count();
  for (std::size_t i = 0; i < n_out(); ++i) {
    const double* gi = virtual_grad.row(i).data();
    std::size_t j = 0;
    if (!hash_bias_) {
      grad[k + i] += gi[0];
      j = 1;
    }
    if (mode_ == IndexMode::precomputed) {
      const std::uint32_t* idx = cached_buckets_.data() + i * cols;
      const std::int8_t* sgn = cached_signs_.data() + i * cols;
      for (; j < cols; ++j) grad[idx[j]] += sgn[j] * gi[j];
    } else {
      for (; j < cols; ++j) grad[assignment_.bucket(i, j)] += assignment_.sign(i, j) * gi[j];
    }
  }
}

void HashedLayer::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  const double limit = glorot_limit();
  for (double& w : shared_weights()) w = rng.uniform(-limit, limit);
  for (double& b : free_bias()) b = 0.0;
}

// ---------------------------------------------------------------------------
// EdgeRemovedLayer

EdgeRemovedLayer::EdgeRemovedLayer(std::size_t n_in, std::size_t n_out, std::size_t kept,
                                   std::uint64_t mask_seed, bool mask_bias)
    : Layer(n_in, n_out), mask_seed_(mask_seed), mask_bias_(mask_bias) {
  const std::size_t total = maskable();
  if (kept > total) {
    throw ConfigError("edge removal keeps " + std::to_string(kept) + " of only " +
                      std::to_string(total) + " connections");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mask_seed);
  for (std::size_t s = 0; s < kept; ++s) {
    const std::size_t pick = s + rng.below(total - s);
    std::swap(order[s], order[pick]);
  }
  order.resize(kept);
  std::sort(order.begin(), order.end());

  kept_positions_.reserve(kept);
  for (std::size_t m : order) {
    if (mask_bias_) {
      kept_positions_.push_back(m);
    } else {
      const std::size_t i = m / n_in;
      const std::size_t j = m % n_in + 1;
      kept_positions_.push_back(i * (n_in + 1) + j);
    }
  }
  params_.assign(kept + (mask_bias_ ? 0 : n_out), 0.0);
}

std::size_t EdgeRemovedLayer::maskable() const noexcept {
  return mask_bias_ ? n_out() * (n_in() + 1) : n_out() * n_in();
}

double EdgeRemovedLayer::keep_probability() const noexcept {
  return static_cast<double>(kept()) / static_cast<double>(maskable());
}

bool EdgeRemovedLayer::is_kept(std::size_t i, std::size_t j) const {
  if (i >= n_out() || j > n_in()) throw DimensionError("is_kept: index out of range");
  if (j == 0 && !mask_bias_) return true;
  return std::binary_search(kept_positions_.begin(), kept_positions_.end(), i * (n_in() + 1) + j);
}

void EdgeRemovedLayer::materialize(Matrix& v) const {
  v.assign(n_out(), n_in() + 1);
  auto flat = v.data();
  for (std::size_t s = 0; s < kept_positions_.size(); ++s) flat[kept_positions_[s]] = params_[s];
  if (!mask_bias_) {
    for (std::size_t i = 0; i < n_out(); ++i) v(i, 0) = params_[kept() + i];
  }
}

void EdgeRemovedLayer::accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const {
  if (virtual_grad.rows() != n_out() || virtual_grad.cols() != n_in() + 1 ||
      grad.size() != param_count()) {
    throw DimensionError("EdgeRemovedLayer: gradient shape mismatch");
  }
  const auto g = virtual_grad.data();
  for (std::size_t s = 0; s < kept_positions_.size(); ++s) grad[s] += g[kept_positions_[s]];
  if (!mask_bias_) {
    for (std::size_t i = 0; i < n_out(); ++i) grad[kept() + i] += virtual_grad(i, 0);
  }
}

void EdgeRemovedLayer::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  const double limit = glorot_limit();
  const std::size_t cols = n_in() + 1;
  for (std::size_t s = 0; s < kept_positions_.size(); ++s) {
    params_[s] = kept_positions_[s] % cols == 0 ? 0.0 : rng.uniform(-limit, limit);
  }
  for (std::size_t i = kept(); i < params_.size(); ++i) params_[i] = 0.0;
}

// ---------------------------------------------------------------------------
// LowRankLayer

LowRankLayer::LowRankLayer(std::size_t n_in, std::size_t n_out, std::size_t rank, std::uint64_t fixed_seed)
    : Layer(n_in, n_out), fixed_seed_(fixed_seed), fixed_(n_out, rank), trainable_(rank, n_in + 1) {
  if (rank == 0) throw ConfigError("low-rank layer needs rank >= 1");
  Rng rng(fixed_seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_in));
  for (double& b : fixed_.data()) b = scale * rng.normal();
}

void LowRankLayer::materialize(Matrix& v) const { kernels::parallel::matmul(fixed_, trainable_, v); }

void LowRankLayer::accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const {
  if (virtual_grad.rows() != n_out() || virtual_grad.cols() != n_in() + 1 ||
      grad.size() != param_count()) {
    throw DimensionError("LowRankLayer: gradient shape mismatch");
  }
  Matrix grad_a;
  kernels::parallel::matmul_tn(fixed_, virtual_grad, grad_a);
  const auto g = grad_a.data();
  for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
}

void LowRankLayer::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(rank() + n_in()));
  for (double& a : trainable_.data()) a = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------------------
// Single-sample operations

namespace {

Matrix as_row(std::span<const double> values) {
  Matrix m(1, values.size());
  std::copy(values.begin(), values.end(), m.data().begin());
  return m;
}

void check_len(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                         std::to_string(v.size()));
  }
}

Matrix dense_gradient(const Layer& layer, std::span<const double> a_prev,
                      std::span<const double> delta_next) {
  check_len(a_prev, layer.n_in(), "a_prev");
  check_len(delta_next, layer.n_out(), "delta_next");
  Matrix g;
  kernels::parallel::weight_gradient(as_row(delta_next), as_row(a_prev), g);
  return g;
}

}  // namespace

Vector forward(const Layer& layer, std::span<const double> a_prev) {
  check_len(a_prev, layer.n_in(), "forward");
  Matrix v, z;
  layer.materialize(v);
  kernels::parallel::affine_forward(v, as_row(a_prev), z);
  const auto row = z.row(0);
  return Vector(row.begin(), row.end());
}

Vector backward_error(const Layer& layer, std::span<const double> delta_next,
                      std::span<const double> z_prev, ActivationKind activation) {
  check_len(delta_next, layer.n_out(), "backward_error delta");
  check_len(z_prev, layer.n_in(), "backward_error z_prev");
  Matrix v, out;
  layer.materialize(v);
  kernels::parallel::backprop_input(v, as_row(delta_next), out);
  Vector delta(out.row(0).begin(), out.row(0).end());
  for (std::size_t j = 0; j < delta.size(); ++j) delta[j] *= activate_derivative(activation, z_prev[j]);
  return delta;
}

Vector gradient_shared(const HashedLayer& layer, std::span<const double> a_prev,
                       std::span<const double> delta_next) {
  const Matrix g = dense_gradient(layer, a_prev, delta_next);
  Vector grad(layer.param_count(), 0.0);
  layer.accumulate_param_grad(g, grad);
  grad.resize(layer.bucket_count());
  return grad;
}

Matrix gradient_standard(const Layer& layer, std::span<const double> a_prev,
                         std::span<const double> delta_next) {
  Matrix g = dense_gradient(layer, a_prev, delta_next);
  switch (layer.kind()) {
    case LayerKind::standard:
    case LayerKind::hashed:
      return g;
    case LayerKind::edge_removed: {
      const auto& edge = static_cast<const EdgeRemovedLayer&>(layer);
      Matrix masked(g.rows(), g.cols());
      for (std::size_t pos : edge.kept_positions()) masked.data()[pos] = g.data()[pos];
      if (!edge.mask_bias()) {
        for (std::size_t i = 0; i < g.rows(); ++i) masked(i, 0) = g(i, 0);
      }
      return masked;
    }
    case LayerKind::low_rank: {
      const auto& low = static_cast<const LowRankLayer&>(layer);
      Matrix grad_a;
      kernels::parallel::matmul_tn(low.fixed_factor(), g, grad_a);
      return grad_a;
    }
  }
  return g;
}

namespace reference {

Vector hashed_forward(const HashedLayer& layer, std::span<const double> a_prev) {
  check_len(a_prev, layer.n_in(), "hashed_forward");
  const auto& map = layer.assignment();
  const auto w = layer.shared_weights();
  Vector z(layer.n_out(), 0.0);
  for (std::size_t i = 0; i < layer.n_out(); ++i) {
    double sum = layer.hash_bias() ? 0.0 : layer.free_bias()[i];
    for (std::size_t j = 0; j <= layer.n_in(); ++j) {
      if (j == 0 && !layer.hash_bias()) continue;
      const double a = j == 0 ? 1.0 : a_prev[j - 1];
      sum += map.sign(i, j) * w[map.bucket(i, j)] * a;
    }
    z[i] = sum;
  }
  return z;
}

Vector hashed_backward_error(const HashedLayer& layer, std::span<const double> delta_next,
                             std::span<const double> z_prev, ActivationKind activation) {
  check_len(delta_next, layer.n_out(), "hashed_backward_error delta");
  check_len(z_prev, layer.n_in(), "hashed_backward_error z_prev");
  const auto& map = layer.assignment();
  const auto w = layer.shared_weights();
  Vector delta(layer.n_in(), 0.0);
  for (std::size_t j = 1; j <= layer.n_in(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < layer.n_out(); ++i) {
      sum += map.sign(i, j) * w[map.bucket(i, j)] * delta_next[i];
    }
    delta[j - 1] = sum * activate_derivative(activation, z_prev[j - 1]);
  }
  return delta;
}

Vector hashed_gradient(const HashedLayer& layer, std::span<const double> a_prev,
                       std::span<const double> delta_next) {
  check_len(a_prev, layer.n_in(), "hashed_gradient a_prev");
  check_len(delta_next, layer.n_out(), "hashed_gradient delta");
  const auto& map = layer.assignment();
  Vector grad(layer.bucket_count(), 0.0);
  for (std::size_t i = 0; i < layer.n_out(); ++i) {
    for (std::size_t j = 0; j <= layer.n_in(); ++j) {
      if (j == 0 && !layer.hash_bias()) continue;
      const double a = j == 0 ? 1.0 : a_prev[j - 1];
      grad[map.bucket(i, j)] += a * delta_next[i] * map.sign(i, j);
    }
  }
  return grad;
}

}  // namespace reference

}  // namespace hashednets
