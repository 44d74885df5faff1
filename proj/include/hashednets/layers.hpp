#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "hashednets/core_math.hpp"
#include "hashednets/hashing.hpp"

namespace hashednets {

enum class LayerKind { standard, hashed, edge_removed, low_rank };

LayerKind parse_layer_kind(std::string_view name);
std::string_view layer_kind_name(LayerKind kind) noexcept;

/// How a hashed layer resolves (i, j) -> (bucket, sign): by hashing on every
/// pass, or from index arrays computed once. Both give identical results.
enum class IndexMode { on_the_fly, precomputed };

IndexMode parse_index_mode(std::string_view name);
std::string_view index_mode_name(IndexMode mode) noexcept;

/// A fully connected layer mapping n_in activations to n_out pre-activations.
///
/// Every kind exposes its weights as an n_out x (n_in + 1) effective matrix
/// (bias in column 0) plus a flat vector of trainable parameters. Training
/// works on the effective matrix and maps the dense gradient back onto the
/// parameters with accumulate_param_grad, which is where the kinds differ.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const noexcept = 0;
  std::size_t n_in() const noexcept { return n_in_; }
  std::size_t n_out() const noexcept { return n_out_; }

  virtual std::span<double> params() noexcept = 0;
  virtual std::span<const double> params() const noexcept = 0;
  std::size_t param_count() const noexcept { return params().size(); }

  /// Writes the effective weight matrix into `v` (resized as needed).
  virtual void materialize(Matrix& v) const = 0;

  /// grad += dL/dparams, given dL/dV for the effective matrix.
  virtual void accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const = 0;

  virtual void init_weights(std::uint64_t seed) = 0;

  virtual std::unique_ptr<Layer> clone() const = 0;

  /// Glorot-uniform half-width sqrt(6 / (n_in + n_out)).
  double glorot_limit() const noexcept;

 protected:
  Layer(std::size_t n_in, std::size_t n_out);
  Layer(const Layer&) = default;
  Layer& operator=(const Layer&) = default;

 private:
  std::size_t n_in_;
  std::size_t n_out_;
};

class StandardLayer final : public Layer {
 public:
  StandardLayer(std::size_t n_in, std::size_t n_out);
  /// Takes an n_out x (n_in + 1) matrix with the bias in column 0.
  explicit StandardLayer(Matrix weights);

  LayerKind kind() const noexcept override { return LayerKind::standard; }
  std::span<double> params() noexcept override { return weights_.data(); }
  std::span<const double> params() const noexcept override { return weights_.data(); }
  void materialize(Matrix& v) const override { v = weights_; }
  void accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const override;
  void init_weights(std::uint64_t seed) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<StandardLayer>(*this); }

  const Matrix& weights() const noexcept { return weights_; }

 private:
  Matrix weights_;
};

struct HashedLayerOptions {
  bool sign_enabled = true;
  /// When true the bias column j = 0 is hashed with the weights. When false
  /// each output unit gets its own free bias parameter.
  bool hash_bias = true;
  IndexMode index_mode = IndexMode::on_the_fly;
};

/// Random weight sharing: V(i, j) = xi(i, j) * w[h(i, j)] over K shared weights.
///
/// Parameters are laid out as [w_0 .. w_{K-1}] followed by n_out free biases
/// when hash_bias is false.
class HashedLayer final : public Layer {
 public:
  HashedLayer(std::size_t n_in, std::size_t n_out, HashSpec spec, HashedLayerOptions options = {});
  HashedLayer(std::size_t n_in, std::size_t n_out, BucketAssignment assignment, bool hash_bias = true,
              IndexMode mode = IndexMode::on_the_fly);

  LayerKind kind() const noexcept override { return LayerKind::hashed; }
  std::span<double> params() noexcept override { return params_; }
  std::span<const double> params() const noexcept override { return params_; }
  void materialize(Matrix& v) const override;
  void accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const override;
  void init_weights(std::uint64_t seed) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<HashedLayer>(*this); }

  std::uint32_t bucket_count() const noexcept { return assignment_.bucket_count(); }
  std::span<double> shared_weights() noexcept { return {params_.data(), bucket_count()}; }
  std::span<const double> shared_weights() const noexcept { return {params_.data(), bucket_count()}; }
  /// Free biases; empty when the bias is hashed.
  std::span<double> free_bias() noexcept;
  std::span<const double> free_bias() const noexcept;

  bool hash_bias() const noexcept { return hash_bias_; }
  bool sign_enabled() const noexcept { return assignment_.sign_enabled(); }
  IndexMode index_mode() const noexcept { return mode_; }
  void set_index_mode(IndexMode mode);
  const BucketAssignment& assignment() const noexcept { return assignment_; }

  /// (bucket, sign) of connection (i, j); j = 0 is the bias column.
  std::uint32_t bucket(std::size_t i, std::size_t j) const;
  int sign(std::size_t i, std::size_t j) const;

  /// V(i, j) without materializing the matrix. Throws DimensionError when
  /// i >= n_out or j > n_in.
  double virtual_weight(std::size_t i, std::size_t j) const;

 private:
  void build_cache();
  std::uint32_t bucket_unchecked(std::size_t i, std::size_t j) const noexcept;
  int sign_unchecked(std::size_t i, std::size_t j) const noexcept;

  BucketAssignment assignment_;
  bool hash_bias_;
  IndexMode mode_;
  Vector params_;
  std::vector<std::uint32_t> cached_buckets_;
  std::vector<std::int8_t> cached_signs_;
};

/// Random edge removal: a fixed random subset of connections is kept and
/// trained; the rest are zero forever.
///
/// Parameters are the kept entries in row-major order, followed by n_out free
/// biases when mask_bias is false.
class EdgeRemovedLayer final : public Layer {
 public:
  /// Keeps exactly `kept` of the maskable entries, drawn from `mask_seed`.
  EdgeRemovedLayer(std::size_t n_in, std::size_t n_out, std::size_t kept, std::uint64_t mask_seed,
                   bool mask_bias = true);

  LayerKind kind() const noexcept override { return LayerKind::edge_removed; }
  std::span<double> params() noexcept override { return params_; }
  std::span<const double> params() const noexcept override { return params_; }
  void materialize(Matrix& v) const override;
  void accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const override;
  void init_weights(std::uint64_t seed) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<EdgeRemovedLayer>(*this); }

  std::uint64_t mask_seed() const noexcept { return mask_seed_; }
  bool mask_bias() const noexcept { return mask_bias_; }
  std::size_t kept() const noexcept { return kept_positions_.size(); }
  std::size_t maskable() const noexcept;
  double keep_probability() const noexcept;
  /// Row-major flat indices into the effective matrix, ascending.
  const std::vector<std::size_t>& kept_positions() const noexcept { return kept_positions_; }
  bool is_kept(std::size_t i, std::size_t j) const;

 private:
  std::uint64_t mask_seed_;
  bool mask_bias_;
  std::vector<std::size_t> kept_positions_;
  Vector params_;
};

/// Low-rank factorisation V = B * A with B (n_out x rank) frozen at
/// N(0, 1 / n_in) and A (rank x (n_in + 1)) trainable.
class LowRankLayer final : public Layer {
 public:
  LowRankLayer(std::size_t n_in, std::size_t n_out, std::size_t rank, std::uint64_t fixed_seed);

  LayerKind kind() const noexcept override { return LayerKind::low_rank; }
  std::span<double> params() noexcept override { return trainable_.data(); }
  std::span<const double> params() const noexcept override { return trainable_.data(); }
  void materialize(Matrix& v) const override;
  void accumulate_param_grad(const Matrix& virtual_grad, std::span<double> grad) const override;
  void init_weights(std::uint64_t seed) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<LowRankLayer>(*this); }

  std::size_t rank() const noexcept { return fixed_.cols(); }
  std::uint64_t fixed_seed() const noexcept { return fixed_seed_; }
  const Matrix& fixed_factor() const noexcept { return fixed_; }
  const Matrix& trainable_factor() const noexcept { return trainable_; }

 private:
  std::uint64_t fixed_seed_;
  Matrix fixed_;
  Matrix trainable_;
};

// Single-sample operations. `a_prev` and `z_prev` have length n_in (the bias
// input is implicit), `delta_next` has length n_out.

Vector forward(const Layer& layer, std::span<const double> a_prev);

/// delta_j = (sum_i V(i, j) delta_next_i) * f'(z_prev_j) for j = 1..n_in.
Vector backward_error(const Layer& layer, std::span<const double> delta_next,
                      std::span<const double> z_prev, ActivationKind activation);

/// dL/dw (length K): sum over (i, j) of a_j delta_i xi(i, j) [h(i, j) = k].
Vector gradient_shared(const HashedLayer& layer, std::span<const double> a_prev,
                       std::span<const double> delta_next);

/// Gradient with respect to the layer's weight matrix: delta a^T for standard
/// and hashed (virtual) layers, masked for edge removal, and B^T delta a^T for
/// the trainable factor of a low-rank layer.
Matrix gradient_standard(const Layer& layer, std::span<const double> a_prev,
                         std::span<const double> delta_next);

/// Formula-literal serial versions of the hashed-layer operations. They hash
/// every connection on each call and never build the virtual matrix; kept as
/// the reference the batched kernels are tested and benchmarked against.
namespace reference {

Vector hashed_forward(const HashedLayer& layer, std::span<const double> a_prev);
Vector hashed_backward_error(const HashedLayer& layer, std::span<const double> delta_next,
                             std::span<const double> z_prev, ActivationKind activation);
Vector hashed_gradient(const HashedLayer& layer, std::span<const double> a_prev,
                       std::span<const double> delta_next);

}  // namespace reference

}  // namespace hashednets
