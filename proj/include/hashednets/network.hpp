#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "hashednets/core_math.hpp"
#include "hashednets/data.hpp"
#include "hashednets/layers.hpp"
#include "hashednets/random.hpp"

namespace hashednets {

/// Feed-forward classifier: a chain of layers (any mix of kinds), one hidden
/// activation, softmax output.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<std::unique_ptr<Layer>> layers,
                   ActivationKind hidden_activation = ActivationKind::relu);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Number of weight layers (L - 1).
  std::size_t layer_count() const noexcept { return layers_.size(); }
  const Layer& layer(std::size_t l) const { return *layers_.at(l); }
  Layer& layer(std::size_t l) { return *layers_.at(l); }

  /// Unit counts n^1..n^L.
  std::vector<std::size_t> widths() const;
  std::size_t input_width() const { return layers_.front()->n_in(); }
  std::size_t output_width() const { return layers_.back()->n_out(); }

  ActivationKind hidden_activation() const noexcept { return activation_; }
  void set_hidden_activation(ActivationKind kind) noexcept { activation_ = kind; }

  std::size_t param_count() const noexcept;

  /// Initialises layer l from derive_seed(seed, l).
  void init_weights(std::uint64_t seed);

  /// Output pre-activations for a batch (rows = samples).
  Matrix logits(const Matrix& x) const;
  std::vector<std::uint32_t> predict(const Matrix& x) const;
  double error_rate(const Dataset& data) const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  ActivationKind activation_ = ActivationKind::relu;
};

/// Per-layer quantities of one forward pass over a batch. With layers indexed
/// l = 0..L-2: a[l] is the input of layer l (a[0] is the batch), z[l] its
/// output, and a[l + 1] = f(z[l]) * dropout_scale[l] for hidden layers.
struct ForwardTrace {
  std::vector<Matrix> virtual_weights;
  std::vector<Matrix> a;
  std::vector<Matrix> z;
  /// Inverted-dropout multipliers (0 or 1 / (1 - p)); empty without dropout.
  std::vector<Matrix> dropout_scale;
};

/// delta[l] = dL/dz[l].
struct BackwardTrace {
  std::vector<Matrix> delta;
};

/// Materializes each layer's effective weights into the trace.
void prepare_weights(const Network& net, ForwardTrace& trace);

/// Runs the batch through the network using the weights already in `trace`.
/// A positive dropout_rate draws masks for every hidden activation from `rng`.
void forward_pass(const Network& net, const Matrix& x, ForwardTrace& trace, double dropout_rate = 0.0,
                  Rng* rng = nullptr);

/// Mean softmax cross-entropy of the batch against target rows and the
/// parameter gradients of every layer (overwritten, not accumulated).
double backward_pass(const Network& net, const ForwardTrace& trace, const Matrix& targets,
                     BackwardTrace& backward, std::vector<Vector>& grads);

/// One-hot rows for `labels`.
Matrix one_hot(const std::vector<std::uint32_t>& labels, std::size_t classes);

}  // namespace hashednets
