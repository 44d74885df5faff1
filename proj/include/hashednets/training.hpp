#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hashednets/core_math.hpp"
#include "hashednets/data.hpp"
#include "hashednets/network.hpp"

namespace hashednets {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double dropout_rate = 0.0;
  std::size_t batch_size = 50;
  std::size_t epochs = 10;
  std::uint64_t rng_seed = 1;
  /// Distillation temperature and hard-label weight; used only when the
  /// training set carries soft targets.
  double dk_temperature = 2.0;
  double dk_mix = 0.5;

  /// Throws ConfigError for out-of-range values.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// Error of the training-mode predictions made during the epoch.
  double train_err = 0.0;
  double test_err = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  double final_test_error() const { return epochs.empty() ? 1.0 : epochs.back().test_err; }
};

/// Mini-batch SGD with momentum (v <- mu v - eta g; w <- w + v) and inverted
/// dropout on hidden activations. Samples are reshuffled every epoch. The whole
/// run is a pure function of the network's initial weights, the data and the
/// config. Throws DivergenceError on a non-finite loss.
TrainingLog train(Network& net, const Dataset& train_set, const Dataset* test_set, const TrainConfig& config);

/// Target rows for a batch: one-hot labels, or with soft targets present
/// dk_mix * one_hot + (1 - dk_mix) * soft.
Matrix batch_targets(const Dataset& data, const std::vector<std::size_t>& rows, double dk_mix);

/// Teacher softmax at temperature T for every sample. Throws ConfigError for T <= 0.
Matrix distill_targets(const Network& teacher, const Dataset& data, double temperature);

/// CSV with header epoch,train_loss,train_err,test_err.
void write_log_csv(const TrainingLog& log, std::ostream& out);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_layer = 0;
  std::size_t worst_param = 0;
  std::size_t params_checked = 0;
};

/// Relative-error floor: |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Compares backprop gradients of the mean cross-entropy over the samples with
/// central differences (L(w + eps) - L(w - eps)) / 2 eps for every trainable
/// parameter. The finite differences evaluate the loss in long double, so they
/// resolve gradients far below the rounding level of a double loss. Dropout is
/// off. Use tanh or sigmoid activations; relu kinks make
/// the finite differences meaningless.
GradCheckResult grad_check(Network& net, const Matrix& samples, const std::vector<std::uint32_t>& labels,
                           double epsilon = 1e-5);

/// Analytic gradients for every layer of the mean cross-entropy loss.
double loss_and_gradients(const Network& net, const Matrix& samples, const Matrix& targets,
                          std::vector<Vector>& grads);

}  // namespace hashednets
