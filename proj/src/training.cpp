#include "hashednets/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "hashednets/error.hpp"
#include "hashednets/random.hpp"

namespace hashednets {
namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(dk_temperature > 0.0)) throw ConfigError("distillation temperature must be positive");
  if (!(dk_mix >= 0.0 && dk_mix <= 1.0)) throw ConfigError("distillation mix must lie in [0, 1]");
}

Matrix batch_targets(const Dataset& data, const std::vector<std::size_t>& rows, double dk_mix) {
  const std::size_t classes = data.class_count;
  Matrix t(rows.size(), classes);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    if (data.soft_targets) {
      const auto soft = data.soft_targets->row(src);
      for (std::size_t k = 0; k < classes; ++k) t(r, k) = (1.0 - dk_mix) * soft[k];
      t(r, data.labels[src]) += dk_mix;
    } else {
      t(r, data.labels[src]) = 1.0;
    }
  }
  return t;
}

TrainingLog train(Network& net, const Dataset& train_set, const Dataset* test_set, const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0) throw ConfigError("training set is empty");
  if (train_set.dim() != net.input_width()) {
    throw DimensionError("training data has " + std::to_string(train_set.dim()) +
                         " features, network expects " + std::to_string(net.input_width()));
  }
  if (train_set.class_count > net.output_width()) {
    throw DimensionError("network has fewer outputs than the data has classes");
  }
  const std::size_t classes = net.output_width();

  Rng shuffle_rng(derive_seed(config.rng_seed, kShuffleStream));
  Rng dropout_rng(derive_seed(config.rng_seed, kDropoutStream));

  std::vector<Vector> velocity(net.layer_count());
  for (std::size_t l = 0; l < net.layer_count(); ++l) velocity[l].assign(net.layer(l).param_count(), 0.0);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ForwardTrace trace;
  BackwardTrace backward;
  std::vector<Vector> grads;
  std::vector<std::size_t> rows;
  Matrix x;

  TrainingLog log;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t wrong = 0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                  order.begin() + static_cast<std::ptrdiff_t>(start + n));
      x.assign(n, train_set.dim());
      for (std::size_t r = 0; r < n; ++r) {
        std::copy_n(train_set.samples.row(rows[r]).begin(), train_set.dim(), x.row(r).begin());
      }
      Matrix targets = batch_targets(train_set, rows, config.dk_mix);
      if (targets.cols() != classes) {
        Matrix widened(n, classes);
        for (std::size_t r = 0; r < n; ++r) std::copy_n(targets.row(r).begin(), targets.cols(), widened.row(r).begin());
        targets = std::move(widened);
      }

      prepare_weights(net, trace);
      forward_pass(net, x, trace, config.dropout_rate, &dropout_rng);
      const double loss = backward_pass(net, trace, targets, backward, grads);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batches + 1));
      }
      loss_sum += loss;
      ++batches;
      const Matrix& out = trace.z.back();
      for (std::size_t r = 0; r < n; ++r) {
        if (argmax(out.row(r)) != train_set.labels[rows[r]]) ++wrong;
      }

      for (std::size_t l = 0; l < net.layer_count(); ++l) {
        auto params = net.layer(l).params();
        Vector& v = velocity[l];
        const Vector& g = grads[l];
        for (std::size_t k = 0; k < params.size(); ++k) {
          v[k] = config.momentum * v[k] - config.learning_rate * g[k];
          params[k] += v[k];
        }
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.train_err = static_cast<double>(wrong) / static_cast<double>(order.size());
    record.test_err = test_set != nullptr ? net.error_rate(*test_set) : 0.0;
    log.epochs.push_back(record);
  }
  return log;
}

Matrix distill_targets(const Network& teacher, const Dataset& data, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("distillation temperature must be positive");
  Matrix soft = teacher.logits(data.samples);
  for (std::size_t r = 0; r < soft.rows(); ++r) {
    auto row = soft.row(r);
    for (double& v : row) v /= temperature;
    softmax_inplace(row);
  }
  return soft;
}

void write_log_csv(const TrainingLog& log, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "epoch,train_loss,train_err,test_err\n";
  for (const auto& r : log.epochs) {
    out << r.epoch << ',' << r.train_loss << ',' << r.train_err << ',' << r.test_err << '\n';
  }
  out.precision(old_precision);
}

double loss_and_gradients(const Network& net, const Matrix& samples, const Matrix& targets,
                          std::vector<Vector>& grads) {
  ForwardTrace trace;
  BackwardTrace backward;
  prepare_weights(net, trace);
  forward_pass(net, samples, trace);
  return backward_pass(net, trace, targets, backward, grads);
}

namespace {

using Wide = long double;

Wide wide_activate(ActivationKind kind, Wide x) {
  switch (kind) {
    case ActivationKind::relu:
      return x > 0 ? x : Wide{0};
    case ActivationKind::tanh:
      return std::tanh(x);
    case ActivationKind::sigmoid:
      return Wide{1} / (Wide{1} + std::exp(-x));
  }
  return x;
}

// Effective matrix of a layer in extended precision. Only the low-rank product
// rounds in double, so it is recomputed here.
std::vector<Wide> wide_effective(const Layer& layer) {
  const std::size_t rows = layer.n_out();
  const std::size_t cols = layer.n_in() + 1;
  std::vector<Wide> v(rows * cols);
  if (layer.kind() == LayerKind::low_rank) {
    const auto& lr = static_cast<const LowRankLayer&>(layer);
    const Matrix& b = lr.fixed_factor();
    const Matrix& a = lr.trainable_factor();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        Wide sum = 0;
        for (std::size_t r = 0; r < lr.rank(); ++r) sum += static_cast<Wide>(b(i, r)) * a(r, j);
        v[i * cols + j] = sum;
      }
    }
  } else {
    Matrix m;
    layer.materialize(m);
    const auto flat = m.data();
    std::copy(flat.begin(), flat.end(), v.begin());
  }
  return v;
}

// Mean cross-entropy in extended precision, so that central differences are
// limited by truncation rather than by rounding of the loss.
Wide wide_loss(const Network& net, const Matrix& samples, const Matrix& targets) {
  std::vector<std::vector<Wide>> weights;
  for (std::size_t l = 0; l < net.layer_count(); ++l) weights.push_back(wide_effective(net.layer(l)));
  Wide total = 0;
  std::vector<Wide> a, z;
  for (std::size_t b = 0; b < samples.rows(); ++b) {
    a.assign(samples.row(b).begin(), samples.row(b).end());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const Layer& layer = net.layer(l);
      const std::size_t cols = layer.n_in() + 1;
      z.assign(layer.n_out(), 0);
      for (std::size_t i = 0; i < layer.n_out(); ++i) {
        Wide sum = weights[l][i * cols];
        for (std::size_t j = 0; j < layer.n_in(); ++j) sum += weights[l][i * cols + j + 1] * a[j];
        z[i] = sum;
      }
      if (l + 1 == net.layer_count()) break;
      a.resize(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = wide_activate(net.hidden_activation(), z[i]);
    }
    const Wide top = *std::max_element(z.begin(), z.end());
    Wide norm = 0;
    for (Wide v : z) norm += std::exp(v - top);
    const Wide log_norm = top + std::log(norm);
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double t = targets(b, k);
      if (t != 0.0) total -= t * (z[k] - log_norm);
    }
  }
  return total / static_cast<Wide>(samples.rows());
}

}  // namespace

GradCheckResult grad_check(Network& net, const Matrix& samples, const std::vector<std::uint32_t>& labels,
                           double epsilon) {
  const Matrix targets = one_hot(labels, net.output_width());
  std::vector<Vector> analytic;
  loss_and_gradients(net, samples, targets, analytic);

  auto loss_at = [&]() { return wide_loss(net, samples, targets); };

  GradCheckResult result;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto params = net.layer(l).params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      params[k] = saved + epsilon;
      const Wide up = loss_at();
      params[k] = saved - epsilon;
      const Wide down = loss_at();
      params[k] = saved;

      const auto numeric = static_cast<double>((up - down) / (2 * static_cast<Wide>(epsilon)));
      const double a = analytic[l][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_layer = l;
        result.worst_param = k;
      }
      ++result.params_checked;
    }
  }
  return result;
}

}  // namespace hashednets
