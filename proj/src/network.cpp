#include "hashednets/network.hpp"

#include <algorithm>
#include <string>

#include "hashednets/error.hpp"
#include "hashednets/kernels.hpp"

namespace hashednets {

Network::Network(std::vector<std::unique_ptr<Layer>> layers, ActivationKind hidden_activation)
    : layers_(std::move(layers)), activation_(hidden_activation) {
  if (layers_.empty()) throw DegenerateArchitecture("a network needs at least one layer");
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    if (layers_[l]->n_out() != layers_[l + 1]->n_in()) {
      throw DimensionError("layer " + std::to_string(l) + " outputs " + std::to_string(layers_[l]->n_out()) +
                           " units but layer " + std::to_string(l + 1) + " expects " +
                           std::to_string(layers_[l + 1]->n_in()));
    }
  }
}

Network::Network(const Network& other) : activation_(other.activation_) {
  layers_.reserve(other.layers_.size());
  for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

std::vector<std::size_t> Network::widths() const {
  std::vector<std::size_t> w;
  if (layers_.empty()) return w;
  w.push_back(layers_.front()->n_in());
  for (const auto& layer : layers_) w.push_back(layer->n_out());
  return w;
}

std::size_t Network::param_count() const noexcept {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer->param_count();
  return total;
}

void Network::init_weights(std::uint64_t seed) {
  for (std::size_t l = 0; l < layers_.size(); ++l) layers_[l]->init_weights(derive_seed(seed, l));
}

Matrix Network::logits(const Matrix& x) const {
  ForwardTrace trace;
  prepare_weights(*this, trace);
  forward_pass(*this, x, trace);
  return std::move(trace.z.back());
}

std::vector<std::uint32_t> Network::predict(const Matrix& x) const {
  const Matrix out = logits(x);
  std::vector<std::uint32_t> labels(out.rows());
  for (std::size_t r = 0; r < out.rows(); ++r) labels[r] = static_cast<std::uint32_t>(argmax(out.row(r)));
  return labels;
}

double Network::error_rate(const Dataset& data) const {
  if (data.size() == 0) return 0.0;
  constexpr std::size_t kChunk = 500;
  ForwardTrace trace;
  prepare_weights(*this, trace);
  std::size_t wrong = 0;
  Matrix chunk;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, data.size() - start);
    chunk.assign(n, data.dim());
    std::copy_n(data.samples.row(start).begin(), n * data.dim(), chunk.data().begin());
    forward_pass(*this, chunk, trace);
    const Matrix& out = trace.z.back();
    for (std::size_t r = 0; r < n; ++r) {
      if (argmax(out.row(r)) != data.labels[start + r]) ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

void prepare_weights(const Network& net, ForwardTrace& trace) {
  trace.virtual_weights.resize(net.layer_count());
  for (std::size_t l = 0; l < net.layer_count(); ++l) net.layer(l).materialize(trace.virtual_weights[l]);
}

void forward_pass(const Network& net, const Matrix& x, ForwardTrace& trace, double dropout_rate, Rng* rng) {
  const std::size_t depth = net.layer_count();
  if (trace.virtual_weights.size() != depth) throw DimensionError("forward_pass: weights not prepared");
  if (x.cols() != net.input_width()) {
    throw DimensionError("forward_pass: input has " + std::to_string(x.cols()) + " features, network expects " +
                         std::to_string(net.input_width()));
  }
  const bool dropout = dropout_rate > 0.0;
  if (dropout && rng == nullptr) throw ConfigError("forward_pass: dropout needs a random generator");
  const double keep_scale = dropout ? 1.0 / (1.0 - dropout_rate) : 1.0;

  trace.a.resize(depth);
  trace.z.resize(depth);
  trace.dropout_scale.resize(dropout ? depth - 1 : 0);
  trace.a[0] = x;
  const ActivationKind act = net.hidden_activation();
  for (std::size_t l = 0; l < depth; ++l) {
    kernels::parallel::affine_forward(trace.virtual_weights[l], trace.a[l], trace.z[l]);
    if (l + 1 == depth) break;
    Matrix& next = trace.a[l + 1];
    const Matrix& z = trace.z[l];
    next.assign(z.rows(), z.cols());
    auto zf = z.data();
    auto nf = next.data();
    for (std::size_t k = 0; k < zf.size(); ++k) nf[k] = activate(act, zf[k]);
    if (dropout) {
      Matrix& scale = trace.dropout_scale[l];
      scale.assign(z.rows(), z.cols());
      auto sf = scale.data();
      for (std::size_t k = 0; k < sf.size(); ++k) {
        sf[k] = rng->uniform01() < dropout_rate ? 0.0 : keep_scale;
        nf[k] *= sf[k];
      }
    }
  }
}

double backward_pass(const Network& net, const ForwardTrace& trace, const Matrix& targets,
                     BackwardTrace& backward, std::vector<Vector>& grads) {
  const std::size_t depth = net.layer_count();
  const Matrix& out = trace.z.back();
  if (targets.rows() != out.rows() || targets.cols() != out.cols()) {
    throw DimensionError("backward_pass: targets do not match the output shape");
  }
  const std::size_t batch = out.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);

  backward.delta.resize(depth);
  Matrix& top = backward.delta.back();
  top.assign(batch, out.cols());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const LossGrad lg = softmax_cross_entropy(out.row(b), targets.row(b));
    loss += lg.loss;
    for (std::size_t k = 0; k < lg.grad.size(); ++k) top(b, k) = lg.grad[k] * inv_batch;
  }

  grads.resize(depth);
  Matrix dense_grad;
  const ActivationKind act = net.hidden_activation();
  for (std::size_t l = depth; l-- > 0;) {
    const Layer& layer = net.layer(l);
    kernels::parallel::weight_gradient(backward.delta[l], trace.a[l], dense_grad);
    grads[l].assign(layer.param_count(), 0.0);
    layer.accumulate_param_grad(dense_grad, grads[l]);
    if (l == 0) break;

    Matrix& below = backward.delta[l - 1];
    kernels::parallel::backprop_input(trace.virtual_weights[l], backward.delta[l], below);
    auto bf = below.data();
    auto zf = trace.z[l - 1].data();
    for (std::size_t k = 0; k < bf.size(); ++k) bf[k] *= activate_derivative(act, zf[k]);
    if (!trace.dropout_scale.empty()) {
      auto sf = trace.dropout_scale[l - 1].data();
      for (std::size_t k = 0; k < bf.size(); ++k) bf[k] *= sf[k];
    }
  }
  return loss * inv_batch;
}

Matrix one_hot(const std::vector<std::uint32_t>& labels, std::size_t classes) {
  Matrix t(labels.size(), classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= classes) throw DimensionError("one_hot: label out of range");
    t(r, labels[r]) = 1.0;
  }
  return t;
}

}  // namespace hashednets
