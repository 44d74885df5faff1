#include "hashednets/core_math.hpp"

#include <algorithm>
#include <cmath>

#include "hashednets/error.hpp"

namespace hashednets {

ActivationKind parse_activation(std::string_view name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (expected relu, tanh or sigmoid)");
}

std::string_view activation_name(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
  }
  return "relu";
}

double activate(ActivationKind kind, double z) noexcept {
  switch (kind) {
    case ActivationKind::relu: return z > 0.0 ? z : 0.0;
    case ActivationKind::tanh: return std::tanh(z);
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

double activate_derivative(ActivationKind kind, double z) noexcept {
  switch (kind) {
    case ActivationKind::relu: return z > 0.0 ? 1.0 : 0.0;
    case ActivationKind::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case ActivationKind::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

Vector apply_activation(ActivationKind kind, std::span<const double> z) {
  Vector out(z.size());
  std::transform(z.begin(), z.end(), out.begin(), [kind](double v) { return activate(kind, v); });
  return out;
}

Vector activation_derivative(ActivationKind kind, std::span<const double> z) {
  Vector out(z.size());
  std::transform(z.begin(), z.end(), out.begin(),
                 [kind](double v) { return activate_derivative(kind, v); });
  return out;
}

void softmax_inplace(std::span<double> logits) noexcept {
  if (logits.empty()) return;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : logits) v /= total;
}

Vector softmax(std::span<const double> logits) {
  Vector p(logits.begin(), logits.end());
  softmax_inplace(p);
  return p;
}

namespace {

// log-sum-exp with the max subtracted; returns log(sum exp(logits)).
double log_partition(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - peak);
  return peak + std::log(total);
}

}  // namespace

LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t target_class) {
  if (logits.empty()) throw DimensionError("softmax_cross_entropy: empty logits");
  if (target_class >= logits.size()) throw DimensionError("softmax_cross_entropy: class out of range");
  LossGrad out;
  out.loss = log_partition(logits) - logits[target_class];
  out.grad = softmax(logits);
  out.grad[target_class] -= 1.0;
  return out;
}

LossGrad softmax_cross_entropy(std::span<const double> logits, std::span<const double> target) {
  if (logits.empty()) throw DimensionError("softmax_cross_entropy: empty logits");
  if (target.size() != logits.size()) throw DimensionError("softmax_cross_entropy: target size mismatch");
  double mass = 0.0;
  for (double t : target) {
    if (!(t >= 0.0)) throw ConfigError("soft target entries must be non-negative");
    mass += t;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw ConfigError("soft target must sum to 1");

  const double lse = log_partition(logits);
  LossGrad out;
  out.grad = softmax(logits);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (target[k] > 0.0) out.loss += target[k] * (lse - logits[k]);
    out.grad[k] -= target[k];
  }
  return out;
}

std::size_t argmax(std::span<const double> values) noexcept {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace hashednets
