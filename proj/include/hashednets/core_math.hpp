#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hashednets {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Reshapes and zero-fills; reuses the allocation when possible.
  void assign(std::size_t rows, std::size_t cols, double fill = 0.0) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, fill);
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ActivationKind { relu, tanh, sigmoid };

ActivationKind parse_activation(std::string_view name);
std::string_view activation_name(ActivationKind kind) noexcept;

double activate(ActivationKind kind, double z) noexcept;
/// f'(z). relu'(0) is 0.
double activate_derivative(ActivationKind kind, double z) noexcept;

Vector apply_activation(ActivationKind kind, std::span<const double> z);
Vector activation_derivative(ActivationKind kind, std::span<const double> z);

struct LossGrad {
  double loss = 0.0;
  Vector grad;  // dL/dlogits = softmax(logits) - target
};

/// Max-subtracted softmax.
Vector softmax(std::span<const double> logits);
void softmax_inplace(std::span<double> logits) noexcept;

LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t target_class);
/// Soft target: non-negative entries summing to 1 within 1e-9.
LossGrad softmax_cross_entropy(std::span<const double> logits, std::span<const double> target);

std::size_t argmax(std::span<const double> values) noexcept;

}  // namespace hashednets
