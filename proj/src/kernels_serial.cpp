#include "hashednets/error.hpp"
#include "hashednets/kernels.hpp"

namespace hashednets::kernels::serial {

void affine_forward(const Matrix& v, const Matrix& a, Matrix& z) {
  if (v.cols() != a.cols() + 1) throw DimensionError("affine_forward: input width mismatch");
  z.assign(a.rows(), v.rows());
  for (std::size_t b = 0; b < a.rows(); ++b) {
    for (std::size_t i = 0; i < v.rows(); ++i) {
      double sum = v(i, 0);
      for (std::size_t j = 0; j < a.cols(); ++j) sum += v(i, j + 1) * a(b, j);
      z(b, i) = sum;
    }
  }
}

void backprop_input(const Matrix& v, const Matrix& delta, Matrix& out) {
  if (delta.cols() != v.rows()) throw DimensionError("backprop_input: error width mismatch");
  const std::size_t n_in = v.cols() - 1;
  out.assign(delta.rows(), n_in);
  for (std::size_t b = 0; b < delta.rows(); ++b) {
    for (std::size_t j = 0; j < n_in; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < v.rows(); ++i) sum += delta(b, i) * v(i, j + 1);
      out(b, j) = sum;
    }
  }
}

void weight_gradient(const Matrix& delta, const Matrix& a, Matrix& g) {
  if (delta.rows() != a.rows()) throw DimensionError("weight_gradient: batch size mismatch");
  g.assign(delta.cols(), a.cols() + 1);
  for (std::size_t i = 0; i < delta.cols(); ++i) {
    double bias = 0.0;
    for (std::size_t b = 0; b < delta.rows(); ++b) bias += delta(b, i);
    g(i, 0) = bias;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t b = 0; b < delta.rows(); ++b) sum += delta(b, i) * a(b, j);
      g(i, j + 1) = sum;
    }
  }
}

void matmul(const Matrix& x, const Matrix& y, Matrix& c) {
  if (x.cols() != y.rows()) throw DimensionError("matmul: inner dimension mismatch");
  c.assign(x.rows(), y.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t col = 0; col < y.cols(); ++col) {
      double sum = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) sum += x(r, k) * y(k, col);
      c(r, col) = sum;
    }
  }
}

void matmul_tn(const Matrix& x, const Matrix& y, Matrix& c) {
  if (x.rows() != y.rows()) throw DimensionError("matmul_tn: inner dimension mismatch");
  c.assign(x.cols(), y.cols());
  for (std::size_t r = 0; r < x.cols(); ++r) {
    for (std::size_t col = 0; col < y.cols(); ++col) {
      double sum = 0.0;
      for (std::size_t k = 0; k < x.rows(); ++k) sum += x(k, r) * y(k, col);
      c(r, col) = sum;
    }
  }
}

}  // namespace hashednets::kernels::serial
