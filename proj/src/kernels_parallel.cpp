#include <algorithm>
#include <cstddef>

#include "hashednets/error.hpp"
#include "hashednets/kernels.hpp"

namespace hashednets::kernels::parallel {
namespace {

constexpr std::size_t kColumnBlock = 256;

inline void axpy(double alpha, const double* __restrict x, double* __restrict y, std::size_t n) {
#pragma omp simd
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

}  // namespace

void affine_forward(const Matrix& v, const Matrix& a, Matrix& z) {
  if (v.cols() != a.cols() + 1) throw DimensionError("affine_forward: input width mismatch");
  const std::size_t batch = a.rows();
  const std::size_t n_in = a.cols();
  const auto n_out = static_cast<std::ptrdiff_t>(v.rows());
  z.assign(batch, v.rows());

  // One row of V stays hot while the whole batch streams past it; four batch
  // rows share each load of the weight row.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n_out; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* w = v.row(i).data() + 1;
    const double bias = v(i, 0);
    std::size_t b = 0;
    for (; b + 4 <= batch; b += 4) {
      const double* a0 = a.row(b).data();
      const double* a1 = a.row(b + 1).data();
      const double* a2 = a.row(b + 2).data();
      const double* a3 = a.row(b + 3).data();
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
      for (std::size_t j = 0; j < n_in; ++j) {
        s0 += w[j] * a0[j];
        s1 += w[j] * a1[j];
        s2 += w[j] * a2[j];
        s3 += w[j] * a3[j];
      }
      z(b, i) = bias + s0;
      z(b + 1, i) = bias + s1;
      z(b + 2, i) = bias + s2;
      z(b + 3, i) = bias + s3;
    }
    for (; b < batch; ++b) {
      const double* ab = a.row(b).data();
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t j = 0; j < n_in; ++j) s += w[j] * ab[j];
      z(b, i) = bias + s;
    }
  }
}

void backprop_input(const Matrix& v, const Matrix& delta, Matrix& out) {
  if (delta.cols() != v.rows()) throw DimensionError("backprop_input: error width mismatch");
  const std::size_t n_in = v.cols() - 1;
  const std::size_t batch = delta.rows();
  out.assign(batch, n_in);
  const auto blocks = static_cast<std::ptrdiff_t>((n_in + kColumnBlock - 1) / kColumnBlock);

  // Threads own disjoint column blocks of the output; rows of V are read once
  // per block.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t j0 = static_cast<std::size_t>(blk) * kColumnBlock;
    const std::size_t width = std::min(kColumnBlock, n_in - j0);
    for (std::size_t i = 0; i < v.rows(); ++i) {
      const double* w = v.row(i).data() + 1 + j0;
      for (std::size_t b = 0; b < batch; ++b) {
        axpy(delta(b, i), w, out.row(b).data() + j0, width);
      }
    }
  }
}

void weight_gradient(const Matrix& delta, const Matrix& a, Matrix& g) {
  if (delta.rows() != a.rows()) throw DimensionError("weight_gradient: batch size mismatch");
  const std::size_t batch = a.rows();
  const std::size_t n_in = a.cols();
  const auto n_out = static_cast<std::ptrdiff_t>(delta.cols());
  g.assign(delta.cols(), n_in + 1);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n_out; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* gi = g.row(i).data();
    double bias = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double d = delta(b, i);
      bias += d;
      axpy(d, a.row(b).data(), gi + 1, n_in);
    }
    gi[0] = bias;
  }
}

void matmul(const Matrix& x, const Matrix& y, Matrix& c) {
  if (x.cols() != y.rows()) throw DimensionError("matmul: inner dimension mismatch");
  c.assign(x.rows(), y.cols());
  const auto rows = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < rows; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    double* cr = c.row(r).data();
    for (std::size_t k = 0; k < x.cols(); ++k) axpy(x(r, k), y.row(k).data(), cr, y.cols());
  }
}

void matmul_tn(const Matrix& x, const Matrix& y, Matrix& c) {
  if (x.rows() != y.rows()) throw DimensionError("matmul_tn: inner dimension mismatch");
  c.assign(x.cols(), y.cols());
  const auto rows = static_cast<std::ptrdiff_t>(x.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < rows; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    double* cr = c.row(r).data();
    for (std::size_t k = 0; k < x.rows(); ++k) axpy(x(k, r), y.row(k).data(), cr, y.cols());
  }
}

}  // namespace hashednets::kernels::parallel
