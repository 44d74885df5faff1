#pragma once

#include "hashednets/core_math.hpp"

// Batched dense kernels shared by every layer kind.
//
// Layout conventions: a weight matrix V is n_out x (n_in + 1) with the bias in
// column 0; activations A are batch x n_in (no bias column); pre-activations
// and error terms are batch x n_out.
//
// Two implementations with identical signatures live here. `serial` is the
// plain-loop reference kept for testing; `parallel` is the OpenMP version used
// on the training path. Each output element of a `parallel` kernel is produced
// by one thread with a fixed summation order, so results do not depend on the
// thread count. The two agree up to floating round-off, not bitwise.

namespace hashednets::kernels {

namespace serial {

/// Z(b, i) = V(i, 0) + sum_j V(i, j + 1) A(b, j)
void affine_forward(const Matrix& v, const Matrix& a, Matrix& z);

/// Out(b, j) = sum_i D(b, i) V(i, j + 1)
void backprop_input(const Matrix& v, const Matrix& delta, Matrix& out);

/// G(i, 0) = sum_b D(b, i);  G(i, j + 1) = sum_b D(b, i) A(b, j)
void weight_gradient(const Matrix& delta, const Matrix& a, Matrix& g);

/// C = X * Y
void matmul(const Matrix& x, const Matrix& y, Matrix& c);

/// C = X^T * Y
void matmul_tn(const Matrix& x, const Matrix& y, Matrix& c);

}  // namespace serial

namespace parallel {

void affine_forward(const Matrix& v, const Matrix& a, Matrix& z);
void backprop_input(const Matrix& v, const Matrix& delta, Matrix& out);
void weight_gradient(const Matrix& delta, const Matrix& a, Matrix& g);
void matmul(const Matrix& x, const Matrix& y, Matrix& c);
void matmul_tn(const Matrix& x, const Matrix& y, Matrix& c);

}  // namespace parallel

}  // namespace hashednets::kernels
