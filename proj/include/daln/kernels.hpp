#pragma once

#include "daln/matrix.hpp"

namespace daln::kernels {

// Dense numeric kernels. Each kernel has a plain serial reference under
// kernels::serial and a dispatching version that runs the same row-range
// worker under OpenMP once the flop count crosses a threshold. Every output
// element is produced by exactly one thread with a fixed inner-loop order,
// so parallel results are bit-identical to the serial reference for any
// thread count.

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);        // a[m×n]·b[n×p]
void matmul_acc_nt(Matrix& acc, const Matrix& g, const Matrix& b);  // acc += g·bᵀ
void matmul_acc_tn(Matrix& acc, const Matrix& a, const Matrix& g);  // acc += aᵀ·g
Matrix pairwise_sq_dists(const Matrix& x, const Matrix& y);  // d[i][j] = |x_i - y_j|²
Matrix softmax_rows(const Matrix& logits);
Matrix tanh_eltwise(const Matrix& x);
Matrix relu_eltwise(const Matrix& x);
/// Σ exp(-d_ij / bandwidth) over entries of a squared-distance matrix,
/// optionally skipping the diagonal; row partials are combined in fixed order.
double rbf_sum(const Matrix& sq_dists, double bandwidth, bool skip_diagonal);
}  // namespace serial

Matrix matmul(const Matrix& a, const Matrix& b);
void matmul_acc_nt(Matrix& acc, const Matrix& g, const Matrix& b);
void matmul_acc_tn(Matrix& acc, const Matrix& a, const Matrix& g);
Matrix pairwise_sq_dists(const Matrix& x, const Matrix& y);
Matrix softmax_rows(const Matrix& logits);
Matrix tanh_eltwise(const Matrix& x);
Matrix relu_eltwise(const Matrix& x);
double rbf_sum(const Matrix& sq_dists, double bandwidth, bool skip_diagonal);

/// Flop threshold below which the dispatching kernels stay serial.
inline constexpr long kParallelWorkThreshold = 1 << 15;

}  // namespace daln::kernels
