#include "daln/kernels.hpp"

#include <cmath>
#include <vector>

#include "daln/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace daln::kernels {
namespace {

// Row-range workers shared by the serial references and the OpenMP
// dispatchers. Keeping a single implementation per kernel is what makes the
// two paths bit-identical: the arithmetic per output element never changes,
// only which thread runs it.

void matmul_rows(const Matrix& a, const Matrix& b, Matrix& out, int r0, int r1) {
  const int n = a.cols();
  const int p = b.cols();
  for (int i = r0; i < r1; ++i) {
    const double* arow = a.row(i).data();
    double* orow = out.row(i).data();
    for (int j = 0; j < p; ++j) orow[j] = 0.0;
    for (int k = 0; k < n; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k).data();
      for (int j = 0; j < p; ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_acc_nt_rows(Matrix& acc, const Matrix& g, const Matrix& b, int r0,
                        int r1) {
  const int n = g.cols();
  const int p = b.rows();
  for (int i = r0; i < r1; ++i) {
    const double* grow = g.row(i).data();
    double* arow = acc.row(i).data();
    for (int j = 0; j < p; ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += grow[k] * brow[k];
      arow[j] += s;
    }
  }
}

void matmul_acc_tn_rows(Matrix& acc, const Matrix& a, const Matrix& g, int r0,
                        int r1) {
  // acc[n×p] += aᵀ·g with a[m×n], g[m×p]; parallel over rows of acc so each
  // output element still has a single writer.
  const int m = a.rows();
  const int p = g.cols();
  for (int i = r0; i < r1; ++i) {
    double* arow = acc.row(i).data();
    for (int k = 0; k < m; ++k) {
      const double aki = a(k, i);
      const double* grow = g.row(k).data();
      for (int j = 0; j < p; ++j) arow[j] += aki * grow[j];
    }
  }
}

void pairwise_rows(const Matrix& x, const Matrix& y, Matrix& out, int r0,
                   int r1) {
  const int d = x.cols();
  const int ny = y.rows();
  for (int i = r0; i < r1; ++i) {
    const double* xi = x.row(i).data();
    double* orow = out.row(i).data();
    for (int j = 0; j < ny; ++j) {
      const double* yj = y.row(j).data();
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = xi[k] - yj[k];
        s += diff * diff;
      }
      orow[j] = s;
    }
  }
}

void softmax_rows_range(const Matrix& logits, Matrix& out, int r0, int r1) {
  const int k = logits.cols();
  for (int i = r0; i < r1; ++i) {
    const double* lrow = logits.row(i).data();
    double* orow = out.row(i).data();
    double mx = lrow[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, lrow[j]);
    double z = 0.0;
    for (int j = 0; j < k; ++j) {
      orow[j] = std::exp(lrow[j] - mx);
      z += orow[j];
    }
    for (int j = 0; j < k; ++j) orow[j] /= z;
  }
}

void tanh_rows(const Matrix& x, Matrix& out, int r0, int r1) {
  const int c = x.cols();
  for (int i = r0; i < r1; ++i) {
    const double* xrow = x.row(i).data();
    double* orow = out.row(i).data();
    for (int j = 0; j < c; ++j) orow[j] = std::tanh(xrow[j]);
  }
}

void relu_rows(const Matrix& x, Matrix& out, int r0, int r1) {
  const int c = x.cols();
  for (int i = r0; i < r1; ++i) {
    const double* xrow = x.row(i).data();
    double* orow = out.row(i).data();
    for (int j = 0; j < c; ++j) orow[j] = xrow[j] > 0.0 ? xrow[j] : 0.0;
  }
}

void rbf_row_partials(const Matrix& sq_dists, double bandwidth,
                      bool skip_diagonal, std::vector<double>& partials,
                      int r0, int r1) {
  const int c = sq_dists.cols();
  for (int i = r0; i < r1; ++i) {
    const double* drow = sq_dists.row(i).data();
    double s = 0.0;
    for (int j = 0; j < c; ++j) {
      if (skip_diagonal && j == i) continue;
      s += std::exp(-drow[j] / bandwidth);
    }
    partials[static_cast<size_t>(i)] = s;
  }
}

bool use_parallel(long flops) {
#ifdef _OPENMP
  return flops >= kParallelWorkThreshold && omp_get_max_threads() > 1;
#else
  (void)flops;
  return false;
#endif
}

template <typename RowWorker>
void dispatch_rows(int rows, long flops, RowWorker&& worker) {
  if (use_parallel(flops)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) worker(i, i + 1);
#endif
  } else {
    worker(0, rows);
  }
}

void check_matmul_shapes(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

void check_pairwise_shapes(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) {
    throw ShapeError("pairwise_sq_dists: feature dimensions disagree, " +
                     x.shape_str() + " vs " + y.shape_str());
  }
}

void check_rbf(const Matrix& sq_dists, double bandwidth, bool skip_diagonal) {
  if (bandwidth <= 0.0 || !std::isfinite(bandwidth)) {
    throw ValueError("rbf_sum: bandwidth must be positive and finite");
  }
  if (skip_diagonal && sq_dists.rows() != sq_dists.cols()) {
    throw ShapeError("rbf_sum: diagonal skip needs a square matrix, got " +
                     sq_dists.shape_str());
  }
}

}  // namespace

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_matmul_shapes(a, b);
  Matrix out(a.rows(), b.cols());
  matmul_rows(a, b, out, 0, a.rows());
  return out;
}

void matmul_acc_nt(Matrix& acc, const Matrix& g, const Matrix& b) {
  if (g.cols() != b.cols()) {
    throw ShapeError("matmul_acc_nt: inner dimensions disagree, " +
                     g.shape_str() + " vs " + b.shape_str());
  }
  if (acc.rows() != g.rows() || acc.cols() != b.rows()) {
    throw ShapeError("matmul_acc_nt: accumulator shape " + acc.shape_str() +
                     " does not match product");
  }
  matmul_acc_nt_rows(acc, g, b, 0, acc.rows());
}

void matmul_acc_tn(Matrix& acc, const Matrix& a, const Matrix& g) {
  if (a.rows() != g.rows()) {
    throw ShapeError("matmul_acc_tn: row counts disagree, " + a.shape_str() +
                     " vs " + g.shape_str());
  }
  if (acc.rows() != a.cols() || acc.cols() != g.cols()) {
    throw ShapeError("matmul_acc_tn: accumulator shape " + acc.shape_str() +
                     " does not match product");
  }
  matmul_acc_tn_rows(acc, a, g, 0, acc.rows());
}

Matrix pairwise_sq_dists(const Matrix& x, const Matrix& y) {
  check_pairwise_shapes(x, y);
  Matrix out(x.rows(), y.rows());
  pairwise_rows(x, y, out, 0, x.rows());
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  softmax_rows_range(logits, out, 0, logits.rows());
  return out;
}

Matrix tanh_eltwise(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  tanh_rows(x, out, 0, x.rows());
  return out;
}

Matrix relu_eltwise(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  relu_rows(x, out, 0, x.rows());
  return out;
}

double rbf_sum(const Matrix& sq_dists, double bandwidth, bool skip_diagonal) {
  check_rbf(sq_dists, bandwidth, skip_diagonal);
  std::vector<double> partials(static_cast<size_t>(sq_dists.rows()), 0.0);
  rbf_row_partials(sq_dists, bandwidth, skip_diagonal, partials, 0,
                   sq_dists.rows());
  double total = 0.0;
  for (double p : partials) total += p;
  return total;
}

}  // namespace serial

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_matmul_shapes(a, b);
  Matrix out(a.rows(), b.cols());
  const long flops = 2L * a.rows() * a.cols() * b.cols();
  dispatch_rows(a.rows(), flops,
                [&](int r0, int r1) { matmul_rows(a, b, out, r0, r1); });
  return out;
}

void matmul_acc_nt(Matrix& acc, const Matrix& g, const Matrix& b) {
  if (g.cols() != b.cols()) {
    throw ShapeError("matmul_acc_nt: inner dimensions disagree, " +
                     g.shape_str() + " vs " + b.shape_str());
  }
  if (acc.rows() != g.rows() || acc.cols() != b.rows()) {
    throw ShapeError("matmul_acc_nt: accumulator shape " + acc.shape_str() +
                     " does not match product");
  }
  const long flops = 2L * g.rows() * g.cols() * b.rows();
  dispatch_rows(acc.rows(), flops,
                [&](int r0, int r1) { matmul_acc_nt_rows(acc, g, b, r0, r1); });
}

void matmul_acc_tn(Matrix& acc, const Matrix& a, const Matrix& g) {
  if (a.rows() != g.rows()) {
    throw ShapeError("matmul_acc_tn: row counts disagree, " + a.shape_str() +
                     " vs " + g.shape_str());
  }
  if (acc.rows() != a.cols() || acc.cols() != g.cols()) {
    throw ShapeError("matmul_acc_tn: accumulator shape " + acc.shape_str() +
                     " does not match product");
  }
  const long flops = 2L * a.rows() * a.cols() * g.cols();
  dispatch_rows(acc.rows(), flops,
                [&](int r0, int r1) { matmul_acc_tn_rows(acc, a, g, r0, r1); });
}

Matrix pairwise_sq_dists(const Matrix& x, const Matrix& y) {
  check_pairwise_shapes(x, y);
  Matrix out(x.rows(), y.rows());
  const long flops = 3L * x.rows() * y.rows() * x.cols();
  dispatch_rows(x.rows(), flops,
                [&](int r0, int r1) { pairwise_rows(x, y, out, r0, r1); });
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  const long flops = 8L * logits.rows() * logits.cols();
  dispatch_rows(logits.rows(), flops, [&](int r0, int r1) {
    softmax_rows_range(logits, out, r0, r1);
  });
  return out;
}

Matrix tanh_eltwise(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  const long flops = 8L * x.rows() * x.cols();
  dispatch_rows(x.rows(), flops,
                [&](int r0, int r1) { tanh_rows(x, out, r0, r1); });
  return out;
}

Matrix relu_eltwise(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  const long flops = 1L * x.rows() * x.cols();
  dispatch_rows(x.rows(), flops,
                [&](int r0, int r1) { relu_rows(x, out, r0, r1); });
  return out;
}

double rbf_sum(const Matrix& sq_dists, double bandwidth, bool skip_diagonal) {
  check_rbf(sq_dists, bandwidth, skip_diagonal);
  std::vector<double> partials(static_cast<size_t>(sq_dists.rows()), 0.0);
  const long flops = 10L * sq_dists.rows() * sq_dists.cols();
  dispatch_rows(sq_dists.rows(), flops, [&](int r0, int r1) {
    rbf_row_partials(sq_dists, bandwidth, skip_diagonal, partials, r0, r1);
  });
  double total = 0.0;
  for (double p : partials) total += p;
  return total;
}

}  // namespace daln::kernels
