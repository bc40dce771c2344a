#include "daln/check.hpp"

#include <algorithm>
#include <cmath>

#include "daln/errors.hpp"

namespace daln {

Matrix fd_gradient(const std::function<double(const Matrix&)>& f,
                   const Matrix& x, double h) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double fp = f(probe);
      probe(i, j) = orig - h;
      const double fm = f(probe);
      probe(i, j) = orig;
      grad(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return grad;
}

double max_rel_err(const Matrix& got, const Matrix& want, double floor) {
  const double scale = std::max(want.max_abs(), floor);
  return max_abs_diff(got, want) / scale;
}

std::vector<double> jacobi_eigen_sym(const Matrix& a) {
  const int n = a.rows();
  if (a.cols() != n) {
    throw ShapeError("jacobi_eigen_sym: matrix must be square, got " +
                     a.shape_str());
  }
  Matrix m = a;
  constexpr int kMaxSweeps = 100;
  constexpr double kTol = 1e-14;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      diag += std::abs(m(i, i));
      for (int j = i + 1; j < n; ++j) off += std::abs(m(i, j));
    }
    if (off <= kTol * std::max(1.0, diag)) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < n; ++i) {
          const double mip = m(i, p), miq = m(i, q);
          m(i, p) = c * mip - s * miq;
          m(i, q) = s * mip + c * miq;
        }
        for (int i = 0; i < n; ++i) {
          const double mpi = m(p, i), mqi = m(q, i);
          m(p, i) = c * mpi - s * mqi;
          m(q, i) = s * mpi + c * mqi;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = m(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

}  // namespace daln
