#include "daln/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "daln/errors.hpp"

namespace daln {
namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagTol = 1e-12;

// Hestenes one-sided Jacobi on a copy of z with rows >= cols: plane rotations
// orthogonalize column pairs of a while the same rotations accumulate into v.
// Pairs are visited in a fixed cyclic order so the result is deterministic.
SvdResult svd_tall(const Matrix& z) {
  const int m = z.rows();
  const int n = z.cols();
  Matrix a = z;
  Matrix v = Matrix::identity(n);

  bool converged = (n <= 1);
  int sweep = 0;
  for (; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          alpha += ap * ap;
          beta += aq * aq;
          gamma += ap * aq;
        }
        const double denom = std::sqrt(alpha * beta);
        if (denom == 0.0 || std::abs(gamma) <= kOffDiagTol * denom) continue;
        converged = false;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (int i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) {
    throw NumericError("svd: no convergence after " + std::to_string(sweep) +
                       " sweeps");
  }

  std::vector<double> norms(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double s2 = 0.0;
    for (int i = 0; i < m; ++i) s2 += a(i, j) * a(i, j);
    norms[j] = std::sqrt(s2);
  }

  // stable descending order keeps equal singular values in sweep order
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return norms[x] > norms[y]; });

  SvdResult res;
  res.u = Matrix(m, n);
  res.v = Matrix(n, n);
  res.s.resize(n);
  const double smax = norms[order[0]];
  const double rank_tol = smax * 1e-12;
  std::vector<int> deficient;
  for (int j = 0; j < n; ++j) {
    const int src = order[j];
    res.s[j] = norms[src];
    for (int i = 0; i < n; ++i) res.v(i, j) = v(i, src);
    if (norms[src] > rank_tol && norms[src] > 0.0) {
      for (int i = 0; i < m; ++i) res.u(i, j) = a(i, src) / norms[src];
    } else {
      deficient.push_back(j);
    }
  }

  // Near-zero columns carry no reliable direction; rebuild them by
  // Gram-Schmidt of canonical vectors against the columns already placed.
  for (int j : deficient) {
    for (int cand = 0; cand < m; ++cand) {
      std::vector<double> w(m, 0.0);
      w[cand] = 1.0;
      for (int jj = 0; jj < n; ++jj) {
        if (std::find(deficient.begin(), deficient.end(), jj) !=
                deficient.end() &&
            jj >= j)
          continue;
        double dot = 0.0;
        for (int i = 0; i < m; ++i) dot += w[i] * res.u(i, jj);
        for (int i = 0; i < m; ++i) w[i] -= dot * res.u(i, jj);
      }
      double nrm = 0.0;
      for (double x : w) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (int i = 0; i < m; ++i) res.u(i, j) = w[i] / nrm;
        break;
      }
    }
  }
  return res;
}

void apply_sign_convention(SvdResult& res) {
  const int m = res.u.rows();
  const int n = res.u.cols();
  const int k = res.v.rows();
  for (int j = 0; j < n; ++j) {
    double best = 0.0;
    int besti = 0;
    for (int i = 0; i < m; ++i) {
      if (std::abs(res.u(i, j)) > best) {
        best = std::abs(res.u(i, j));
        besti = i;
      }
    }
    if (res.u(besti, j) < 0.0) {
      for (int i = 0; i < m; ++i) res.u(i, j) = -res.u(i, j);
      for (int i = 0; i < k; ++i) res.v(i, j) = -res.v(i, j);
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& z) {
  if (!z.all_finite()) throw ValueError("svd: non-finite entries");
  if (z.empty()) {
    return {Matrix(z.rows(), 0), {}, Matrix(z.cols(), 0)};
  }
  SvdResult res;
  if (z.rows() >= z.cols()) {
    res = svd_tall(z);
  } else {
    SvdResult t = svd_tall(transpose(z));
    res.u = std::move(t.v);
    res.s = std::move(t.s);
    res.v = std::move(t.u);
  }
  apply_sign_convention(res);
  return res;
}

double spectral_norm(const Matrix& w) {
  const SvdResult r = svd(w);
  return r.s.empty() ? 0.0 : r.s[0];
}

double frobenius(const Matrix& w) {
  if (!w.all_finite()) throw ValueError("frobenius: non-finite entries");
  double s2 = 0.0;
  for (int i = 0; i < w.size(); ++i) s2 += w.data()[i] * w.data()[i];
  return std::sqrt(s2);
}

double nuclear_norm_value(const Matrix& z) {
  const SvdResult r = svd(z);
  double total = 0.0;
  for (double s : r.s) total += s;
  return total;
}

}  // namespace daln
