#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "daln/check.hpp"
#include "daln/errors.hpp"
#include "daln/linalg.hpp"
#include "daln/metrics.hpp"
#include "daln/rng.hpp"
#include "doctest.h"

using daln::ClassificationEval;
using daln::Matrix;
using daln::MetricsReport;
using daln::RngStream;
using daln::SelfCorrelation;

namespace {

Matrix random_simplex(int rows, int cols, uint64_t seed) {
  auto rng = RngStream::for_purpose(seed, "test-metrics");
  Matrix z(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      z(i, j) = rng.uniform() + 1e-3;
      sum += z(i, j);
    }
    for (int j = 0; j < cols; ++j) z(i, j) /= sum;
  }
  return z;
}

Matrix random_gaussian(int rows, int cols, uint64_t seed, double shift = 0.0) {
  auto rng = RngStream::for_purpose(seed, "test-metrics");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal() + shift;
  return m;
}

std::vector<int> random_labels(int n, int k, uint64_t seed) {
  auto rng = RngStream::for_purpose(seed, "test-metrics-labels");
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) y[i] = static_cast<int>(rng.uniform_int(k));
  return y;
}

// independent quadratic-loop evaluation of the multi-bandwidth estimator
double mmd_loop_oracle(const Matrix& s, const Matrix& t,
                       const std::vector<double>& bws) {
  const int d = s.cols();
  auto kern = [&](const Matrix& a, int i, const Matrix& b, int j, double bw) {
    double dd = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = a(i, c) - b(j, c);
      dd += diff * diff;
    }
    return std::exp(-dd / bw);
  };
  const int m = s.rows();
  const int n = t.rows();
  double total = 0.0;
  for (double bw : bws) {
    double ss = 0.0, tt = 0.0, st = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) ss += kern(s, i, s, j, bw);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) tt += kern(t, i, t, j, bw);
    if (m == n) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) st += kern(s, i, t, j, bw);
      total += (ss + tt - 2.0 * st) / (m * (m - 1.0));
    } else {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) st += kern(s, i, t, j, bw);
      total += ss / (m * (m - 1.0)) + tt / (n * (n - 1.0)) -
               2.0 * st / (double(m) * n);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("self-correlation of one-hot and uniform prediction rows") {
  const Matrix onehot = Matrix::from_rows(
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  SelfCorrelation c = daln::self_correlation(onehot);
  CHECK(c.batch == 4);
  CHECK(c.i_a == 4.0);
  CHECK(c.i_e == 0.0);
  CHECK(c.r == Matrix::from_rows({{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}));

  const Matrix uniform = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  SelfCorrelation u = daln::self_correlation(uniform);
  CHECK(u.r == Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  CHECK(u.i_a == 1.0);
  CHECK(u.i_e == 1.0);
}

TEST_CASE("self-correlation identities hold on random simplex rows") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix z = random_simplex(12, 4, seed);
    SelfCorrelation c = daln::self_correlation(z);
    CHECK(std::abs(c.i_a + c.i_e - 12.0) <= 1e-9);
    const double fro = daln::frobenius(z);
    CHECK(std::abs(c.i_a - fro * fro) <= 1e-9);
    CHECK(c.i_a >= 0.0);
    CHECK(c.i_e >= 0.0);
    // symmetric positive semidefinite
    CHECK(daln::max_abs_diff(c.r, daln::transpose(c.r)) <= 1e-10);
    const std::vector<double> eig = daln::jacobi_eigen_sym(c.r);
    CHECK(eig.back() >= -1e-10);
  }
}

TEST_CASE("self-correlation rejects rows off the simplex") {
  CHECK_THROWS_AS(daln::self_correlation(Matrix::from_rows({{1.1, -0.1}})),
                  daln::ValueError);
  CHECK_THROWS_AS(daln::self_correlation(Matrix::from_rows({{0.6, 0.6}})),
                  daln::ValueError);
  CHECK_THROWS_AS(daln::self_correlation(Matrix(0, 3)), daln::ValueError);
}

TEST_CASE("confusion and accuracy closed forms") {
  const Matrix perfect = Matrix::from_rows(
      {{0.9, 0.05, 0.05}, {0.1, 0.8, 0.1}, {0.2, 0.2, 0.6}, {0.7, 0.2, 0.1}});
  ClassificationEval e = daln::confusion_and_accuracy(perfect, {0, 1, 2, 0});
  CHECK(e.accuracy == 1.0);
  CHECK(e.confusion == Matrix::from_rows({{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  CHECK(e.per_class_recall == std::vector<double>{1.0, 1.0, 1.0});

  const Matrix all_zero = Matrix::from_rows(
      {{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}, {0.6, 0.4}});
  ClassificationEval z = daln::confusion_and_accuracy(all_zero, {0, 0, 1, 1});
  CHECK(z.accuracy == 0.5);
  CHECK(z.per_class_recall == std::vector<double>{1.0, 0.0});
  CHECK(z.confusion == Matrix::from_rows({{2, 0}, {2, 0}}));

  // ties break toward the lowest class index
  const Matrix tied = Matrix::from_rows({{1.0 / 3, 1.0 / 3, 1.0 / 3}});
  CHECK(daln::confusion_and_accuracy(tied, {0}).accuracy == 1.0);
  CHECK(daln::confusion_and_accuracy(tied, {1}).accuracy == 0.0);
}

TEST_CASE("confusion and accuracy match a loop oracle on random data") {
  const Matrix preds = random_simplex(50, 4, 7);
  const std::vector<int> labels = random_labels(50, 4, 8);
  ClassificationEval e = daln::confusion_and_accuracy(preds, labels);

  Matrix confusion(4, 4);
  int correct = 0;
  for (int i = 0; i < 50; ++i) {
    auto row = preds.row(i);
    const int guess = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
    confusion(labels[i], guess) += 1.0;
    if (guess == labels[i]) correct++;
  }
  CHECK(e.confusion == confusion);
  CHECK(e.accuracy == correct / 50.0);
  double cell_sum = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) cell_sum += e.confusion(i, j);
  CHECK(cell_sum == 50.0);

  CHECK_THROWS_AS(daln::confusion_and_accuracy(preds, random_labels(50, 9, 1)),
                  daln::ValueError);
  CHECK_THROWS_AS(daln::confusion_and_accuracy(preds, {0, 1}),
                  daln::ShapeError);
}

TEST_CASE("determinacy ratio counts confident correct predictions") {
  const Matrix sure = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  CHECK(daln::determinacy_ratio(sure, {0, 1}) == 1.0);

  const Matrix meek = Matrix::from_rows({{0.6, 0.4}, {0.6, 0.4}});
  CHECK(daln::determinacy_ratio(meek, {0, 0}) == 0.0);

  // 10 samples: 6 correct, 3 of those with winning probability >= 0.9
  Matrix mixed(10, 2);
  std::vector<int> labels(10, 0);
  for (int i = 0; i < 3; ++i) {
    mixed(i, 0) = 0.95;
    mixed(i, 1) = 0.05;
  }
  for (int i = 3; i < 6; ++i) {
    mixed(i, 0) = 0.6;
    mixed(i, 1) = 0.4;
  }
  for (int i = 6; i < 10; ++i) {
    mixed(i, 0) = 0.3;
    mixed(i, 1) = 0.7;
  }
  CHECK(daln::determinacy_ratio(mixed, labels) == 0.5);

  // nothing correct
  CHECK(daln::determinacy_ratio(sure, {1, 0}) == 0.0);
}

TEST_CASE("per-class correct counts") {
  const Matrix perfect = Matrix::from_rows(
      {{0.9, 0.1}, {0.9, 0.1}, {0.9, 0.1}, {0.1, 0.9}});
  CHECK(daln::per_class_correct(perfect, {0, 0, 0, 1}) ==
        std::vector<int>{3, 1});
  CHECK(daln::per_class_correct(perfect, {1, 1, 1, 0}) ==
        std::vector<int>{0, 0});

  const Matrix preds = random_simplex(30, 3, 17);
  const std::vector<int> labels = random_labels(30, 3, 18);
  std::vector<int> want(3, 0);
  for (int i = 0; i < 30; ++i) {
    auto row = preds.row(i);
    const int guess = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
    if (guess == labels[i]) want[labels[i]]++;
  }
  CHECK(daln::per_class_correct(preds, labels) == want);
}

TEST_CASE("proxy A-distance: near zero for shuffled copies, near two for far blobs") {
  const Matrix s = random_gaussian(40, 3, 31);
  auto rng = RngStream::for_purpose(32, "test-metrics");
  const std::vector<int> perm = rng.permutation(40);
  Matrix t(40, 3);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = s(perm[i], j);
  const double same = daln::proxy_a_distance(s, t);
  CHECK(same >= 0.0);
  CHECK(same <= 0.15);

  const Matrix far = random_gaussian(30, 3, 33, 10.0);
  const double split = daln::proxy_a_distance(random_gaussian(30, 3, 34), far);
  CHECK(split >= 1.9);
  CHECK(split <= 2.0);

  // deterministic: same inputs, same value
  CHECK(daln::proxy_a_distance(s, t) == same);
}

TEST_CASE("proxy A-distance rejects degenerate folds") {
  const Matrix ok = random_gaussian(6, 2, 35);
  CHECK_THROWS_AS(daln::proxy_a_distance(Matrix::from_rows({{1.0, 2.0}}), ok),
                  daln::ValueError);
  CHECK_THROWS_AS(daln::proxy_a_distance(ok, Matrix(0, 2)), daln::ValueError);
  CHECK_THROWS_AS(daln::proxy_a_distance(ok, ok, 1), daln::ValueError);
  CHECK_THROWS_AS(daln::proxy_a_distance(ok, random_gaussian(6, 3, 36)),
                  daln::ShapeError);
}

TEST_CASE("median squared distance and default bandwidths") {
  const Matrix s = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}});
  const Matrix t = Matrix::from_rows({{0.0, 2.0}});
  // pairwise squared distances: 1, 4, 5 -> median 4
  CHECK(daln::median_sq_dist(s, t) == 4.0);
  CHECK(daln::default_bandwidths(s, t) ==
        std::vector<double>{1.0, 2.0, 4.0, 8.0, 16.0});
}

TEST_CASE("mmd vanishes on identical clouds and separates far ones") {
  const Matrix s = random_gaussian(20, 3, 41);
  CHECK(std::abs(daln::mmd_rbf(s, s)) <= 1e-9);

  // biased variant: all pairs, including matched ones
  const std::vector<double> bws = daln::default_bandwidths(s, s);
  double biased = 0.0;
  for (double bw : bws) {
    double ss = 0.0, st = 0.0;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        double dd = 0.0;
        for (int c = 0; c < 3; ++c) {
          const double diff = s(i, c) - s(j, c);
          dd += diff * diff;
        }
        ss += std::exp(-dd / bw);
        st += std::exp(-dd / bw);
      }
    biased += ss / 400.0 + ss / 400.0 - 2.0 * st / 400.0;
  }
  CHECK(std::abs(biased) <= 1e-9);

  const Matrix a = random_gaussian(200, 2, 42);
  const Matrix b = random_gaussian(200, 2, 43, 10.0);
  CHECK(daln::mmd_rbf(a, b) > 0.5);
}

TEST_CASE("mmd matches a quadratic loop oracle") {
  const std::vector<double> bws = {0.5, 1.3, 2.7};
  const Matrix s8 = random_gaussian(8, 2, 51);
  const Matrix t8 = random_gaussian(8, 2, 52, 0.5);
  const double got_eq = daln::mmd_rbf(s8, t8, bws);
  CHECK(std::abs(got_eq - mmd_loop_oracle(s8, t8, bws)) <= 1e-12);

  const Matrix t6 = random_gaussian(6, 2, 53, 0.5);
  const double got_ne = daln::mmd_rbf(s8, t6, bws);
  CHECK(std::abs(got_ne - mmd_loop_oracle(s8, t6, bws)) <= 1e-12);

  // symmetric in its arguments, and nonnegative up to estimator noise
  CHECK(std::abs(daln::mmd_rbf(t6, s8, bws) - got_ne) <= 1e-12);
  const Matrix u = random_gaussian(24, 2, 54);
  const Matrix v = random_gaussian(24, 2, 55);
  CHECK(daln::mmd_rbf(u, v) >= -1e-6);
}

TEST_CASE("mmd rejects degenerate inputs") {
  const Matrix ok = random_gaussian(4, 2, 61);
  CHECK_THROWS_AS(daln::mmd_rbf(Matrix::from_rows({{1.0, 2.0}}), ok),
                  daln::ValueError);
  CHECK_THROWS_AS(daln::mmd_rbf(ok, ok, {}), daln::ValueError);
  CHECK_THROWS_AS(daln::mmd_rbf(ok, ok, {0.0}), daln::ValueError);
  CHECK_THROWS_AS(daln::mmd_rbf(ok, random_gaussian(4, 3, 62)),
                  daln::ShapeError);
}

TEST_CASE("metrics report serializes as a single json line") {
  MetricsReport r;
  r.epoch = 3;
  r.accuracy = 0.5;
  r.per_class_recall = {1.0, 0.0};
  r.confusion = Matrix::from_rows({{2, 0}, {2, 0}});
  r.l_cls = 0.25;
  r.l_nwd = -0.5;
  r.mmd = 0.125;
  r.a_distance = 1.5;
  r.i_a_src = 3.0;
  r.i_e_src = 1.0;
  r.i_a_tgt = 2.0;
  r.i_e_tgt = 2.0;
  r.determinacy_ratio = 0.75;
  r.per_class_correct = {2, 0};
  const std::string line = daln::to_json_line(r);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line ==
        "{\"epoch\":3,\"accuracy\":0.5,\"per_class_recall\":[1.0,0.0],"
        "\"confusion\":[[2,0],[2,0]],\"l_cls\":0.25,\"l_nwd\":-0.5,"
        "\"mmd\":0.125,\"a_distance\":1.5,\"i_a_src\":3.0,\"i_e_src\":1.0,"
        "\"i_a_tgt\":2.0,\"i_e_tgt\":2.0,\"determinacy_ratio\":0.75,"
        "\"per_class_correct\":[2,0]}");
}
