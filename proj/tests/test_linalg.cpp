#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <numbers>

#include "daln/check.hpp"
#include "daln/errors.hpp"
#include "daln/kernels.hpp"
#include "daln/linalg.hpp"
#include "daln/matrix.hpp"
#include "daln/rng.hpp"
#include "doctest.h"

using daln::Matrix;
using daln::svd;
using daln::SvdResult;

namespace {

Matrix random_matrix(int rows, int cols, uint64_t seed) {
  auto rng = daln::RngStream::for_purpose(seed, "test-linalg");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

double orthonormality_defect(const Matrix& q) {
  Matrix g = daln::kernels::serial::matmul(transpose(q), q);
  return max_abs_diff(g, Matrix::identity(q.cols()));
}

double reconstruction_defect(const SvdResult& r, const Matrix& z) {
  Matrix us = r.u;
  for (int i = 0; i < us.rows(); ++i)
    for (int j = 0; j < us.cols(); ++j) us(i, j) *= r.s[j];
  Matrix rec = daln::kernels::serial::matmul(us, transpose(r.v));
  return max_abs_diff(rec, z);
}

void check_valid_svd(const Matrix& z) {
  const SvdResult r = svd(z);
  const int rank_dim = std::min(z.rows(), z.cols());
  REQUIRE(r.u.rows() == z.rows());
  REQUIRE(r.u.cols() == rank_dim);
  REQUIRE(r.v.rows() == z.cols());
  REQUIRE(r.v.cols() == rank_dim);
  REQUIRE(static_cast<int>(r.s.size()) == rank_dim);
  CHECK(orthonormality_defect(r.u) <= 1e-10);
  CHECK(orthonormality_defect(r.v) <= 1e-10);
  for (int i = 0; i + 1 < rank_dim; ++i) CHECK(r.s[i] >= r.s[i + 1]);
  for (double s : r.s) CHECK(s >= 0.0);
  CHECK(reconstruction_defect(r, z) <= 1e-9 * std::max(1.0, z.max_abs()));
}

}  // namespace

TEST_CASE("svd of diag(3,1)") {
  Matrix z = Matrix::from_rows({{3.0, 0.0}, {0.0, 1.0}});
  SvdResult r = svd(z);
  CHECK(r.s[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.s[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs_diff(r.u, Matrix::identity(2)) < 1e-12);
  CHECK(max_abs_diff(r.v, Matrix::identity(2)) < 1e-12);
  check_valid_svd(z);
}

TEST_CASE("svd of a rotation has unit singular values") {
  const double a = std::numbers::pi / 6.0;
  Matrix z = Matrix::from_rows({{std::cos(a), -std::sin(a)},
                                {std::sin(a), std::cos(a)}});
  SvdResult r = svd(z);
  CHECK(r.s[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.s[1] == doctest::Approx(1.0).epsilon(1e-12));
  check_valid_svd(z);
}

TEST_CASE("singular values match the Gram-matrix eigen oracle") {
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    Matrix z = random_matrix(7, 4, seed);
    SvdResult r = svd(z);
    Matrix gram = daln::kernels::serial::matmul(transpose(z), z);
    auto eig = daln::jacobi_eigen_sym(gram);
    REQUIRE(eig.size() == 4);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(r.s[i] - std::sqrt(std::max(eig[i], 0.0))) < 1e-8);
    }
    check_valid_svd(z);
  }
}

TEST_CASE("svd result invariants hold across shapes") {
  check_valid_svd(random_matrix(9, 3, 10));   // tall
  check_valid_svd(random_matrix(3, 9, 11));   // wide
  check_valid_svd(random_matrix(6, 6, 12));   // square
  check_valid_svd(random_matrix(1, 5, 13));   // single row
  check_valid_svd(random_matrix(5, 1, 14));   // single column
  check_valid_svd(Matrix(4, 3));              // all zeros
  check_valid_svd(Matrix::from_rows({{1e-3, 0.0}, {0.0, 2e6}}));  // wide range
}

TEST_CASE("rank-deficient input still yields orthonormal factors") {
  Matrix base = random_matrix(8, 2, 20);
  Matrix z(8, 4);
  for (int i = 0; i < 8; ++i) {
    z(i, 0) = base(i, 0);
    z(i, 1) = base(i, 1);
    z(i, 2) = base(i, 0) + base(i, 1);  // dependent
    z(i, 3) = 2.0 * base(i, 0);         // dependent
  }
  SvdResult r = svd(z);
  CHECK(r.s[2] <= 1e-10 * r.s[0]);
  CHECK(r.s[3] <= 1e-10 * r.s[0]);
  check_valid_svd(z);
}

TEST_CASE("svd sign convention and determinism") {
  Matrix z = random_matrix(6, 4, 30);
  SvdResult r1 = svd(z);
  SvdResult r2 = svd(z);
  CHECK(r1.u == r2.u);
  CHECK(r1.v == r2.v);
  CHECK(r1.s == r2.s);
  for (int j = 0; j < r1.u.cols(); ++j) {
    double best = 0.0;
    for (int i = 0; i < r1.u.rows(); ++i)
      best = std::max(best, std::abs(r1.u(i, j)));
    // the largest-magnitude entry of each column is positive
    bool found_positive_max = false;
    for (int i = 0; i < r1.u.rows(); ++i) {
      if (std::abs(r1.u(i, j)) == best) {
        found_positive_max = r1.u(i, j) > 0.0;
        break;
      }
    }
    CHECK(found_positive_max);
  }
}

TEST_CASE("singular values ignore row permutations") {
  Matrix z = random_matrix(6, 4, 40);
  Matrix p(6, 4);
  const int perm[6] = {3, 0, 5, 1, 4, 2};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) p(i, j) = z(perm[i], j);
  SvdResult rz = svd(z);
  SvdResult rp = svd(p);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(rz.s[i] - rp.s[i]) <= 1e-10);
}

TEST_CASE("svd rejects non-finite input") {
  Matrix z(2, 2);
  z(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd(z), daln::ValueError);
}

TEST_CASE("spectral and frobenius norms") {
  CHECK(daln::spectral_norm(Matrix::identity(4)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(daln::frobenius(Matrix::identity(4)) ==
        doctest::Approx(2.0).epsilon(1e-12));

  // rank one outer product of unit vectors
  const double u[2] = {0.6, 0.8};
  const double v[3] = {1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0};
  Matrix z(2, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) z(i, j) = u[i] * v[j];
  CHECK(daln::spectral_norm(z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(daln::frobenius(z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(daln::nuclear_norm_value(z) == doctest::Approx(1.0).epsilon(1e-12));

  for (uint64_t seed : {50, 51, 52}) {
    Matrix m = random_matrix(5, 5, seed);
    const double spec = daln::spectral_norm(m);
    const double frob = daln::frobenius(m);
    CHECK(spec <= frob + 1e-12);
    CHECK(frob <= std::sqrt(5.0) * spec + 1e-12);
  }
}

TEST_CASE("nuclear norm sits between frobenius and sqrt(r) frobenius") {
  for (uint64_t seed : {60, 61, 62, 63}) {
    Matrix z = random_matrix(6, 4, seed);
    const double nuc = daln::nuclear_norm_value(z);
    const double frob = daln::frobenius(z);
    CHECK(frob <= nuc + 1e-12);
    CHECK(nuc <= 2.0 * frob + 1e-12);  // sqrt(min(6,4)) = 2
  }
}

TEST_CASE("finite difference gradient helper on a quadratic") {
  // f = sum of squares has gradient 2x
  auto f = [](const Matrix& x) {
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i) s += x.data()[i] * x.data()[i];
    return s;
  };
  Matrix x = random_matrix(3, 2, 70);
  Matrix grad = daln::fd_gradient(f, x);
  CHECK(daln::max_rel_err(grad, scaled(x, 2.0)) < 1e-8);
}

TEST_CASE("symmetric eigen oracle on a known matrix") {
  // eigenvalues of [[2,1],[1,2]] are 3 and 1
  Matrix a = Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
  auto eig = daln::jacobi_eigen_sym(a);
  CHECK(eig[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(eig[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(daln::jacobi_eigen_sym(Matrix(2, 3)), daln::ShapeError);
}
