#pragma once

#include <functional>
#include <vector>

#include "daln/matrix.hpp"

namespace daln {

/// Central finite-difference gradient of a scalar function at x.
Matrix fd_gradient(const std::function<double(const Matrix&)>& f,
                   const Matrix& x, double h = 1e-6);

/// max |got - want| / max(max |want|, floor). Used to compare a computed
/// gradient against a reference at a single relative scale.
double max_rel_err(const Matrix& got, const Matrix& want,
                   double floor = 1e-12);

/// Eigenvalues of a symmetric matrix, sorted nonincreasing, via classic
/// two-sided cyclic Jacobi. Deliberately a separate algorithm from the
/// one-sided SVD so the two can cross-check each other.
std::vector<double> jacobi_eigen_sym(const Matrix& a);

}  // namespace daln
