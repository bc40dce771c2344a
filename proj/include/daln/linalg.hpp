#pragma once

#include <vector>

#include "daln/matrix.hpp"

namespace daln {

/// Thin SVD of a b×k matrix: z = u·diag(s)·vᵀ with r = min(b,k),
/// u b×r and v k×r orthonormal, s nonincreasing and nonnegative.
struct SvdResult {
  Matrix u;
  std::vector<double> s;
  Matrix v;
};

/// One-sided Jacobi SVD. Deterministic for a fixed input: fixed cyclic sweep
/// order, and each column of u has its largest-magnitude entry positive
/// (first such entry on ties). Zero columns of u are completed to an
/// orthonormal basis by Gram-Schmidt against canonical vectors.
/// Throws NumericError if the sweep cap is reached before the relative
/// off-diagonal tolerance.
SvdResult svd(const Matrix& z);

/// Largest singular value.
double spectral_norm(const Matrix& w);

/// Entry-wise root sum of squares.
double frobenius(const Matrix& w);

/// Sum of singular values.
double nuclear_norm_value(const Matrix& z);

}  // namespace daln
