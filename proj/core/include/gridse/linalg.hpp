#pragma once

#include "gridse/types.hpp"

namespace gridse {

/// Eigendecomposition A = U diag(D) U^T of a symmetric matrix,
/// eigenvalues sorted descending.
struct SpectralDecomposition {
  Matrix U;
  Vector D;
};

/// Decomposes a symmetric matrix. Throws if the input deviates from
/// symmetry by more than 1e-10 (absolute, entrywise).
SpectralDecomposition spectral_decompose(const Matrix& a);

/// A^x = U diag(D^x) U^T. Negative exponents require positive definite A;
/// fractional exponents require positive semidefinite A (eigenvalues within
/// roundoff of zero are clamped).
Matrix matrix_power(const Matrix& a, double exponent);

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// 1e-10 * sigma_max are treated as zero.
Matrix generalized_inverse(const Matrix& a);

/// Numerical rank with the same relative singular-value cutoff as
/// generalized_inverse.
int numerical_rank(const Matrix& a);

}  // namespace gridse
