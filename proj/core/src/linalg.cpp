#include "gridse/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace gridse {

namespace {
constexpr double kSymmetryTol = 1e-10;
constexpr double kRankTol = 1e-10;  // relative to the largest singular value
}  // namespace

SpectralDecomposition spectral_decompose(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("spectral_decompose: matrix must be square");
  }
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) {
    throw std::invalid_argument("spectral_decompose: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (a + a.transpose()));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_decompose: eigensolver failed");
  }
  // Eigen sorts ascending; flip to descending.
  const Eigen::Index p = a.rows();
  SpectralDecomposition dec;
  dec.D = solver.eigenvalues().reverse();
  dec.U.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    dec.U.col(j) = solver.eigenvectors().col(p - 1 - j);
  }
  return dec;
}

Matrix matrix_power(const Matrix& a, double exponent) {
  const SpectralDecomposition dec = spectral_decompose(a);
  const double lambda_max = dec.D.size() > 0 ? dec.D(0) : 0.0;
  const double scale = std::max(1.0, std::abs(lambda_max));
  const bool integral = exponent == std::floor(exponent);

  Vector powered(dec.D.size());
  for (Eigen::Index i = 0; i < dec.D.size(); ++i) {
    double lambda = dec.D(i);
    if (exponent < 0.0 && lambda <= kRankTol * scale) {
      throw NumericalError(
          "matrix_power: non-positive eigenvalue with negative exponent");
    }
    if (!integral) {
      if (lambda < -1e-8 * scale) {
        throw NumericalError(
            "matrix_power: negative eigenvalue with fractional exponent");
      }
      lambda = std::max(lambda, 0.0);
    }
    powered(i) = std::pow(lambda, exponent);
  }
  return dec.U * powered.asDiagonal() * dec.U.transpose();
}

Matrix generalized_inverse(const Matrix& a) {
  if (a.size() == 0) return a.transpose();
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? kRankTol * sv(0) : 0.0;
  Vector inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int numerical_rank(const Matrix& a) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? kRankTol * sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

}  // namespace gridse
