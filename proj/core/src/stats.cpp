#include "gridse/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "gridse/linalg.hpp"

namespace gridse {

SampleStats sample_stats(std::span<const Vector> samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument("sample_stats: need at least two samples");
  }
  const Eigen::Index dim = samples[0].size();
  for (const Vector& s : samples) {
    if (s.size() != dim) {
      throw std::invalid_argument("sample_stats: samples of unequal length");
    }
  }
  const double count = static_cast<double>(samples.size());
  Vector mean = Vector::Zero(dim);
  for (const Vector& s : samples) mean += s;
  mean /= count;

  Matrix cov = Matrix::Zero(dim, dim);
  for (const Vector& s : samples) {
    const Vector c = s - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= count - 1.0;
  return {std::move(mean), std::move(cov)};
}

Vector mahalanobis_transform(const Vector& y, const SampleStats& stats) {
  if (y.size() != stats.mean.size()) {
    throw std::invalid_argument("mahalanobis_transform: dimension mismatch");
  }
  const SpectralDecomposition dec = spectral_decompose(stats.cov);
  const double lambda_max = dec.D(0);
  const double lambda_min = dec.D(dec.D.size() - 1);
  if (lambda_min <= 1e-10 * lambda_max) {
    throw NumericalError("mahalanobis_transform: singular covariance");
  }
  return matrix_power(stats.cov, -0.5) * (y - stats.mean);
}

double mahalanobis_distance(const Vector& x, const Vector& mu,
                            const Matrix& sigma) {
  if (x.size() != mu.size() || sigma.rows() != x.size() ||
      sigma.cols() != x.size()) {
    throw std::invalid_argument("mahalanobis_distance: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mahalanobis_distance: sigma is not positive definite");
  }
  const Vector diff = x - mu;
  const double quad = diff.dot(llt.solve(diff));
  return std::sqrt(std::max(quad, 0.0));
}

double chi_square_quantile(int dof, double prob) {
  if (dof < 1) {
    throw std::invalid_argument("chi_square_quantile: dof must be >= 1");
  }
  if (!(prob > 0.0 && prob < 1.0)) {
    throw std::invalid_argument("chi_square_quantile: prob must be in (0,1)");
  }
  boost::math::chi_squared_distribution<double> dist(static_cast<double>(dof));
  return boost::math::quantile(dist, prob);
}

}  // namespace gridse
