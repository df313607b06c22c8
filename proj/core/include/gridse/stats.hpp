#pragma once

#include <span>

#include "gridse/types.hpp"

namespace gridse {

/// Sample mean and unbiased sample covariance of a batch of vectors.
struct SampleStats {
  Vector mean;
  Matrix cov;
};

/// Requires at least two samples of equal dimension.
SampleStats sample_stats(std::span<const Vector> samples);

/// Whitening map z = cov^{-1/2} (y - mean). The covariance must be
/// positive definite (min eigenvalue > 1e-10 * max eigenvalue).
Vector mahalanobis_transform(const Vector& y, const SampleStats& stats);

/// sqrt((x - mu)^T sigma^{-1} (x - mu)); sigma must be positive definite.
double mahalanobis_distance(const Vector& x, const Vector& mu,
                            const Matrix& sigma);

/// Inverse CDF of the chi-square distribution.
double chi_square_quantile(int dof, double prob);

}  // namespace gridse
