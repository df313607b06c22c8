#pragma once

#include <cstdint>
#include <optional>

#include "gridse/model.hpp"
#include "gridse/rng.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// The four flavours of the tau-consistency check.
///
/// StaticEuclidean   fits the subset by least squares and tests the
///                   Euclidean residual norm.
/// StaticMahalanobis same fit, residual norm weighted by a covariance.
/// Predictive        no fit: residuals of y(k) against C A x_prev.
/// FilterBased       no fit: residuals of y(k) against C x_filter.
struct ConsistencyVariant {
  enum class Kind { StaticEuclidean, StaticMahalanobis, Predictive, FilterBased };

  Kind kind = Kind::StaticEuclidean;
  std::optional<Matrix> sigma;      // StaticMahalanobis only
  std::optional<Vector> reference;  // Predictive: x_prev; FilterBased: x_filter

  static ConsistencyVariant static_euclidean();
  static ConsistencyVariant static_mahalanobis(Matrix sigma);
  static ConsistencyVariant predictive(Vector x_prev);
  static ConsistencyVariant filter_based(Vector x_filter);
};

struct ConsistencyVerdict {
  bool pass = false;
  double statistic = 0.0;
  double threshold = 0.0;
  Vector estimate;  // state used to form the residuals
  IndexSet subset;
};

/// Size-p candidate from the seeding phase: the subset, its exact-fit
/// estimate, and the sum of the delta smallest squared residuals over all
/// sensors.
struct SeedCandidate {
  IndexSet subset;
  Vector estimate;
  double score = 0.0;
};

struct SelectionResult {
  IndexSet sensors;
  bool exhausted = false;  // stopped at the benign floor while still failing
};

/// Guaranteed number of benign sensors when fewer than half of the
/// redundant measurements are compromised: delta = n - floor((n-p-1)/2).
int benign_floor(int n, int p);

/// Number of random size-p subsets needed so that at least one is all-benign
/// with probability p_h, given delta benign sensors among n. Computed in log
/// space; exact for the small cases checked by tests.
std::int64_t seed_subset_count(int n, int p, int delta, double p_h);

/// Detection threshold: tau = sqrt(sigma_v2 * chisq_quantile(d - p, 1 - alpha)).
/// The check rejects when the residual statistic reaches tau, so alpha is the
/// false-alarm probability under clean data.
double tau_threshold(int d, int p, double alpha, double sigma_v2);

/// Evaluates one tau-consistency check on `subset`. For the static variants
/// the subset must have more than p sensors and full-rank rows; the
/// Mahalanobis variant is thresholded on the whitened scale (unit variance).
ConsistencyVerdict check_consistency(const ConsistencyVariant& variant,
                                     const Matrix& C, const Matrix& A,
                                     const IndexSet& subset, const Vector& y,
                                     double alpha, double sigma_v2);

/// Exhaustive search for a largest tau-consistent subset (StaticEuclidean),
/// descending by cardinality, lexicographically smallest among ties.
/// Guarded to n <= 15 sensors.
IndexSet brute_force_max_consistent(const Matrix& C, const Vector& y,
                                    double alpha, double sigma_v2);

/// Seeding phase: draws random size-p subsets, fits each exactly, scores by
/// the sum of the delta smallest squared residuals over all sensors, and
/// returns the n_best lowest-scoring candidates (ascending). Rank-deficient
/// draws are discarded and redrawn, up to 10x the draw budget. The formula
/// value of h is capped at h_cap to stay tractable at large n.
std::vector<SeedCandidate> seed_candidates(const Matrix& C, const Vector& y,
                                           double p_h, int n_best, double alpha,
                                           double sigma_v2, Rng& rng,
                                           std::int64_t h_cap = 5000);

/// Expanding phase: sensors outside the seed are tried in ascending order of
/// absolute residual against the seed estimate; each is kept iff the grown
/// set still passes the StaticEuclidean check (estimate and threshold
/// refreshed per candidate).
IndexSet expand_seed(const SeedCandidate& seed, const Matrix& C,
                     const Vector& y, double alpha, double sigma_v2);

/// Predictive selection: starting from all sensors, repeatedly drop the
/// sensor with the largest absolute residual against C A x_prev until the
/// Predictive check passes or the benign floor is reached (then flagged).
SelectionResult pcna_select(const SystemModel& model, const Vector& x_prev,
                            const Vector& y, double alpha);

}  // namespace gridse
