#include "gridse/consistency.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridse/stats.hpp"

namespace gridse {

ConsistencyVariant ConsistencyVariant::static_euclidean() {
  return {Kind::StaticEuclidean, std::nullopt, std::nullopt};
}

ConsistencyVariant ConsistencyVariant::static_mahalanobis(Matrix sigma) {
  return {Kind::StaticMahalanobis, std::move(sigma), std::nullopt};
}

ConsistencyVariant ConsistencyVariant::predictive(Vector x_prev) {
  return {Kind::Predictive, std::nullopt, std::move(x_prev)};
}

ConsistencyVariant ConsistencyVariant::filter_based(Vector x_filter) {
  return {Kind::FilterBased, std::nullopt, std::move(x_filter)};
}

int benign_floor(int n, int p) {
  if (n <= p) {
    throw std::invalid_argument("benign_floor: n must exceed p");
  }
  return n - (n - p - 1) / 2;
}

std::int64_t seed_subset_count(int n, int p, int delta, double p_h) {
  if (!(p <= delta && delta <= n)) {
    throw std::invalid_argument("seed_subset_count: need p <= delta <= n");
  }
  if (!(p_h > 0.0 && p_h < 1.0)) {
    throw std::invalid_argument("seed_subset_count: p_h must be in (0,1)");
  }
  auto log_binom = [](int a, int b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
  };
  const double log_p_delta = log_binom(delta, p) - log_binom(n, p);
  if (log_p_delta >= -1e-14) return 1;  // every subset is benign
  const double p_delta = std::exp(log_p_delta);
  const double ratio = std::log1p(-p_h) / std::log1p(-p_delta);
  // Small backoff so exact-integer ratios survive roundoff in the lgamma path.
  return static_cast<std::int64_t>(std::ceil(ratio - 1e-9));
}

double tau_threshold(int d, int p, double alpha, double sigma_v2) {
  if (d <= p) {
    throw std::invalid_argument("tau_threshold: subset size must exceed p");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("tau_threshold: alpha must be in (0,1)");
  }
  return std::sqrt(sigma_v2 * chi_square_quantile(d - p, 1.0 - alpha));
}

namespace {

// Least-squares fit over the subset rows; throws NumericalError when the
// rows lose column rank.
Vector subset_least_squares(const Matrix& C, const IndexSet& subset,
                            const Vector& y) {
  const Matrix c_sub = select_rows(C, subset);
  Eigen::ColPivHouseholderQR<Matrix> qr(c_sub);
  if (qr.rank() < C.cols()) {
    throw NumericalError("consistency check: singular normal equations");
  }
  return qr.solve(select_entries(y, subset));
}

}  // namespace

ConsistencyVerdict check_consistency(const ConsistencyVariant& variant,
                                     const Matrix& C, const Matrix& A,
                                     const IndexSet& subset, const Vector& y,
                                     double alpha, double sigma_v2) {
  using Kind = ConsistencyVariant::Kind;
  const int p = static_cast<int>(C.cols());
  const int d = static_cast<int>(subset.size());
  if (d <= p) {
    throw std::invalid_argument("check_consistency: subset size must exceed p");
  }

  ConsistencyVerdict verdict;
  verdict.subset = subset;

  switch (variant.kind) {
    case Kind::StaticEuclidean: {
      verdict.estimate = subset_least_squares(C, subset, y);
      const Vector r =
          select_rows(C, subset) * verdict.estimate - select_entries(y, subset);
      verdict.statistic = r.norm();
      verdict.threshold = tau_threshold(d, p, alpha, sigma_v2);
      break;
    }
    case Kind::StaticMahalanobis: {
      if (!variant.sigma) {
        throw std::invalid_argument("check_consistency: missing covariance");
      }
      verdict.estimate = subset_least_squares(C, subset, y);
      const Vector r =
          select_rows(C, subset) * verdict.estimate - select_entries(y, subset);
      Matrix sigma_sub(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          sigma_sub(i, j) = (*variant.sigma)(subset[i], subset[j]);
        }
      }
      Eigen::LLT<Matrix> llt(sigma_sub);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("check_consistency: covariance not positive definite");
      }
      verdict.statistic = std::sqrt(std::max(0.0, r.dot(llt.solve(r))));
      // The weighted residual is already on the whitened scale.
      verdict.threshold = tau_threshold(d, p, alpha, 1.0);
      break;
    }
    case Kind::Predictive: {
      if (!variant.reference) {
        throw std::invalid_argument("check_consistency: missing reference estimate");
      }
      verdict.estimate = A * (*variant.reference);
      const Vector r =
          select_rows(C, subset) * verdict.estimate - select_entries(y, subset);
      verdict.statistic = r.norm();
      verdict.threshold = tau_threshold(d, p, alpha, sigma_v2);
      break;
    }
    case Kind::FilterBased: {
      if (!variant.reference) {
        throw std::invalid_argument("check_consistency: missing reference estimate");
      }
      verdict.estimate = *variant.reference;
      const Vector r =
          select_rows(C, subset) * verdict.estimate - select_entries(y, subset);
      verdict.statistic = r.norm();
      verdict.threshold = tau_threshold(d, p, alpha, sigma_v2);
      break;
    }
  }
  verdict.pass = verdict.statistic < verdict.threshold;
  return verdict;
}

namespace {

// Lexicographic enumeration of size-d subsets of {0..n-1}.
bool next_combination(IndexSet& comb, int n) {
  const int d = static_cast<int>(comb.size());
  int i = d - 1;
  while (i >= 0 && comb[i] == n - d + i) --i;
  if (i < 0) return false;
  ++comb[i];
  for (int j = i + 1; j < d; ++j) comb[j] = comb[j - 1] + 1;
  return true;
}

}  // namespace

IndexSet brute_force_max_consistent(const Matrix& C, const Vector& y,
                                    double alpha, double sigma_v2) {
  const int n = static_cast<int>(C.rows());
  const int p = static_cast<int>(C.cols());
  if (n > 15) {
    throw std::invalid_argument(
        "brute_force_max_consistent: n too large for exhaustive search");
  }
  const ConsistencyVariant variant = ConsistencyVariant::static_euclidean();
  const Matrix a_unused = Matrix::Identity(p, p);
  for (int d = n; d > p; --d) {
    IndexSet comb(d);
    std::iota(comb.begin(), comb.end(), 0);
    do {
      try {
        const ConsistencyVerdict v =
            check_consistency(variant, C, a_unused, comb, y, alpha, sigma_v2);
        if (v.pass) return comb;
      } catch (const NumericalError&) {
        // rank-deficient subset: unusable, keep searching
      }
    } while (next_combination(comb, n));
  }
  throw NumericalError(
      "brute_force_max_consistent: no consistent subset of size > p");
}

namespace {

IndexSet draw_subset(int n, int p, Rng& rng) {
  // Partial Fisher-Yates over 0..n-1, first p entries kept.
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < p; ++i) {
    const int j = i + draw_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  IndexSet subset(pool.begin(), pool.begin() + p);
  std::sort(subset.begin(), subset.end());
  return subset;
}

}  // namespace

std::vector<SeedCandidate> seed_candidates(const Matrix& C, const Vector& y,
                                           double p_h, int n_best, double alpha,
                                           double sigma_v2, Rng& rng,
                                           std::int64_t h_cap) {
  (void)alpha;  // the seeding phase ranks by raw residual score only
  const int n = static_cast<int>(C.rows());
  const int p = static_cast<int>(C.cols());
  const int delta = benign_floor(n, p);
  const std::int64_t h =
      std::min<std::int64_t>(seed_subset_count(n, p, delta, p_h), h_cap);
  if (n_best < 1 || n_best > h) {
    throw std::invalid_argument("seed_candidates: need 1 <= n_best <= h");
  }
  (void)sigma_v2;

  std::vector<SeedCandidate> candidates;
  candidates.reserve(static_cast<std::size_t>(h));
  std::int64_t usable = 0;
  std::int64_t attempts = 0;
  Vector residual(n);
  while (usable < h && attempts < 10 * h) {
    ++attempts;
    const IndexSet subset = draw_subset(n, p, rng);
    const Matrix c_sub = select_rows(C, subset);
    Eigen::FullPivLU<Matrix> lu(c_sub);
    if (!lu.isInvertible()) continue;
    SeedCandidate cand;
    cand.subset = subset;
    cand.estimate = lu.solve(select_entries(y, subset));
    residual.noalias() = C * cand.estimate - y;
    Vector sq = residual.cwiseAbs2();
    std::nth_element(sq.data(), sq.data() + delta - 1, sq.data() + n);
    cand.score = 0.0;
    for (int i = 0; i < delta; ++i) cand.score += sq(i);
    candidates.push_back(std::move(cand));
    ++usable;
  }
  if (usable < n_best) {
    throw NumericalError("seed_candidates: fewer usable subsets than n_best");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SeedCandidate& a, const SeedCandidate& b) {
                     if (a.score != b.score) return a.score < b.score;
                     return a.subset < b.subset;
                   });
  candidates.resize(static_cast<std::size_t>(n_best));
  return candidates;
}

IndexSet expand_seed(const SeedCandidate& seed, const Matrix& C,
                     const Vector& y, double alpha, double sigma_v2) {
  const int n = static_cast<int>(C.rows());
  if (static_cast<int>(seed.subset.size()) < C.cols()) {
    throw std::invalid_argument("expand_seed: seed smaller than the state dimension");
  }
  const Matrix a_unused = Matrix::Identity(C.cols(), C.cols());
  const ConsistencyVariant variant = ConsistencyVariant::static_euclidean();

  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < n; ++i) {
    if (contains(seed.subset, i)) continue;
    order.emplace_back(std::abs(C.row(i).dot(seed.estimate) - y(i)), i);
  }
  std::sort(order.begin(), order.end());

  IndexSet current = seed.subset;
  for (const auto& [res, i] : order) {
    IndexSet trial = current;
    trial.insert(std::upper_bound(trial.begin(), trial.end(), i), i);
    try {
      if (check_consistency(variant, C, a_unused, trial, y, alpha, sigma_v2)
              .pass) {
        current = std::move(trial);
      }
    } catch (const NumericalError&) {
      // unusable candidate row
    }
  }
  return current;
}

SelectionResult pcna_select(const SystemModel& model, const Vector& x_prev,
                            const Vector& y, double alpha) {
  if (y.size() != model.n || x_prev.size() != model.p) {
    throw std::invalid_argument("pcna_select: dimension mismatch");
  }
  const int delta = benign_floor(model.n, model.p);
  const Vector prediction = model.C * (model.A * x_prev);

  SelectionResult result;
  result.sensors.resize(model.n);
  std::iota(result.sensors.begin(), result.sensors.end(), 0);

  while (true) {
    const int d = static_cast<int>(result.sensors.size());
    double norm_sq = 0.0;
    double worst = -1.0;
    int worst_pos = 0;
    for (int pos = 0; pos < d; ++pos) {
      const int i = result.sensors[pos];
      const double r = std::abs(prediction(i) - y(i));
      norm_sq += r * r;
      if (r > worst) {
        worst = r;
        worst_pos = pos;
      }
    }
    if (std::sqrt(norm_sq) <
        tau_threshold(d, model.p, alpha, model.sigma_v2)) {
      return result;
    }
    if (d <= delta) {
      result.exhausted = true;
      return result;
    }
    result.sensors.erase(result.sensors.begin() + worst_pos);
  }
}

}  // namespace gridse
