#pragma once

#include <cstdint>
#include <string>

#include "gridse/consistency.hpp"
#include "gridse/model.hpp"
#include "gridse/rng.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// Posterior state estimate and covariance at time k.
struct FilterState {
  Vector x_hat;
  Matrix P;
  int k = 0;
};

enum class SelectorKind { Pcna, RankExpanding };
enum class EstimatorKind { LeastSquares, Kalman, Pcna, Cckf };

struct EstimatorConfig {
  std::string name;  // label used in reports; defaults to the kind
  EstimatorKind kind = EstimatorKind::Cckf;
  SelectorKind selector = SelectorKind::Pcna;
  double alpha = 0.005;
  double p_h = 0.995;
  int n_best = 1;
  double rho = 0.0;          // relative gain-perturbation radius
  std::int64_t h_cap = 5000; // seeding draw budget cap

  void validate() const;
  std::string label() const;
};

/// argmin_x ||H x - y|| for full-column-rank H with d >= p rows.
Vector least_squares_estimate(const Matrix& H, const Vector& y);

struct Prediction {
  Vector x;
  Matrix P;
};

/// x(k|k-1) = A x(k-1|k-1), P(k|k-1) = A P A^T + sigma_w2 I (re-symmetrized).
Prediction kf_predict(const FilterState& state, const SystemModel& model);

/// K = P C^T (C P C^T + sigma_v2 I)^{-1}, then each entry independently
/// perturbed to K' ~ Uniform(K - rho|K|, K + rho|K|). rho = 0 keeps K exact
/// and ignores rng (which may be null in that case).
Matrix kf_gain(const Matrix& P_pred, const Matrix& C_sub, double sigma_v2,
               double rho, Rng* rng);

/// x(k|k) = x_pred + K (y - C x_pred), P(k|k) = (I - K C) P_pred
/// (re-symmetrized).
FilterState kf_update(const Vector& x_pred, const Matrix& P_pred,
                      const Matrix& K, const Matrix& C_sub,
                      const Vector& y_sub, int k);

/// Filter start: least squares over all sensors of the given frame,
/// covariance I_p.
FilterState bootstrap_filter(const SystemModel& model,
                             const MeasurementFrame& frame);

struct StepResult {
  FilterState state;
  IndexSet used;
  bool flagged = false;  // selector could not certify a consistent set
};

/// Plain filter step on every sensor, no consistency screening. rng may be
/// null when rho == 0.
FilterState kalman_step(const FilterState& state, const MeasurementFrame& frame,
                        const SystemModel& model, double rho,
                        Rng* rng = nullptr);

/// Predictive selection followed by a Kalman update on the surviving
/// sensors. rng may be null when cfg.rho == 0.
StepResult pcna_step(const FilterState& state, const MeasurementFrame& frame,
                     const SystemModel& model, const EstimatorConfig& cfg,
                     Rng* rng = nullptr);

/// Consistent-set selection (predictive or rank-based expanding, per
/// cfg.selector) followed by a modified-gain Kalman update. The expanding
/// selector admits sensors against the filter's one-step prediction.
StepResult cckf_step(const FilterState& state, const MeasurementFrame& frame,
                     const SystemModel& model, const EstimatorConfig& cfg,
                     Rng& rng);

}  // namespace gridse
