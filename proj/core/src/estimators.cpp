#include "gridse/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridse {

void EstimatorConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("estimator config: alpha must be in (0,1)");
  }
  if (!(p_h > 0.0 && p_h < 1.0)) {
    throw ConfigError("estimator config: p_h must be in (0,1)");
  }
  if (n_best < 1) {
    throw ConfigError("estimator config: n_best must be >= 1");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ConfigError("estimator config: rho must be in [0,1)");
  }
  if (h_cap < 1) {
    throw ConfigError("estimator config: h_cap must be >= 1");
  }
}

std::string EstimatorConfig::label() const {
  if (!name.empty()) return name;
  switch (kind) {
    case EstimatorKind::LeastSquares: return "least_squares";
    case EstimatorKind::Kalman: return "kalman";
    case EstimatorKind::Pcna: return "pcna";
    case EstimatorKind::Cckf: return "cckf";
  }
  return "unknown";
}

Vector least_squares_estimate(const Matrix& H, const Vector& y) {
  if (H.rows() < H.cols()) {
    throw std::invalid_argument("least_squares_estimate: underdetermined system");
  }
  if (y.size() != H.rows()) {
    throw std::invalid_argument("least_squares_estimate: dimension mismatch");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(H);
  if (qr.rank() < H.cols()) {
    throw NumericalError("least_squares_estimate: rank-deficient system");
  }
  return qr.solve(y);
}

Prediction kf_predict(const FilterState& state, const SystemModel& model) {
  if (state.x_hat.size() != model.p) {
    throw std::invalid_argument("kf_predict: dimension mismatch");
  }
  Prediction pred;
  pred.x = model.A * state.x_hat;
  Matrix P = model.A * state.P * model.A.transpose();
  P.diagonal().array() += model.sigma_w2;
  pred.P = 0.5 * (P + P.transpose());
  return pred;
}

Matrix kf_gain(const Matrix& P_pred, const Matrix& C_sub, double sigma_v2,
               double rho, Rng* rng) {
  const Eigen::Index d = C_sub.rows();
  if (d < 1) {
    throw std::invalid_argument("kf_gain: need at least one sensor row");
  }
  Matrix innovation_cov = C_sub * P_pred * C_sub.transpose();
  innovation_cov.diagonal().array() += sigma_v2;
  Eigen::LLT<Matrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("kf_gain: singular innovation covariance");
  }
  // K = P C^T S^{-1} = (S^{-1} C P)^T, using symmetry of P and S.
  Matrix K = llt.solve(C_sub * P_pred).transpose();
  if (rho > 0.0) {
    if (rng == nullptr) {
      throw std::invalid_argument("kf_gain: rho > 0 requires an rng");
    }
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      for (Eigen::Index j = 0; j < K.cols(); ++j) {
        const double radius = rho * std::abs(K(i, j));
        K(i, j) += radius * draw_uniform(*rng, -1.0, 1.0);
      }
    }
  }
  return K;
}

FilterState kf_update(const Vector& x_pred, const Matrix& P_pred,
                      const Matrix& K, const Matrix& C_sub,
                      const Vector& y_sub, int k) {
  if (C_sub.rows() != y_sub.size() || K.cols() != C_sub.rows() ||
      K.rows() != x_pred.size()) {
    throw std::invalid_argument("kf_update: dimension mismatch");
  }
  FilterState next;
  next.x_hat = x_pred + K * (y_sub - C_sub * x_pred);
  Matrix P = (Matrix::Identity(P_pred.rows(), P_pred.cols()) - K * C_sub) * P_pred;
  next.P = 0.5 * (P + P.transpose());
  next.k = k;
  return next;
}

FilterState bootstrap_filter(const SystemModel& model,
                             const MeasurementFrame& frame) {
  FilterState state;
  state.x_hat = least_squares_estimate(model.C, frame.y_observed);
  state.P = Matrix::Identity(model.p, model.p);
  state.k = frame.k;
  return state;
}

namespace {

// Covariance propagation for a gain that is not the optimal one. The plain
// (I - KC)P form is only a covariance at the optimum; a perturbed gain needs
// the gain-agnostic form (I - KC)P(I - KC)^T + sigma_v2 K K^T or P drifts
// indefinite within a few dozen steps.
FilterState kf_update_joseph(const Vector& x_pred, const Matrix& P_pred,
                             const Matrix& K, const Matrix& C_sub,
                             const Vector& y_sub, double sigma_v2, int k) {
  FilterState next;
  next.x_hat = x_pred + K * (y_sub - C_sub * x_pred);
  const Matrix closed =
      Matrix::Identity(P_pred.rows(), P_pred.cols()) - K * C_sub;
  Matrix P = closed * P_pred * closed.transpose() +
             sigma_v2 * K * K.transpose();
  next.P = 0.5 * (P + P.transpose());
  next.k = k;
  return next;
}

FilterState filter_update_on(const FilterState& state,
                             const MeasurementFrame& frame,
                             const SystemModel& model, const IndexSet& used,
                             double rho, Rng* rng) {
  const Prediction pred = kf_predict(state, model);
  const Matrix c_sub = select_rows(model.C, used);
  const Matrix K = kf_gain(pred.P, c_sub, model.sigma_v2, rho, rng);
  const Vector y_sub = select_entries(frame.y_observed, used);
  if (rho > 0.0) {
    return kf_update_joseph(pred.x, pred.P, K, c_sub, y_sub, model.sigma_v2,
                            frame.k);
  }
  return kf_update(pred.x, pred.P, K, c_sub, y_sub, frame.k);
}

struct ExpandingSelection {
  IndexSet sensors;
  bool certified = false;
  double statistic = 0.0;
};

// Rank-based expanding selection anchored on the filter's one-step
// prediction: seeds come from exact subset fits, admission is checked
// against C x_pred so column-space forgeries cannot vouch for themselves.
ExpandingSelection expanding_select(const FilterState& state,
                                    const MeasurementFrame& frame,
                                    const SystemModel& model,
                                    const EstimatorConfig& cfg, Rng& rng) {
  const Vector x_pred = model.A * state.x_hat;
  const ConsistencyVariant admit = ConsistencyVariant::filter_based(x_pred);
  const std::vector<SeedCandidate> seeds =
      seed_candidates(model.C, frame.y_observed, cfg.p_h, cfg.n_best, cfg.alpha,
                      model.sigma_v2, rng, cfg.h_cap);

  ExpandingSelection best;
  for (const SeedCandidate& seed : seeds) {
    std::vector<std::pair<double, int>> order;
    for (int i = 0; i < model.n; ++i) {
      if (contains(seed.subset, i)) continue;
      order.emplace_back(
          std::abs(model.C.row(i).dot(seed.estimate) - frame.y_observed(i)), i);
    }
    std::sort(order.begin(), order.end());

    IndexSet current = seed.subset;
    for (const auto& [res, i] : order) {
      IndexSet trial = current;
      trial.insert(std::upper_bound(trial.begin(), trial.end(), i), i);
      const ConsistencyVerdict v =
          check_consistency(admit, model.C, model.A, trial,
                            frame.y_observed, cfg.alpha, model.sigma_v2);
      if (v.pass) current = std::move(trial);
    }

    ExpandingSelection candidate;
    candidate.sensors = std::move(current);
    if (static_cast<int>(candidate.sensors.size()) > model.p) {
      const ConsistencyVerdict final_v =
          check_consistency(admit, model.C, model.A, candidate.sensors,
                            frame.y_observed, cfg.alpha, model.sigma_v2);
      candidate.certified = final_v.pass;
      candidate.statistic = final_v.statistic;
    }
    const bool better =
        best.sensors.empty() ||
        candidate.sensors.size() > best.sensors.size() ||
        (candidate.sensors.size() == best.sensors.size() &&
         (candidate.certified > best.certified ||
          (candidate.certified == best.certified &&
           candidate.statistic < best.statistic)));
    if (better) best = std::move(candidate);
  }
  return best;
}

}  // namespace

FilterState kalman_step(const FilterState& state, const MeasurementFrame& frame,
                        const SystemModel& model, double rho, Rng* rng) {
  if (state.k != frame.k - 1) {
    throw std::invalid_argument("kalman_step: filter state lags the frame by != 1");
  }
  IndexSet all(model.n);
  std::iota(all.begin(), all.end(), 0);
  return filter_update_on(state, frame, model, all, rho, rng);
}

StepResult pcna_step(const FilterState& state, const MeasurementFrame& frame,
                     const SystemModel& model, const EstimatorConfig& cfg,
                     Rng* rng) {
  if (state.k != frame.k - 1) {
    throw std::invalid_argument("pcna_step: filter state lags the frame by != 1");
  }
  const SelectionResult sel =
      pcna_select(model, state.x_hat, frame.y_observed, cfg.alpha);
  StepResult result;
  result.used = sel.sensors;
  result.flagged = sel.exhausted;
  result.state = filter_update_on(state, frame, model, sel.sensors, cfg.rho, rng);
  return result;
}

StepResult cckf_step(const FilterState& state, const MeasurementFrame& frame,
                     const SystemModel& model, const EstimatorConfig& cfg,
                     Rng& rng) {
  if (state.k != frame.k - 1) {
    throw std::invalid_argument("cckf_step: filter state lags the frame by != 1");
  }
  StepResult result;
  if (cfg.selector == SelectorKind::Pcna) {
    const SelectionResult sel =
        pcna_select(model, state.x_hat, frame.y_observed, cfg.alpha);
    result.used = sel.sensors;
    result.flagged = sel.exhausted;
  } else {
    ExpandingSelection sel = expanding_select(state, frame, model, cfg, rng);
    result.used = std::move(sel.sensors);
    result.flagged = !sel.certified;
  }
  result.state = filter_update_on(state, frame, model, result.used, cfg.rho, &rng);
  return result;
}

}  // namespace gridse
