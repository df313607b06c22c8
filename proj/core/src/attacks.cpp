#include "gridse/attacks.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridse/linalg.hpp"

namespace gridse {

AttackVector random_attack(const RandomAttackSpec& spec,
                           const SystemModel& model, Rng& rng) {
  const int available = model.n - static_cast<int>(model.protected_sensors.size());
  if (spec.m < 0 || spec.m > available) {
    throw std::invalid_argument(
        "random_attack: m exceeds the number of attackable sensors");
  }
  IndexSet pool;
  pool.reserve(available);
  for (int i = 0; i < model.n; ++i) {
    if (!contains(model.protected_sensors, i)) pool.push_back(i);
  }
  for (int i = 0; i < spec.m; ++i) {
    const int j = i + draw_index(rng, static_cast<int>(pool.size()) - i);
    std::swap(pool[i], pool[j]);
  }
  AttackVector attack;
  attack.support.assign(pool.begin(), pool.begin() + spec.m);
  std::sort(attack.support.begin(), attack.support.end());
  attack.phi = Vector::Zero(model.n);
  for (int i : attack.support) {
    attack.phi(i) = spec.magnitude * draw_normal(rng);
  }
  return attack;
}

AttackVector bypass_attack(const Matrix& C, const Vector& e) {
  if (e.size() != C.cols()) {
    throw std::invalid_argument("bypass_attack: e must have p entries");
  }
  AttackVector attack;
  attack.phi = C * e;
  for (int i = 0; i < attack.phi.size(); ++i) {
    if (attack.phi(i) != 0.0) attack.support.push_back(i);
  }
  return attack;
}

AttackVector specific_sensor_attack(const Matrix& C, const IndexSet& sensors,
                                    const Vector& d) {
  const int n = static_cast<int>(C.rows());
  const int m = static_cast<int>(sensors.size());
  if (d.size() != m) {
    throw std::invalid_argument("specific_sensor_attack: |d| must equal |sensors|");
  }
  for (int i : sensors) {
    if (i < 0 || i >= n) {
      throw std::invalid_argument("specific_sensor_attack: sensor index out of range");
    }
  }
  // B = C (C^T C)^- C^T - I; accessible columns of B must lose rank for a
  // nonzero stealthy vector to exist.
  const Matrix projector =
      C * generalized_inverse(C.transpose() * C) * C.transpose();
  const Matrix B = projector - Matrix::Identity(n, n);
  Matrix b_cols(n, m);
  for (int j = 0; j < m; ++j) b_cols.col(j) = B.col(sensors[j]);
  if (numerical_rank(b_cols) == m) {
    throw NumericalError(
        "specific_sensor_attack: no stealthy attack for this sensor set");
  }
  const Vector reduced =
      (Matrix::Identity(m, m) - generalized_inverse(b_cols) * b_cols) * d;

  AttackVector attack;
  attack.phi = Vector::Zero(n);
  for (int j = 0; j < m; ++j) attack.phi(sensors[j]) = reduced(j);
  attack.support = sensors;
  std::sort(attack.support.begin(), attack.support.end());

  const double phi_norm = attack.phi.norm();
  if (phi_norm > 0.0 && (B * attack.phi).norm() > 1e-6 * phi_norm) {
    throw NumericalError(
        "specific_sensor_attack: constructed vector is not stealthy");
  }
  return attack;
}

AttackVector targeted_attack(const Matrix& C, const IndexSet& targets,
                             const Vector& shifts) {
  const int p = static_cast<int>(C.cols());
  const int u = static_cast<int>(targets.size());
  if (shifts.size() != u) {
    throw std::invalid_argument("targeted_attack: |shifts| must equal |targets|");
  }
  if (u >= p) {
    throw std::invalid_argument("targeted_attack: need fewer targets than states");
  }
  Vector e = Vector::Zero(p);
  for (int j = 0; j < u; ++j) {
    if (targets[j] < 0 || targets[j] >= p) {
      throw std::invalid_argument("targeted_attack: target index out of range");
    }
    e(targets[j]) = shifts(j);
  }
  return bypass_attack(C, e);
}

Matrix observability_matrix(const SystemModel& model, int eta) {
  if (eta < 1 || eta > model.p) {
    throw std::invalid_argument("observability_matrix: need 1 <= eta <= p");
  }
  Matrix O(model.n * eta, model.p);
  Matrix power = Matrix::Identity(model.p, model.p);
  for (int block = 0; block < eta; ++block) {
    O.middleRows(block * model.n, model.n) = model.C * power;
    power = model.A * power;
  }
  return O;
}

ObservabilityBypassResult observability_bypass(const SystemModel& model,
                                               int eta, const Vector& phi_base) {
  if (phi_base.size() != model.n) {
    throw std::invalid_argument("observability_bypass: phi_base must have n entries");
  }
  const Matrix O = observability_matrix(model, eta);
  Eigen::ColPivHouseholderQR<Matrix> qr(O);
  if (qr.rank() < model.p) {
    throw NumericalError("observability_bypass: observability matrix is rank deficient");
  }
  Vector target(model.n * eta);
  for (int block = 0; block < eta; ++block) {
    target.segment(block * model.n, model.n) = phi_base;
  }
  ObservabilityBypassResult result;
  result.e = qr.solve(target);
  result.stacked = O * result.e;
  const double base_norm = phi_base.norm();
  result.exact =
      base_norm == 0.0 || (result.stacked - target).norm() <= 1e-6 * base_norm;
  return result;
}

bool respects_protected(const AttackVector& attack,
                        const IndexSet& protected_sensors) {
  for (int i : protected_sensors) {
    if (i >= 0 && i < attack.phi.size() && attack.phi(i) != 0.0) return false;
    if (contains(attack.support, i)) return false;
  }
  return true;
}

}  // namespace gridse
