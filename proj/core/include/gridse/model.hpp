#pragma once

#include <cstdint>
#include <string>

#include "gridse/rng.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// Linear plant: x(k+1) = A x(k) + w(k), y(k) = C x(k) + v(k), with
/// w ~ N(0, sigma_w2 I_p) and v ~ N(0, sigma_v2 I_n). Sensors listed in
/// `protected_sensors` cannot be touched by an attacker.
struct SystemModel {
  Matrix A;       // p x p state transition
  Matrix C;       // n x p measurement map, full column rank
  double sigma_w2 = 0.0;
  double sigma_v2 = 0.0;
  int p = 0;
  int n = 0;
  IndexSet protected_sensors;
};

struct SimState {
  Vector x;
  int k = 0;
};

/// One time step of sensor data. `attack_support` is ground truth kept for
/// evaluation only; estimators never see it.
struct MeasurementFrame {
  Vector y_clean;
  Vector y_observed;
  IndexSet attack_support;
  int k = 0;
};

/// Bus admittance split into real (G) and imaginary (B) parts, both b x b
/// symmetric.
struct AdmittanceModel {
  Matrix G;
  Matrix B;
  int b = 0;
};

struct ValidationReport {
  int c_rank = 0;
  double spectral_radius = 0.0;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

/// Parses and validates a model file (JSON; see README for the schema).
/// Throws ConfigError naming the offending field.
SystemModel load_model(const std::string& path);

/// Same checks on an in-memory JSON document.
SystemModel parse_model(const std::string& json_text);

std::string model_to_json(const SystemModel& model);

/// Checks every model invariant without throwing; also reports the rank of
/// C and the spectral radius of A. A spectral radius above 1 is a warning,
/// not a violation.
ValidationReport validate_model(const SystemModel& model);

/// Advances the state one step and measures it. No attack is applied:
/// y_observed == y_clean. Deterministic given the rng state.
std::pair<SimState, MeasurementFrame> simulate_step(const SystemModel& model,
                                                    const SimState& state,
                                                    Rng& rng);

/// Measures the current state without advancing it (used for frame 0).
MeasurementFrame measure_state(const SystemModel& model, const SimState& state,
                               Rng& rng);

/// Real and reactive bus power injections from voltage magnitudes and
/// phase angles (radians).
std::pair<Vector, Vector> power_injections(const AdmittanceModel& adm,
                                           const Vector& v,
                                           const Vector& theta);

/// The bundled 14-bus-scale benchmark plant (n=35, p=10, sensor 34
/// protected). Matches data/ieee14_surrogate.json exactly.
SystemModel make_ieee14_surrogate();

/// Random full-column-rank plant used by the runtime benchmark: stable A,
/// dense gaussian C, no protected sensors.
SystemModel synthesize_model(int p, int n, std::uint64_t seed);

}  // namespace gridse
