#pragma once

#include <variant>

#include "gridse/model.hpp"
#include "gridse/rng.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// Additive sensor corruption phi with its support set. phi is zero outside
/// the support.
struct AttackVector {
  Vector phi;
  IndexSet support;
};

/// Scenario-level attack parameterizations.
struct RandomAttackSpec {
  int m = 0;           // number of attacked sensors
  double magnitude = 10.0;
};

struct SpecificSensorAttackSpec {
  IndexSet sensors;    // accessible meters I_m
  Vector d;            // arbitrary nonzero vector, |d| == |sensors|
};

struct TargetedAttackSpec {
  IndexSet targets;    // state indices, fewer than p of them
  Vector shifts;       // per-target estimate shift
};

struct ObservabilityBypassSpec {
  int eta = 1;         // window length
  Vector phi_base;     // per-step injected vector
};

struct NoAttackSpec {};

using AttackSpec = std::variant<NoAttackSpec, RandomAttackSpec,
                                SpecificSensorAttackSpec, TargetedAttackSpec,
                                ObservabilityBypassSpec>;

/// Picks m sensors uniformly among the non-protected ones and fills them
/// with magnitude * N(0,1) noise.
AttackVector random_attack(const RandomAttackSpec& spec,
                           const SystemModel& model, Rng& rng);

/// phi = C e. Shifts the least-squares estimate by exactly e while leaving
/// the static residual untouched.
AttackVector bypass_attack(const Matrix& C, const Vector& e);

/// Column-space attack restricted to the accessible meters: projects d onto
/// the null space of the accessible columns of C (C^T C)^- C^T - I. Throws
/// when those columns have full rank (only the zero attack exists).
AttackVector specific_sensor_attack(const Matrix& C, const IndexSet& sensors,
                                    const Vector& d);

/// Shifts chosen coordinates of the least-squares estimate by given amounts,
/// residual unchanged.
AttackVector targeted_attack(const Matrix& C, const IndexSet& targets,
                             const Vector& shifts);

struct ObservabilityBypassResult {
  Vector e;        // induced state shift
  Vector stacked;  // O e, length n * eta
  bool exact;      // replicated phi_base lies in the column space of O
};

/// Window-based detector bypass: solves O e ~= 1_eta (x) phi_base for the
/// stacked observability matrix O = [C; CA; ...; CA^{eta-1}]. Flagged
/// inexact when the replicated target is outside the column space of O.
ObservabilityBypassResult observability_bypass(const SystemModel& model,
                                               int eta, const Vector& phi_base);

/// Stacked observability matrix for a window of length eta.
Matrix observability_matrix(const SystemModel& model, int eta);

/// True when phi vanishes on every protected sensor.
bool respects_protected(const AttackVector& attack, const IndexSet& protected_sensors);

}  // namespace gridse
