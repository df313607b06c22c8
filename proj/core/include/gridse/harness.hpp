#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridse/attacks.hpp"
#include "gridse/estimators.hpp"
#include "gridse/model.hpp"
#include "gridse/types.hpp"

namespace gridse {

struct ScenarioConfig {
  std::string model_path;
  int steps = 1;
  int runs = 1;
  std::uint64_t seed = 0;
  AttackSpec attack = NoAttackSpec{};
  int attack_start = 0;
  std::vector<EstimatorConfig> estimators;
  std::string output_path;

  void validate() const;
};

struct RmseReport {
  struct Series {
    std::string estimator;
    std::vector<double> rmse;  // one value per step
  };
  std::vector<Series> series;
  std::uint64_t seed = 0;
  std::string config_digest;
  int steps = 0;
  int runs = 0;
};

struct RuntimeTable {
  struct Row {
    int p = 0;
    std::string estimator;
    double mean_seconds = 0.0;
    double sd_seconds = 0.0;
  };
  std::vector<Row> rows;
};

enum class ReportFormat { Csv, Json };

/// Parses a scenario file; model_path is resolved relative to the scenario
/// file's directory.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig scenario_from_json(const std::string& json_text);
std::string scenario_to_json(const ScenarioConfig& cfg);

/// Runs the full Monte-Carlo protocol: per run, one simulated trajectory
/// with the attack applied from attack_start onward, every configured
/// estimator consuming the identical frames; per-step RMSE aggregated over
/// runs. Deterministic given cfg.seed (run r uses seed + r).
RmseReport run_scenario(const ScenarioConfig& cfg);

/// run_scenario with the repetition count overridden.
RmseReport monte_carlo(const ScenarioConfig& cfg, int runs);

/// Per-step sqrt(||x_hat - x||^2 / p) for one run.
std::vector<double> rmse_series(const std::vector<Vector>& estimates,
                                const std::vector<Vector>& truths);

/// Wall-clock comparison of MMSE, PCNA, and CCKF on synthesized models with
/// n = 3p under a random attack; `reps` timed repetitions per cell.
RuntimeTable bench_runtime(const std::vector<int>& p_list, int reps,
                           std::uint64_t seed);

void emit_report(const RmseReport& report, const std::string& path,
                 ReportFormat format);
std::string report_to_csv(const RmseReport& report);
std::string report_to_json(const RmseReport& report);
RmseReport report_from_json(const std::string& json_text);

std::string runtime_table_to_csv(const RuntimeTable& table);

/// FNV-1a digest over a frame sequence; used to assert that estimators share
/// byte-identical inputs.
std::uint64_t frames_digest(const std::vector<MeasurementFrame>& frames);

/// Attack vector JSON used by the attack-gen CLI subcommand.
AttackSpec attack_spec_from_json(const std::string& json_text);
std::string attack_vector_to_json(const AttackVector& attack);

/// Builds the per-step attack vector for a scenario run. Constant-vector
/// attacks are computed once; the random attack redraws its values each step
/// over a support fixed at construction.
class AttackSession {
 public:
  AttackSession(const AttackSpec& spec, const SystemModel& model, Rng& rng);

  /// phi for time step k (already zero before attack_start handling, which
  /// the harness applies).
  AttackVector at_step(int k, Rng& rng) const;
  const IndexSet& support() const { return support_; }

 private:
  const SystemModel* model_;
  AttackVector constant_;
  IndexSet support_;
  bool per_step_random_ = false;
  double magnitude_ = 0.0;
};

}  // namespace gridse
