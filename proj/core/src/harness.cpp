#include "gridse/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "gridse/consistency.hpp"

namespace gridse {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "least_squares") return EstimatorKind::LeastSquares;
  if (s == "kalman") return EstimatorKind::Kalman;
  if (s == "pcna") return EstimatorKind::Pcna;
  if (s == "cckf") return EstimatorKind::Cckf;
  throw ConfigError("unknown estimator kind: " + s);
}

std::string estimator_kind_to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::LeastSquares: return "least_squares";
    case EstimatorKind::Kalman: return "kalman";
    case EstimatorKind::Pcna: return "pcna";
    case EstimatorKind::Cckf: return "cckf";
  }
  return "unknown";
}

Vector vector_from_json(const json& arr, const std::string& field) {
  if (!arr.is_array()) {
    throw ConfigError("field '" + field + "' must be an array");
  }
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ConfigError("field '" + field + "' contains a non-number");
    }
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

IndexSet index_set_from_json(const json& arr, const std::string& field) {
  if (!arr.is_array()) {
    throw ConfigError("field '" + field + "' must be an array of indices");
  }
  IndexSet set;
  for (const json& e : arr) {
    if (!e.is_number_integer()) {
      throw ConfigError("field '" + field + "' contains a non-integer");
    }
    set.push_back(e.get<int>());
  }
  std::sort(set.begin(), set.end());
  return set;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

AttackSpec attack_spec_from_json_obj(const json& j) {
  if (!j.is_object() || !j.contains("type")) {
    throw ConfigError("attack spec must be an object with a 'type' field");
  }
  const std::string type = j["type"].get<std::string>();
  if (type == "none") return NoAttackSpec{};
  if (type == "random") {
    RandomAttackSpec spec;
    spec.m = j.at("m").get<int>();
    if (j.contains("magnitude")) spec.magnitude = j["magnitude"].get<double>();
    return spec;
  }
  if (type == "specific_sensor") {
    SpecificSensorAttackSpec spec;
    spec.sensors = index_set_from_json(j.at("sensors"), "sensors");
    spec.d = vector_from_json(j.at("d"), "d");
    return spec;
  }
  if (type == "targeted") {
    TargetedAttackSpec spec;
    spec.targets = index_set_from_json(j.at("targets"), "targets");
    spec.shifts = vector_from_json(j.at("shifts"), "shifts");
    return spec;
  }
  if (type == "observability_bypass") {
    ObservabilityBypassSpec spec;
    spec.eta = j.at("eta").get<int>();
    spec.phi_base = vector_from_json(j.at("phi_base"), "phi_base");
    return spec;
  }
  throw ConfigError("unknown attack type: " + type);
}

json attack_spec_to_json_obj(const AttackSpec& spec) {
  json j;
  std::visit(
      [&j](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoAttackSpec>) {
          j["type"] = "none";
        } else if constexpr (std::is_same_v<T, RandomAttackSpec>) {
          j["type"] = "random";
          j["m"] = s.m;
          j["magnitude"] = s.magnitude;
        } else if constexpr (std::is_same_v<T, SpecificSensorAttackSpec>) {
          j["type"] = "specific_sensor";
          j["sensors"] = s.sensors;
          j["d"] = vector_to_json(s.d);
        } else if constexpr (std::is_same_v<T, TargetedAttackSpec>) {
          j["type"] = "targeted";
          j["targets"] = s.targets;
          j["shifts"] = vector_to_json(s.shifts);
        } else if constexpr (std::is_same_v<T, ObservabilityBypassSpec>) {
          j["type"] = "observability_bypass";
          j["eta"] = s.eta;
          j["phi_base"] = vector_to_json(s.phi_base);
        }
      },
      spec);
  return j;
}

EstimatorConfig estimator_from_json(const json& j) {
  EstimatorConfig cfg;
  cfg.kind = estimator_kind_from_string(j.at("estimator").get<std::string>());
  if (j.contains("name")) cfg.name = j["name"].get<std::string>();
  if (j.contains("selector")) {
    const std::string sel = j["selector"].get<std::string>();
    if (sel == "pcna") {
      cfg.selector = SelectorKind::Pcna;
    } else if (sel == "rank_expanding") {
      cfg.selector = SelectorKind::RankExpanding;
    } else {
      throw ConfigError("unknown selector: " + sel);
    }
  }
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("p_h")) cfg.p_h = j["p_h"].get<double>();
  if (j.contains("n_best")) cfg.n_best = j["n_best"].get<int>();
  if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
  if (j.contains("h_cap")) cfg.h_cap = j["h_cap"].get<std::int64_t>();
  cfg.validate();
  return cfg;
}

json estimator_to_json(const EstimatorConfig& cfg) {
  json j;
  j["estimator"] = estimator_kind_to_string(cfg.kind);
  if (!cfg.name.empty()) j["name"] = cfg.name;
  j["selector"] =
      cfg.selector == SelectorKind::Pcna ? "pcna" : "rank_expanding";
  j["alpha"] = cfg.alpha;
  j["p_h"] = cfg.p_h;
  j["n_best"] = cfg.n_best;
  j["rho"] = cfg.rho;
  j["h_cap"] = cfg.h_cap;
  return j;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (model_path.empty()) throw ConfigError("scenario: model_path is required");
  if (steps < 1) throw ConfigError("scenario: steps must be >= 1");
  if (runs < 1) throw ConfigError("scenario: runs must be >= 1");
  if (attack_start < 0 || attack_start >= steps) {
    throw ConfigError("scenario: attack_start must lie in [0, steps)");
  }
  if (estimators.empty()) {
    throw ConfigError("scenario: at least one estimator is required");
  }
  for (const EstimatorConfig& e : estimators) e.validate();
}

ScenarioConfig scenario_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario file is not valid JSON: ") + e.what());
  }
  ScenarioConfig cfg;
  cfg.model_path = j.at("model_path").get<std::string>();
  cfg.steps = j.at("steps").get<int>();
  cfg.runs = j.at("runs").get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("attack")) cfg.attack = attack_spec_from_json_obj(j["attack"]);
  if (j.contains("attack_start")) cfg.attack_start = j["attack_start"].get<int>();
  if (j.contains("output_path")) cfg.output_path = j["output_path"].get<std::string>();
  if (!j.contains("estimators") || !j["estimators"].is_array()) {
    throw ConfigError("scenario: 'estimators' must be an array");
  }
  for (const json& e : j["estimators"]) {
    cfg.estimators.push_back(estimator_from_json(e));
  }
  cfg.validate();
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["model_path"] = cfg.model_path;
  j["steps"] = cfg.steps;
  j["runs"] = cfg.runs;
  j["seed"] = cfg.seed;
  j["attack"] = attack_spec_to_json_obj(cfg.attack);
  j["attack_start"] = cfg.attack_start;
  j["output_path"] = cfg.output_path;
  json ests = json::array();
  for (const EstimatorConfig& e : cfg.estimators) ests.push_back(estimator_to_json(e));
  j["estimators"] = ests;
  return j.dump(2);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  ScenarioConfig cfg = scenario_from_json(buf.str());
  const std::filesystem::path model_path(cfg.model_path);
  if (model_path.is_relative()) {
    cfg.model_path =
        (std::filesystem::path(path).parent_path() / model_path).string();
  }
  return cfg;
}

AttackSpec attack_spec_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("attack spec is not valid JSON: ") + e.what());
  }
  return attack_spec_from_json_obj(j);
}

std::string attack_vector_to_json(const AttackVector& attack) {
  json j;
  j["phi"] = vector_to_json(attack.phi);
  j["support"] = attack.support;
  return j.dump(2);
}

AttackSession::AttackSession(const AttackSpec& spec, const SystemModel& model,
                             Rng& rng)
    : model_(&model) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoAttackSpec>) {
          constant_.phi = Vector::Zero(model.n);
        } else if constexpr (std::is_same_v<T, RandomAttackSpec>) {
          per_step_random_ = true;
          magnitude_ = s.magnitude;
          // Fix the support for the whole run; values are redrawn per step.
          AttackVector first = random_attack(s, model, rng);
          support_ = first.support;
          constant_.phi = Vector::Zero(model.n);
        } else if constexpr (std::is_same_v<T, SpecificSensorAttackSpec>) {
          constant_ = specific_sensor_attack(model.C, s.sensors, s.d);
          support_ = constant_.support;
        } else if constexpr (std::is_same_v<T, TargetedAttackSpec>) {
          constant_ = targeted_attack(model.C, s.targets, s.shifts);
          support_ = constant_.support;
        } else if constexpr (std::is_same_v<T, ObservabilityBypassSpec>) {
          const auto bypass = observability_bypass(model, s.eta, s.phi_base);
          if (!bypass.exact) {
            std::fprintf(stderr,
                         "warning: observability bypass is inexact for this "
                         "plant; the injected vector will not be fully "
                         "stealthy\n");
          }
          constant_.phi = s.phi_base;
          for (int i = 0; i < model.n; ++i) {
            if (constant_.phi(i) != 0.0) constant_.support.push_back(i);
          }
          support_ = constant_.support;
        }
      },
      spec);
  AttackVector probe{constant_.phi, support_};
  if (!respects_protected(probe, model.protected_sensors)) {
    throw ConfigError("attack touches a protected sensor");
  }
}

AttackVector AttackSession::at_step(int /*k*/, Rng& rng) const {
  if (!per_step_random_) {
    return {constant_.phi, support_};
  }
  AttackVector attack;
  attack.support = support_;
  attack.phi = Vector::Zero(model_->n);
  for (int i : support_) attack.phi(i) = magnitude_ * draw_normal(rng);
  return attack;
}

std::uint64_t frames_digest(const std::vector<MeasurementFrame>& frames) {
  std::uint64_t h = kFnvOffset;
  for (const MeasurementFrame& f : frames) {
    fnv_mix(h, &f.k, sizeof(f.k));
    fnv_mix(h, f.y_clean.data(), sizeof(double) * f.y_clean.size());
    fnv_mix(h, f.y_observed.data(), sizeof(double) * f.y_observed.size());
    for (int i : f.attack_support) fnv_mix(h, &i, sizeof(i));
  }
  return h;
}

std::vector<double> rmse_series(const std::vector<Vector>& estimates,
                                const std::vector<Vector>& truths) {
  if (estimates.size() != truths.size()) {
    throw std::invalid_argument("rmse_series: length mismatch");
  }
  std::vector<double> out(estimates.size());
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    if (estimates[t].size() != truths[t].size()) {
      throw std::invalid_argument("rmse_series: dimension mismatch");
    }
    const double p = static_cast<double>(truths[t].size());
    out[t] = std::sqrt((estimates[t] - truths[t]).squaredNorm() / p);
  }
  return out;
}

namespace {

struct RunData {
  std::vector<Vector> truths;
  std::vector<MeasurementFrame> frames;
};

RunData simulate_run(const SystemModel& model, const ScenarioConfig& cfg,
                     std::uint64_t run_seed) {
  Rng sim_rng = make_rng(run_seed, 0);
  Rng attack_rng = make_rng(run_seed, 1);
  const AttackSession session(cfg.attack, model, attack_rng);

  RunData data;
  data.truths.reserve(cfg.steps);
  data.frames.reserve(cfg.steps);

  SimState state;
  state.x = Vector(model.p);
  for (int i = 0; i < model.p; ++i) state.x(i) = draw_normal(sim_rng);
  state.k = 0;

  for (int k = 0; k < cfg.steps; ++k) {
    MeasurementFrame frame;
    if (k == 0) {
      frame = measure_state(model, state, sim_rng);
    } else {
      auto [next, f] = simulate_step(model, state, sim_rng);
      state = std::move(next);
      frame = std::move(f);
    }
    if (k >= cfg.attack_start) {
      const AttackVector attack = session.at_step(k, attack_rng);
      frame.y_observed = frame.y_clean + attack.phi;
      frame.attack_support = attack.support;
    }
    data.truths.push_back(state.x);
    data.frames.push_back(std::move(frame));
  }
  return data;
}

std::vector<Vector> run_estimator(const EstimatorConfig& cfg,
                                  const SystemModel& model,
                                  const std::vector<MeasurementFrame>& frames,
                                  Rng& rng) {
  std::vector<Vector> estimates;
  estimates.reserve(frames.size());
  switch (cfg.kind) {
    case EstimatorKind::LeastSquares: {
      for (const MeasurementFrame& f : frames) {
        estimates.push_back(least_squares_estimate(model.C, f.y_observed));
      }
      break;
    }
    case EstimatorKind::Kalman: {
      FilterState state = bootstrap_filter(model, frames.front());
      estimates.push_back(state.x_hat);
      for (std::size_t k = 1; k < frames.size(); ++k) {
        state = kalman_step(state, frames[k], model, cfg.rho,
                            cfg.rho > 0.0 ? &rng : nullptr);
        estimates.push_back(state.x_hat);
      }
      break;
    }
    case EstimatorKind::Pcna: {
      FilterState state = bootstrap_filter(model, frames.front());
      estimates.push_back(state.x_hat);
      for (std::size_t k = 1; k < frames.size(); ++k) {
        StepResult step = pcna_step(state, frames[k], model, cfg,
                                    cfg.rho > 0.0 ? &rng : nullptr);
        state = std::move(step.state);
        estimates.push_back(state.x_hat);
      }
      break;
    }
    case EstimatorKind::Cckf: {
      FilterState state = bootstrap_filter(model, frames.front());
      estimates.push_back(state.x_hat);
      for (std::size_t k = 1; k < frames.size(); ++k) {
        StepResult step = cckf_step(state, frames[k], model, cfg, rng);
        state = std::move(step.state);
        estimates.push_back(state.x_hat);
      }
      break;
    }
  }
  return estimates;
}

std::string fnv_hex_digest(const std::string& text) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, text.data(), text.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

RmseReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const SystemModel model = load_model(cfg.model_path);

  const std::size_t n_est = cfg.estimators.size();
  std::vector<std::vector<double>> sq_sums(
      n_est, std::vector<double>(cfg.steps, 0.0));

  for (int run = 0; run < cfg.runs; ++run) {
    const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(run);
    const RunData data = simulate_run(model, cfg, run_seed);
    const std::uint64_t digest = frames_digest(data.frames);

    for (std::size_t e = 0; e < n_est; ++e) {
      Rng est_rng = make_rng(run_seed, 2 + e);
      const std::vector<Vector> estimates =
          run_estimator(cfg.estimators[e], model, data.frames, est_rng);
      if (frames_digest(data.frames) != digest) {
        throw std::logic_error("estimator mutated the shared frames");
      }
      for (int t = 0; t < cfg.steps; ++t) {
        sq_sums[e][t] +=
            (estimates[t] - data.truths[t]).squaredNorm() / model.p;
      }
    }
  }

  RmseReport report;
  report.seed = cfg.seed;
  report.steps = cfg.steps;
  report.runs = cfg.runs;
  report.config_digest = fnv_hex_digest(scenario_to_json(cfg));
  for (std::size_t e = 0; e < n_est; ++e) {
    RmseReport::Series series;
    series.estimator = cfg.estimators[e].label();
    series.rmse.resize(cfg.steps);
    for (int t = 0; t < cfg.steps; ++t) {
      series.rmse[t] = std::sqrt(sq_sums[e][t] / cfg.runs);
    }
    report.series.push_back(std::move(series));
  }
  return report;
}

RmseReport monte_carlo(const ScenarioConfig& cfg, int runs) {
  if (runs < 1) throw ConfigError("monte_carlo: runs must be >= 1");
  ScenarioConfig copy = cfg;
  copy.runs = runs;
  return run_scenario(copy);
}

std::string report_to_csv(const RmseReport& report) {
  std::ostringstream out;
  out << "step,estimator,rmse\n";
  for (int t = 0; t < report.steps; ++t) {
    for (const RmseReport::Series& s : report.series) {
      out << t << ',' << s.estimator << ',' << format_double(s.rmse[t]) << '\n';
    }
  }
  return out.str();
}

std::string report_to_json(const RmseReport& report) {
  json j;
  j["metadata"]["seed"] = report.seed;
  j["metadata"]["config_digest"] = report.config_digest;
  j["metadata"]["steps"] = report.steps;
  j["metadata"]["runs"] = report.runs;
  json series = json::array();
  for (const RmseReport::Series& s : report.series) {
    json entry;
    entry["estimator"] = s.estimator;
    entry["rmse"] = s.rmse;
    series.push_back(std::move(entry));
  }
  j["series"] = series;
  return j.dump(2);
}

RmseReport report_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("report is not valid JSON: ") + e.what());
  }
  RmseReport report;
  report.seed = j.at("metadata").at("seed").get<std::uint64_t>();
  report.config_digest = j.at("metadata").at("config_digest").get<std::string>();
  report.steps = j.at("metadata").at("steps").get<int>();
  report.runs = j.at("metadata").at("runs").get<int>();
  for (const json& entry : j.at("series")) {
    RmseReport::Series s;
    s.estimator = entry.at("estimator").get<std::string>();
    s.rmse = entry.at("rmse").get<std::vector<double>>();
    report.series.push_back(std::move(s));
  }
  return report;
}

void emit_report(const RmseReport& report, const std::string& path,
                 ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << (format == ReportFormat::Csv ? report_to_csv(report)
                                      : report_to_json(report));
  if (!out) throw ConfigError("failed writing output file: " + path);
}

std::string runtime_table_to_csv(const RuntimeTable& table) {
  std::ostringstream out;
  out << "p,estimator,mean_seconds,sd_seconds\n";
  for (const RuntimeTable::Row& row : table.rows) {
    out << row.p << ',' << row.estimator << ',' << format_double(row.mean_seconds)
        << ',' << format_double(row.sd_seconds) << '\n';
  }
  return out.str();
}

namespace {

double elapsed_seconds(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

RuntimeTable bench_runtime(const std::vector<int>& p_list, int reps,
                           std::uint64_t seed) {
  if (reps < 1) throw ConfigError("bench_runtime: reps must be >= 1");
  constexpr int kSteps = 50;
  RuntimeTable table;

  for (int p : p_list) {
    if (p < 2) throw ConfigError("bench_runtime: each p must be >= 2");
    const int n = 3 * p;
    const SystemModel model = synthesize_model(p, n, seed + p);

    ScenarioConfig cfg;
    cfg.model_path = "(synthesized)";
    cfg.steps = kSteps;
    cfg.runs = 1;
    cfg.seed = seed;
    cfg.attack = RandomAttackSpec{n / 2 - 1, 10.0};
    cfg.attack_start = 0;

    const RunData data = simulate_run(model, cfg, seed ^ (0x9e37ull * p));

    struct Cell {
      std::string name;
      std::function<void()> body;
    };
    EstimatorConfig pcna_cfg;
    pcna_cfg.kind = EstimatorKind::Pcna;
    pcna_cfg.rho = 0.0;
    EstimatorConfig cckf_cfg;
    cckf_cfg.kind = EstimatorKind::Cckf;
    cckf_cfg.selector = SelectorKind::RankExpanding;
    cckf_cfg.rho = 0.05;

    const ConsistencyVariant def1 = ConsistencyVariant::static_euclidean();
    IndexSet all(model.n);
    std::iota(all.begin(), all.end(), 0);

    const std::vector<Cell> cells = {
        {"mmse",
         [&] {
           for (const MeasurementFrame& f : data.frames) {
             const Vector x = least_squares_estimate(model.C, f.y_observed);
             check_consistency(def1, model.C, model.A, all, f.y_observed,
                               0.005, model.sigma_v2);
             (void)x;
           }
         }},
        {"pcna",
         [&] {
           Rng rng = make_rng(seed, 100 + p);
           run_estimator(pcna_cfg, model, data.frames, rng);
         }},
        {"cckf",
         [&] {
           Rng rng = make_rng(seed, 200 + p);
           run_estimator(cckf_cfg, model, data.frames, rng);
         }},
    };

    for (const Cell& cell : cells) {
      try {
        std::vector<double> times(reps);
        for (int r = 0; r < reps; ++r) times[r] = elapsed_seconds(cell.body);
        double mean = 0.0;
        for (double t : times) mean += t;
        mean /= reps;
        double var = 0.0;
        for (double t : times) var += (t - mean) * (t - mean);
        const double sd = reps > 1 ? std::sqrt(var / (reps - 1)) : 0.0;
        table.rows.push_back({p, cell.name, mean, sd});
      } catch (const std::exception& e) {
        std::fprintf(stderr, "bench_runtime: p=%d %s failed: %s\n", p,
                     cell.name.c_str(), e.what());
      }
    }
  }
  return table;
}

}  // namespace gridse
