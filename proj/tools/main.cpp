// Command-line front end: scenario simulation, runtime benchmarking, attack
// vector generation, and model validation.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <gridse/harness.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gridse::ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(std::stoi(item));
  }
  if (out.empty()) throw gridse::ConfigError("empty list: " + text);
  return out;
}

int run_simulate(const std::string& config_path, const std::string& seed_arg,
                 const std::string& out_arg, const std::string& format_arg) {
  gridse::ScenarioConfig cfg = gridse::load_scenario(config_path);
  if (!seed_arg.empty()) cfg.seed = std::stoull(seed_arg);
  std::string out = !out_arg.empty() ? out_arg : cfg.output_path;
  const gridse::RmseReport report = gridse::run_scenario(cfg);
  const gridse::ReportFormat format = format_arg == "json"
                                          ? gridse::ReportFormat::Json
                                          : gridse::ReportFormat::Csv;
  if (out.empty()) {
    std::cout << (format == gridse::ReportFormat::Json
                      ? gridse::report_to_json(report)
                      : gridse::report_to_csv(report));
  } else {
    gridse::emit_report(report, out, format);
    std::fprintf(stderr, "wrote %s\n", out.c_str());
  }
  return kExitOk;
}

int run_bench(const std::string& p_arg, int reps, std::uint64_t seed,
              const std::string& out) {
  const std::vector<int> p_list = parse_int_list(p_arg);
  const gridse::RuntimeTable table = gridse::bench_runtime(p_list, reps, seed);
  const std::string csv = gridse::runtime_table_to_csv(table);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream file(out);
    if (!file) throw gridse::ConfigError("cannot open output file: " + out);
    file << csv;
    std::fprintf(stderr, "wrote %s\n", out.c_str());
  }
  return kExitOk;
}

int run_attack_gen(const std::string& model_path, const std::string& spec_path,
                   const std::string& out, std::uint64_t seed) {
  const gridse::SystemModel model = gridse::load_model(model_path);
  const gridse::AttackSpec spec =
      gridse::attack_spec_from_json(read_file(spec_path));
  gridse::Rng rng = gridse::make_rng(seed, 1);
  const gridse::AttackSession session(spec, model, rng);
  const gridse::AttackVector attack = session.at_step(0, rng);
  const std::string text = gridse::attack_vector_to_json(attack);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream file(out);
    if (!file) throw gridse::ConfigError("cannot open output file: " + out);
    file << text << "\n";
    std::fprintf(stderr, "wrote %s\n", out.c_str());
  }
  return kExitOk;
}

int run_validate(const std::string& model_path) {
  gridse::SystemModel model;
  try {
    model = gridse::load_model(model_path);
  } catch (const gridse::ConfigError& e) {
    // still a validation outcome: report and fail with the config code
    std::cout << "invalid: " << e.what() << "\n";
    return kExitConfig;
  }
  const gridse::ValidationReport report = gridse::validate_model(model);
  std::cout << "n=" << model.n << " p=" << model.p
            << " rank(C)=" << report.c_rank
            << " spectral_radius(A)=" << report.spectral_radius << "\n";
  for (const std::string& w : report.warnings) std::cout << "warning: " << w << "\n";
  for (const std::string& v : report.violations) std::cout << "violation: " << v << "\n";
  std::cout << (report.ok() ? "ok" : "invalid") << "\n";
  return report.ok() ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic state estimation under false data injection"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "run a Monte-Carlo scenario");
  std::string config_path, seed_arg, out_arg, format_arg = "csv";
  simulate->add_option("--config", config_path, "scenario JSON file")->required();
  simulate->add_option("--seed", seed_arg, "override the scenario seed");
  simulate->add_option("--out", out_arg,
                       "output path (default: scenario output_path or stdout)");
  simulate->add_option("--format", format_arg, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* bench =
      app.add_subcommand("bench", "runtime comparison on synthesized plants");
  std::string p_arg = "10,25,50", bench_out;
  int reps = 5;
  std::uint64_t bench_seed = 1;
  bench->add_option("--p", p_arg, "comma-separated state dimensions");
  bench->add_option("--reps", reps, "timed repetitions per cell");
  bench->add_option("--seed", bench_seed, "synthesis seed");
  bench->add_option("--out", bench_out, "output CSV path (default stdout)");

  auto* attack_gen =
      app.add_subcommand("attack-gen", "emit an attack vector as JSON");
  std::string ag_model, ag_spec, ag_out;
  std::uint64_t ag_seed = 0;
  attack_gen->add_option("--model", ag_model, "model JSON file")->required();
  attack_gen->add_option("--spec", ag_spec, "attack spec JSON file")->required();
  attack_gen->add_option("--out", ag_out, "output path (default stdout)");
  attack_gen->add_option("--seed", ag_seed, "rng seed for random attacks");

  auto* validate = app.add_subcommand("validate", "check a model file");
  std::string val_model;
  validate->add_option("--model", val_model, "model JSON file")->required();

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) {
      return run_simulate(config_path, seed_arg, out_arg, format_arg);
    }
    if (bench->parsed()) {
      return run_bench(p_arg, reps, bench_seed, bench_out);
    }
    if (attack_gen->parsed()) {
      return run_attack_gen(ag_model, ag_spec, ag_out, ag_seed);
    }
    if (validate->parsed()) {
      return run_validate(val_model);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const gridse::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
