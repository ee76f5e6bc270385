// Command-line front end: run, sweep, oracle, validate-config.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "copt/config.hpp"
#include "copt/instance_io.hpp"
#include "copt/oracle.hpp"
#include "copt/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> passes;
};

copt::RunConfig load_with_overrides(const CommonFlags& flags, bool seed_overrides) {
  copt::RunConfig cfg = copt::load_config(flags.config);
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  if (seed_overrides && flags.seed) cfg.seed = *flags.seed;
  if (flags.passes) {
    if (*flags.passes < 1) throw copt::ConfigError("--passes", "must be at least 1");
    cfg.optimizer.passes = *flags.passes;
  }
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  const copt::RunConfig cfg = load_with_overrides(flags, true);
  const copt::RunArtifacts art = copt::run_pipeline(cfg);
  copt::write_run_artifacts(art, cfg.output_dir);
  std::cout << "wrote " << cfg.output_dir << "\n";
  if (art.evaluation.risk) std::cout << "risk " << *art.evaluation.risk << "\n";
  std::cout << "violation_bound " << art.certificate.violation_bound << "\n"
            << "risk_gap_bound " << art.certificate.risk_gap_bound << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  // --seed selects a single sweep seed so interrupted sweeps can resume.
  const copt::RunConfig cfg = load_with_overrides(flags, false);
  if (!cfg.sweep) throw copt::ConfigError("sweep", "is required for the sweep command");
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / "sweep.csv";
  const bool append = flags.seed.has_value() && std::filesystem::exists(path) &&
                      std::filesystem::file_size(path) > 0;
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t rows = copt::run_sweep(cfg, out, !append, flags.seed);
  std::cout << "wrote " << rows << " rows to " << path.string() << "\n";
  return kExitOk;
}

int cmd_oracle(const std::string& instance_path, const std::string& out_dir) {
  const copt::FiniteInstance inst = copt::read_instance(instance_path);
  const copt::OracleSolution sol = copt::solve_lp_exact(inst);
  nlohmann::json doc{{"solution", copt::to_json(sol)}};
  if (sol.status == copt::OracleStatus::kOptimal && inst.num_constraints() <= 2) {
    doc["validation"] = copt::to_json(copt::validate_np_structure(inst, sol, {10.0, 100.0, 1000.0}));
  }
  const std::string dir = out_dir.empty() ? "." : out_dir;
  std::filesystem::create_directories(dir);
  std::ofstream(std::filesystem::path(dir) / "oracle.json") << doc.dump(2) << "\n";
  if (sol.status != copt::OracleStatus::kOptimal) {
    std::cerr << "instance is infeasible\n";
    return kExitInfeasible;
  }
  std::cout << "lp_value " << sol.lp_value << "\n";
  return kExitOk;
}

int cmd_validate(const CommonFlags& flags) {
  const copt::RunConfig cfg = copt::load_config(flags.config);
  std::cout << copt::config_to_json(cfg).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained classification by entropic dual post-processing"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", flags.out, "Output directory (overrides the config)");
    sub->add_option("--seed", flags.seed, "Top-level seed (sweep: only this seed)");
    sub->add_option("--passes", flags.passes, "Passes over the unlabeled pool (experimental)");
  };
  CLI::App* run = app.add_subcommand("run", "Fit, optimize, certify and evaluate");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "Run a budget x seed grid into sweep.csv");
  add_common(sweep);
  CLI::App* validate = app.add_subcommand("validate-config", "Check a configuration");
  validate->add_option("--config", flags.config, "Run configuration (JSON)")->required();

  std::string instance_path;
  std::string oracle_out;
  CLI::App* oracle = app.add_subcommand("oracle", "Solve a finite instance exactly");
  oracle->add_option("instance", instance_path, "Instance JSON")->required();
  oracle->add_option("--out", oracle_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(flags);
    if (*sweep) return cmd_sweep(flags);
    if (*oracle) return cmd_oracle(instance_path, oracle_out);
    if (*validate) return cmd_validate(flags);
  } catch (const copt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const copt::ScheduleError& e) {
    std::cerr << "config error: optimizer.T: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
