// Command-line front end: runs and validates experiment configs and lists
// the built-in diffusion models.
//
//   rstop run <config.json> [--seed S] [--out file.csv] [--workers N] [--trace]
//   rstop validate <config.json>
//   rstop list-models

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "rstop/experiment.hpp"
#include "rstop/model_registry.hpp"
#include "rstop/version.hpp"

namespace {

int run_command(const std::string& config_path, const rstop::RunOverrides& overrides) {
  const auto config = rstop::ExperimentConfig::load(config_path);
  const auto outcome = rstop::run(config, overrides);

  std::cout << outcome.csv;
  if (!outcome.csv_path.empty()) {
    std::cerr << "wrote " << outcome.rows.size() << " rows to " << outcome.csv_path << '\n';
  }
  std::cerr << (outcome.all_pass ? "all rows pass" : "FAIL: some rows do not pass") << '\n';
  return outcome.all_pass ? 0 : 1;
}

int validate_command(const std::string& config_path) {
  const auto config = rstop::ExperimentConfig::load(config_path);
  const auto report = rstop::validate(config);
  if (report.ok()) {
    std::cout << "config ok\n";
    return 0;
  }
  for (const auto& violation : report.violations) {
    std::cout << "violation: " << violation << '\n';
  }
  return 1;
}

int list_models_command() {
  for (const auto& info : rstop::model_registry()) {
    std::cout << info.name << "  -  " << info.description << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized-stopping experiments"};
  app.set_version_flag("--version", std::string(rstop::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  rstop::RunOverrides overrides;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_path;
  bool trace = false;

  auto* run_cmd = app.add_subcommand("run", "execute an experiment config");
  run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the config seed");
  auto* workers_opt = run_cmd->add_option("--workers", workers, "override the worker count");
  auto* out_opt = run_cmd->add_option("--out", out_path, "override the CSV output path");
  run_cmd->add_flag("--trace", trace, "print per-stage de-randomization diagnostics");

  auto* validate_cmd = app.add_subcommand("validate", "validate a config without running");
  validate_cmd->add_option("config", config_path, "experiment config (JSON)")->required();

  app.add_subcommand("list-models", "list built-in diffusion models");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      if (*seed_opt) overrides.seed = seed;
      if (*workers_opt) overrides.workers = workers;
      if (*out_opt) overrides.out = out_path;
      if (trace) overrides.trace = &std::cerr;
      return run_command(config_path, overrides);
    }
    if (validate_cmd->parsed()) return validate_command(config_path);
    return list_models_command();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
