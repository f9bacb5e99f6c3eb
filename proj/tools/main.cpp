// Command-line runner: `colmg run <config>`.
// Exit codes: 0 success, 1 configuration error, 2 solver did not converge, 3 other failure.

#include "colmg/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Collective multigrid for optimal control under uncertainty"};
  app.require_subcommand(1);

  std::string config;
  colmg::RunOptions opt;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by a configuration file");
  run->add_option("config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--output,-o", opt.output_dir, "Output directory (overrides [output] dir)");
  auto* seed_opt = run->add_option("--seed", seed, "Seed for sampling and random coefficients");
  run->add_flag("--verbose,-v", opt.verbose, "Log progress to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (seed_opt->count() > 0) opt.seed = seed;

  try {
    colmg::run_experiment(colmg::load_config(config), opt);
  } catch (const colmg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const colmg::ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
