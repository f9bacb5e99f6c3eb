#pragma once

#include "colmg/cvar.hpp"
#include "colmg/problem.hpp"
#include "colmg/sparse_control.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace colmg {

/// Thrown for malformed configuration files; the message carries the line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a solver stops without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { lq, sparse, cvar, spectrum, table_sweep };

Command parse_command(std::string_view name);
std::string_view to_string(Command c);

struct SpectrumSpec {
  int Nh = 31;
  int N = 10;
  double nu = 1e-2;
  std::uint64_t seed = 7;
  int n1 = 1;
  int n2 = 1;
  double theta = 1.0;
  int two_grid_iterations = 60;
};

struct SweepSpec {
  Command driver = Command::lq;
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  Command command = Command::lq;
  std::string name = "experiment";
  DiscretizationSpec disc;
  LinearSolveSpec linear;
  double nu = 1e-4;
  SparseControlProblem sparse;
  CVaRProblem cvar;
  NewtonConfig newton;
  bool continuation = false;
  SpectrumSpec spectrum;
  SweepSpec sweep;
  std::string output_dir = "out";
  bool matrix_market = false;
  int out_of_sample = 0;
  std::uint64_t out_of_sample_seed = 2024;
  double risk_level = 0.99;
};

/// Flat `key = value` lines grouped under `[section]` headers; `#` starts a
/// comment. Unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Sweep values that are accepted for each driver.
std::vector<std::string> sweep_parameters(Command driver);

/// Applies one sweep value to a copy of the configuration.
ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, const std::string& parameter, double value);

struct RunOptions {
  std::string output_dir;  // overrides the config when not empty
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

/// Runs the experiment and writes its artifacts. Throws ConfigError,
/// ConvergenceError or std::exception.
void run_experiment(ExperimentConfig cfg, const RunOptions& opt);

}  // namespace colmg
