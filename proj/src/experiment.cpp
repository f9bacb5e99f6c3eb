#include "colmg/experiment.hpp"

#include "colmg/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace colmg {

Command parse_command(std::string_view name) {
  if (name == "lq") return Command::lq;
  if (name == "sparse") return Command::sparse;
  if (name == "cvar") return Command::cvar;
  if (name == "spectrum") return Command::spectrum;
  if (name == "table-sweep") return Command::table_sweep;
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::lq: return "lq";
    case Command::sparse: return "sparse";
    case Command::cvar: return "cvar";
    case Command::spectrum: return "spectrum";
    case Command::table_sweep: return "table-sweep";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& v) {
  long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& v) { return static_cast<int>(to_long(v)); }

std::uint64_t to_seed(const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a seed, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item));
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& key_table() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"experiment",
       {{"command", [](ExperimentConfig& c, const std::string& v) { c.command = parse_command(v); }},
        {"name", [](ExperimentConfig& c, const std::string& v) { c.name = v; }}}},
      {"mesh",
       {{"domain", [](ExperimentConfig& c, const std::string& v) { c.disc.domain = parse_domain(v); }},
        {"level_min", [](ExperimentConfig& c, const std::string& v) { c.disc.level_min = to_int(v); }},
        {"level_max", [](ExperimentConfig& c, const std::string& v) { c.disc.level_max = to_int(v); }},
        {"control", [](ExperimentConfig& c, const std::string& v) { c.disc.control = parse_control_kind(v); }},
        {"interpolation",
         [](ExperimentConfig& c, const std::string& v) { c.disc.interpolation = parse_interpolation(v); }}}},
      {"sampling",
       {{"method", [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.method = parse_sampling_method(v); }},
        {"points", [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.points = to_int(v); }},
        {"count", [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.count = to_int(v); }},
        {"seed", [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.seed = to_seed(v); }},
        {"sigma2", [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.cov.sigma2 = to_double(v); }},
        {"L2", [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.cov.L2 = to_double(v); }},
        {"kl_terms",
         [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.kl = KLTarget::with_terms(to_int(v)); }},
        {"kl_fraction",
         [](ExperimentConfig& c, const std::string& v) { c.disc.sampling.kl = KLTarget::with_fraction(to_double(v)); }}}},
      {"solver",
       {{"method", [](ExperimentConfig& c, const std::string& v) { c.linear.method = parse_linear_method(v); }},
        {"tol", [](ExperimentConfig& c, const std::string& v) { c.linear.tol = to_double(v); }},
        {"maxit", [](ExperimentConfig& c, const std::string& v) { c.linear.maxit = to_int(v); }},
        {"smoother",
         [](ExperimentConfig& c, const std::string& v) { c.linear.mg.smoother.variant = parse_smoother_variant(v); }},
        {"theta", [](ExperimentConfig& c, const std::string& v) { c.linear.mg.smoother.theta = to_double(v); }},
        {"n1", [](ExperimentConfig& c, const std::string& v) { c.linear.mg.n1 = to_int(v); }},
        {"n2", [](ExperimentConfig& c, const std::string& v) { c.linear.mg.n2 = to_int(v); }},
        {"coarse", [](ExperimentConfig& c, const std::string& v) { c.linear.mg.coarse = parse_coarse_solver(v); }}}},
      {"problem",
       {{"nu", [](ExperimentConfig& c, const std::string& v) { c.nu = to_double(v); }},
        {"beta", [](ExperimentConfig& c, const std::string& v) { c.sparse.beta = to_double(v); }},
        {"a", [](ExperimentConfig& c, const std::string& v) { c.sparse.a = to_double(v); }},
        {"b", [](ExperimentConfig& c, const std::string& v) { c.sparse.b = to_double(v); }},
        {"lambda", [](ExperimentConfig& c, const std::string& v) { c.cvar.lambda = to_double(v); }},
        {"eps", [](ExperimentConfig& c, const std::string& v) { c.cvar.eps = to_double(v); }}}},
      {"newton",
       {{"tol", [](ExperimentConfig& c, const std::string& v) { c.newton.tol = to_double(v); }},
        {"inner_tol", [](ExperimentConfig& c, const std::string& v) { c.newton.inner_tol = to_double(v); }},
        {"sigma", [](ExperimentConfig& c, const std::string& v) { c.newton.sigma = to_double(v); }},
        {"rho", [](ExperimentConfig& c, const std::string& v) { c.newton.rho = to_double(v); }},
        {"max_outer", [](ExperimentConfig& c, const std::string& v) { c.newton.max_outer = to_int(v); }},
        {"max_inner", [](ExperimentConfig& c, const std::string& v) { c.newton.max_inner = to_int(v); }},
        {"max_backtracks", [](ExperimentConfig& c, const std::string& v) { c.newton.max_backtracks = to_int(v); }},
        {"continuation", [](ExperimentConfig& c, const std::string& v) { c.continuation = to_bool(v); }}}},
      {"spectrum",
       {{"nh", [](ExperimentConfig& c, const std::string& v) { c.spectrum.Nh = to_int(v); }},
        {"samples", [](ExperimentConfig& c, const std::string& v) { c.spectrum.N = to_int(v); }},
        {"nu", [](ExperimentConfig& c, const std::string& v) { c.spectrum.nu = to_double(v); }},
        {"seed", [](ExperimentConfig& c, const std::string& v) { c.spectrum.seed = to_seed(v); }},
        {"n1", [](ExperimentConfig& c, const std::string& v) { c.spectrum.n1 = to_int(v); }},
        {"n2", [](ExperimentConfig& c, const std::string& v) { c.spectrum.n2 = to_int(v); }},
        {"theta", [](ExperimentConfig& c, const std::string& v) { c.spectrum.theta = to_double(v); }},
        {"two_grid_iterations",
         [](ExperimentConfig& c, const std::string& v) { c.spectrum.two_grid_iterations = to_int(v); }}}},
      {"sweep",
       {{"driver", [](ExperimentConfig& c, const std::string& v) { c.sweep.driver = parse_command(v); }},
        {"parameter", [](ExperimentConfig& c, const std::string& v) { c.sweep.parameter = v; }},
        {"values", [](ExperimentConfig& c, const std::string& v) { c.sweep.values = to_list(v); }}}},
      {"output",
       {{"dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; }},
        {"matrix_market", [](ExperimentConfig& c, const std::string& v) { c.matrix_market = to_bool(v); }},
        {"out_of_sample", [](ExperimentConfig& c, const std::string& v) { c.out_of_sample = to_int(v); }},
        {"out_of_sample_seed", [](ExperimentConfig& c, const std::string& v) { c.out_of_sample_seed = to_seed(v); }},
        {"risk_level", [](ExperimentConfig& c, const std::string& v) { c.risk_level = to_double(v); }}}},
  };
  return table;
}

void sync_nu(ExperimentConfig& c) {
  c.sparse.nu = c.nu;
  c.cvar.nu = c.nu;
}

void validate_config(const ExperimentConfig& c) {
  c.disc.sampling.cov.validate();
  if (c.disc.level_min < 1 || c.disc.level_min > c.disc.level_max) {
    throw std::invalid_argument("need 1 <= level_min <= level_max");
  }
  if (c.disc.sampling.points < 1) throw std::invalid_argument("sampling.points must be positive");
  if (c.disc.sampling.count < 1) throw std::invalid_argument("sampling.count must be positive");
  if (!(c.linear.tol > 0.0) || c.linear.maxit < 1) throw std::invalid_argument("solver tolerance and maxit must be positive");
  c.linear.mg.validate();
  if (!(c.nu > 0.0)) throw std::invalid_argument("nu must be positive");
  c.newton.validate();
  const Command driver = c.command == Command::table_sweep ? c.sweep.driver : c.command;
  if (driver == Command::sparse) c.sparse.validate();
  if (driver == Command::cvar) c.cvar.validate();
  if (c.out_of_sample < 0) throw std::invalid_argument("out_of_sample must be nonnegative");
  if (!(c.risk_level >= 0.0 && c.risk_level < 1.0)) throw std::invalid_argument("risk_level must lie in [0, 1)");
  if (c.command == Command::spectrum) {
    ModelProblem1D mp;
    mp.Nh = c.spectrum.Nh;
    mp.N = c.spectrum.N;
    mp.nu = c.spectrum.nu;
    mp.eta.assign(std::max(0, mp.N), 1.0);
    mp.validate();
    if (c.spectrum.n1 < 0 || c.spectrum.n2 < 0 || c.spectrum.n1 + c.spectrum.n2 < 1) {
      throw std::invalid_argument("spectrum: need n1 + n2 >= 1");
    }
    if (!(c.spectrum.theta > 0.0 && c.spectrum.theta <= 1.0)) throw std::invalid_argument("spectrum: theta must lie in (0, 1]");
    if (c.spectrum.two_grid_iterations < 6) throw std::invalid_argument("spectrum: need at least 6 two-grid iterations");
    if (2L * mp.N * mp.Nh > 4000) throw std::invalid_argument("spectrum: dense oracle limited to dimension 4000");
  }
  if (c.command == Command::table_sweep) {
    if (c.sweep.driver == Command::spectrum || c.sweep.driver == Command::table_sweep) {
      throw std::invalid_argument("sweep.driver must be lq, sparse or cvar");
    }
    const auto allowed = sweep_parameters(c.sweep.driver);
    if (std::find(allowed.begin(), allowed.end(), c.sweep.parameter) == allowed.end()) {
      throw std::invalid_argument("sweep.parameter '" + c.sweep.parameter + "' is not supported by the " +
                                  std::string(to_string(c.sweep.driver)) + " driver");
    }
    std::set<double> seen;
    for (double v : c.sweep.values) {
      if (!seen.insert(v).second) throw std::invalid_argument("duplicate sweep value");
    }
    for (double v : c.sweep.values) apply_sweep_value(c, c.sweep.parameter, v);
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
  ExperimentConfig c;
  const auto& table = key_table();
  std::string section;
  std::string line;
  int lineno = 0;
  std::set<std::pair<std::string, std::string>> seen;
  auto fail = [&](const std::string& msg) { throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail("malformed section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!table.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' outside of a section");
    const auto& keys = table.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) fail("unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert({section, key}).second) fail("duplicate key '" + key + "' in [" + section + "]");
    try {
      it->second(c, value);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  sync_nu(c);
  try {
    validate_config(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open configuration");
  return parse_config(is, path);
}

std::vector<std::string> sweep_parameters(Command driver) {
  switch (driver) {
    case Command::lq: return {"nu", "sigma2", "L2", "levels", "points", "count", "theta"};
    case Command::sparse: return {"nu", "sigma2", "levels", "points", "count", "beta"};
    case Command::cvar: return {"lambda", "eps", "levels", "count", "sigma2", "nu"};
    default: return {};
  }
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, const std::string& parameter, double value) {
  ExperimentConfig c = cfg;
  auto as_int = [&](const char* what) {
    if (value != std::floor(value) || value < 1) throw std::invalid_argument(std::string(what) + " must be a positive integer");
    return static_cast<int>(value);
  };
  if (parameter == "nu") {
    c.nu = value;
  } else if (parameter == "sigma2") {
    c.disc.sampling.cov.sigma2 = value;
  } else if (parameter == "L2") {
    c.disc.sampling.cov.L2 = value;
  } else if (parameter == "levels") {
    c.disc.level_max = c.disc.level_min + as_int("levels") - 1;
  } else if (parameter == "points") {
    c.disc.sampling.points = as_int("points");
  } else if (parameter == "count") {
    c.disc.sampling.count = as_int("count");
  } else if (parameter == "theta") {
    c.linear.mg.smoother.theta = value;
  } else if (parameter == "beta") {
    c.sparse.beta = value;
  } else if (parameter == "lambda") {
    c.cvar.lambda = value;
  } else if (parameter == "eps") {
    c.cvar.eps = value;
  } else {
    throw std::invalid_argument("unknown sweep parameter '" + parameter + "'");
  }
  sync_nu(c);
  return c;
}

namespace {

namespace fs = std::filesystem;

struct Logger {
  bool verbose = false;
  template <class... T>
  void operator()(const T&... parts) const {
    if (!verbose) return;
    (std::cerr << ... << parts) << '\n';
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << std::setprecision(10);
  return os;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void write_nodal_csv(const fs::path& p, const MeshLevel& mesh, const std::vector<std::string>& names,
                     const std::vector<const Vector*>& cols) {
  auto os = open_out(p);
  os << "x,y";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (int k = 0; k < mesh.num_free(); ++k) {
    const auto& c = mesh.coords[mesh.free_nodes[k]];
    os << c[0] << ',' << c[1];
    for (const Vector* v : cols) os << ',' << (*v)[k];
    os << '\n';
  }
}

Vector mean_block(const BlockVector& x, const BlockLayout& L, const std::vector<double>& w, bool adjoint) {
  Vector m = Vector::Zero(L.n_state);
  for (int j = 0; j < L.samples; ++j) {
    m += w[j] * x.segment(adjoint ? L.p_offset(j) : L.y_offset(j), L.n_state);
  }
  return m;
}

Vector scatter_control(const Vector& u, const std::vector<int>& c2s, int n_state) {
  Vector out = Vector::Zero(n_state);
  for (std::size_t k = 0; k < c2s.size(); ++k) out[c2s[k]] = u[static_cast<Eigen::Index>(k)];
  return out;
}

SolveReport summary_report(const std::string& method, int iterations, bool converged, const std::vector<double>& history,
                           double wall, std::uint64_t seed) {
  SolveReport r;
  r.method = method;
  r.iterations = iterations;
  r.converged = converged;
  r.residuals = history;
  r.final_residual = history.empty() ? 0.0 : history.back();
  r.wall_time = wall;
  r.seed = seed;
  if (history.size() >= 2 && history[history.size() - 2] > 0.0) {
    r.convergence_factor = history.back() / history[history.size() - 2];
  }
  return r;
}

struct LQRow {
  int vcycle = 0;
  int gmres = 0;
  long n_max = 0;
  bool converged = true;
};

LQRow run_lq(const ExperimentConfig& c, const fs::path& dir, std::ostream& report, const std::string& label,
             bool artifacts, const Logger& log) {
  log("[lq] ", label, ": building discretization");
  const Discretization d = make_discretization(c.disc);
  log("[lq] N_h = ", d.n_state(), ", N = ", d.n_samples());
  BlockSaddleSystem sys = assemble_lq_system(d.ops, d.samples.weights, d.fine().level, c.nu);
  const BlockVector rhs = assemble_lq_rhs(sys, d.ops, {d.y_d, d.f, c.nu});
  if (artifacts && c.matrix_market) {
    write_matrix_market((dir / "system.mtx").string(), sys.materialize());
    write_matrix_market((dir / "rhs.mtx").string(), SparseMatrix(rhs.sparseView()));
  }
  const BlockLayout L = sys.layout;
  LinearSolver solver(std::move(sys), d.ph, c.linear);
  LinearSolveStats stats;
  const BlockVector x = solver.solve(rhs, stats);
  LQRow row;
  row.n_max = static_cast<long>(L.size());
  if (c.linear.method != LinearMethod::gmres) {
    SolveReport r = solver.last_vcycle();
    r.seed = c.disc.sampling.seed;
    write_report_csv_row(report, r, label);
    row.vcycle = r.iterations;
    row.converged = row.converged && r.converged;
    log("[lq] V-cycle: ", r.iterations, " iterations, factor ", r.convergence_factor);
  }
  if (c.linear.method != LinearMethod::vcycle) {
    SolveReport r = solver.last_gmres();
    r.seed = c.disc.sampling.seed;
    write_report_csv_row(report, r, label);
    row.gmres = r.iterations;
    row.converged = row.converged && r.converged;
    log("[lq] GMRES: ", r.iterations, " iterations");
  }
  if (artifacts) {
    const Vector u = scatter_control(x.segment(L.u_offset(), L.n_control), d.ops.control_to_state, L.n_state);
    const Vector ym = mean_block(x, L, d.samples.weights, false);
    write_nodal_csv(dir / "control.csv", d.fine(), {"u"}, {&u});
    write_nodal_csv(dir / "state_mean.csv", d.fine(), {"y_mean", "y_d"}, {&ym, &d.y_d});
  }
  return row;
}

struct SparseRow {
  int newton = 0;
  double avg_vcycle = 0.0;
  double avg_gmres = 0.0;
  bool converged = true;
};

SparseRow run_sparse(const ExperimentConfig& c, const fs::path& dir, std::ostream& report, const std::string& label,
                     bool artifacts, const Logger& log) {
  log("[sparse] ", label, ": building discretization");
  const Discretization d = make_discretization(c.disc);
  std::vector<double> ladder{c.nu};
  if (c.continuation) {
    ladder.clear();
    for (double nu = 1e-2; nu > c.nu * 1.0000001; nu /= 10.0) ladder.push_back(nu);
    ladder.push_back(c.nu);
  }
  const auto stages = semismooth_newton_continuation(d, c.sparse, ladder, c.newton, c.linear);
  SparseRow row;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const SparseResult& r = stages[s];
    SolveReport rep = summary_report("ssn", r.iterations, r.converged, r.merit, r.wall_time, c.disc.sampling.seed);
    write_report_csv_row(report, rep, label + ";stage_nu=" + fmt(ladder[s]));
    log("[sparse] nu = ", ladder[s], ": ", r.iterations, " Newton iterations, merit ", r.merit.back());
    row.converged = row.converged && r.converged;
  }
  const SparseResult& last = stages.back();
  row.newton = last.iterations;
  row.avg_vcycle = last.linear.avg_vcycle();
  row.avg_gmres = last.linear.avg_gmres();
  if (artifacts) {
    const Vector ym = last.y * Eigen::Map<const Vector>(d.samples.weights.data(), d.n_samples());
    write_nodal_csv(dir / "control.csv", d.fine(), {"u"}, {&last.u});
    write_nodal_csv(dir / "state_mean.csv", d.fine(), {"y_mean", "y_d"}, {&ym, &d.y_d});
    auto os = open_out(dir / "merit.csv");
    os << "iteration,merit,step\n";
    for (std::size_t k = 0; k < last.merit.size(); ++k) {
      os << k << ',' << last.merit[k] << ',' << (k == 0 ? 0.0 : last.steps[k - 1]) << '\n';
    }
  }
  return row;
}

struct CVaRRow {
  int outer = 0;
  int inner = 0;
  double avg_vcycle = 0.0;
  double avg_gmres = 0.0;
  bool converged = true;
};

CVaRRow run_cvar(const ExperimentConfig& c, const fs::path& dir, std::ostream& report, std::ostream* text,
                 const std::string& label, bool artifacts, const Logger& log) {
  log("[cvar] ", label, ": building discretization");
  const Discretization d = make_discretization(c.disc);
  std::vector<double> ladder{c.cvar.eps};
  if (c.continuation && c.cvar.eps <= 1e-3) {
    ladder.clear();
    for (double e = 1e-2; e > c.cvar.eps * 1.0000001; e /= 10.0) ladder.push_back(e);
    ladder.push_back(c.cvar.eps);
  }
  const auto stages = cvar_eps_continuation(d, c.cvar, ladder, c.newton, c.linear);
  CVaRRow row;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const CVaRResult& r = stages[s];
    SolveReport rep = summary_report("cvar-newton", r.outer, r.converged, r.F_history, r.wall_time, c.disc.sampling.seed);
    write_report_csv_row(report, rep, label + ";stage_eps=" + fmt(ladder[s]));
    log("[cvar] eps = ", ladder[s], ": ", r.outer, " outer, ", r.counters.inner, " inner, t = ", r.t);
    row.converged = row.converged && r.converged;
  }
  const CVaRResult& last = stages.back();
  row.outer = last.outer;
  row.inner = last.counters.inner;
  row.avg_vcycle = last.counters.linear.avg_vcycle();
  row.avg_gmres = last.counters.linear.avg_gmres();
  if (artifacts) {
    const BlockLayout L{d.n_samples(), d.n_state(), d.n_state()};
    const Vector u = last.control(L);
    const Vector ym = mean_block(last.x, L, d.samples.weights, false);
    write_nodal_csv(dir / "control.csv", d.fine(), {"u"}, {&u});
    write_nodal_csv(dir / "state_mean.csv", d.fine(), {"y_mean", "y_d"}, {&ym, &d.y_d});
    auto os = open_out(dir / "history.csv");
    os << "outer,abs_F\n";
    for (std::size_t k = 0; k < last.F_history.size(); ++k) os << k << ',' << last.F_history[k] << '\n';
    if (text) *text << "t = " << last.t << "\nsplitting steps = " << last.splitting_steps << '\n';
    if (c.out_of_sample > 0) {
      log("[cvar] out-of-sample evaluation on ", c.out_of_sample, " draws");
      const LQResult neutral = solve_lq(d, c.nu, LinearSolveSpec{LinearMethod::gmres, 1e-9, 200, c.linear.mg});
      const Vector u0 = neutral.x.segment(L.u_offset(), L.n_control);
      const auto q_neutral = sample_quantity_of_interest(d, u0, c.out_of_sample, c.out_of_sample_seed);
      const auto q_averse = sample_quantity_of_interest(d, u, c.out_of_sample, c.out_of_sample_seed);
      auto qs = open_out(dir / "qoi_samples.csv");
      qs << "control,q\n";
      for (double q : q_neutral) qs << "risk_neutral," << q << '\n';
      for (double q : q_averse) qs << "risk_averse," << q << '\n';
      if (text) {
        *text << "CVaR_" << c.risk_level << " risk neutral = " << empirical_cvar(q_neutral, c.risk_level) << '\n';
        *text << "CVaR_" << c.risk_level << " risk averse = " << empirical_cvar(q_averse, c.risk_level) << '\n';
      }
    }
  }
  return row;
}

void run_spectrum(const ExperimentConfig& c, const fs::path& dir, std::ostream& report, std::ostream& text,
                  const Logger& log) {
  const SpectrumSpec& s = c.spectrum;
  const ModelProblem1D mp = ModelProblem1D::with_random_eta(s.Nh, s.N, s.nu, s.seed);
  log("[spectrum] N_h = ", s.Nh, ", N = ", s.N, ", nu = ", s.nu);
  const SpectrumReport ta = two_level_spectrum_analytic(mp, s.n1, s.n2, s.theta);
  const SpectrumReport to = oracle_spectrum(model_two_level_matrix(mp, s.n1, s.n2, s.theta));
  const SpectrumReport ga = smoother_spectrum_G(mp, s.theta);
  const SpectrumReport go = oracle_spectrum(model_smoother_matrix(mp, s.theta));
  {
    auto os = open_out(dir / "spectrum_analytic.csv");
    write_spectrum_csv(os, ta);
    auto oo = open_out(dir / "spectrum_oracle.csv");
    write_spectrum_csv(oo, to);
    auto gs = open_out(dir / "smoother_spectrum.csv");
    write_spectrum_csv(gs, ga);
    write_spectrum_csv(gs, go, false);
  }
  // observed two-grid convergence on the full block system
  BlockSaddleSystem full = model_full_system(mp);
  const TransferOperator t = model_transfer(mp);
  std::vector<int> c2s((mp.Nh - 1) / 2);
  for (std::size_t k = 0; k < c2s.size(); ++k) c2s[k] = static_cast<int>(k);
  BlockSaddleSystem coarse = galerkin_coarsen(full, t, c2s);
  MultigridConfig mg;
  mg.n1 = s.n1;
  mg.n2 = s.n2;
  mg.smoother.theta = s.theta;
  const BlockLayout L = full.layout;
  Multigrid two_grid({std::move(coarse), std::move(full)}, {t}, mg);
  Vector rhs(L.size());
  for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs[i] = std::sin(1.0 + 0.37 * static_cast<double>(i));
  SolveReport rep;
  two_grid.solve_stationary(rhs, 1e-13, s.two_grid_iterations, rep);
  rep.seed = s.seed;
  write_report_csv_row(report, rep, "two-grid");
  {
    auto os = open_out(dir / "two_grid_residuals.csv");
    os << "iteration,relative_residual\n";
    for (std::size_t k = 0; k < rep.residuals.size(); ++k) os << k << ',' << rep.residuals[k] << '\n';
  }
  const double mis_t = spectrum_mismatch(ta.values, to.values);
  const double mis_g = spectrum_mismatch(ga.values, go.values);
  text << "r = " << ta.r << '\n'
       << "max |sigma(T)| analytic = " << ta.max_modulus() << '\n'
       << "max |sigma(T)| oracle = " << to.max_modulus() << '\n'
       << "T mismatch = " << mis_t << '\n'
       << "G mismatch = " << mis_g << '\n'
       << "observed two-grid factor = " << rep.convergence_factor << '\n';
  log("[spectrum] max|sigma(T)| = ", ta.max_modulus(), ", observed factor = ", rep.convergence_factor);
}

}  // namespace

void run_experiment(ExperimentConfig cfg, const RunOptions& opt) {
  if (opt.seed) {
    cfg.disc.sampling.seed = *opt.seed;
    cfg.spectrum.seed = *opt.seed;
  }
  if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
  const Logger log{opt.verbose};
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  auto report = open_out(dir / "report.csv");
  write_report_csv_header(report);
  std::ostringstream text;
  text << "experiment " << cfg.name << " (" << to_string(cfg.command) << ")\n";
  const auto t0 = std::chrono::steady_clock::now();
  bool converged = true;
  switch (cfg.command) {
    case Command::lq: {
      const LQRow r = run_lq(cfg, dir, report, "nu=" + fmt(cfg.nu), true, log);
      text << "V-cycle iterations = " << r.vcycle << "\nGMRES iterations = " << r.gmres << "\nN_max = " << r.n_max << '\n';
      converged = r.converged;
      break;
    }
    case Command::sparse: {
      const SparseRow r = run_sparse(cfg, dir, report, "nu=" + fmt(cfg.nu), true, log);
      text << "Newton iterations = " << r.newton << "\navg V-cycle = " << r.avg_vcycle << "\navg GMRES = " << r.avg_gmres
           << '\n';
      converged = r.converged;
      break;
    }
    case Command::cvar: {
      const CVaRRow r = run_cvar(cfg, dir, report, &text, "lambda=" + fmt(cfg.cvar.lambda), true, log);
      text << "outer = " << r.outer << "\ninner = " << r.inner << "\navg V-cycle = " << r.avg_vcycle
           << "\navg GMRES = " << r.avg_gmres << '\n';
      converged = r.converged;
      break;
    }
    case Command::spectrum:
      run_spectrum(cfg, dir, report, text, log);
      break;
    case Command::table_sweep: {
      auto table = open_out(dir / "table.csv");
      const std::string& p = cfg.sweep.parameter;
      switch (cfg.sweep.driver) {
        case Command::lq: table << p << ",vcycle,gmres,n_max\n"; break;
        case Command::sparse: table << p << ",newton,avg_vcycle,avg_gmres\n"; break;
        default: table << p << ",outer,inner,avg_vcycle,avg_gmres\n"; break;
      }
      for (double v : cfg.sweep.values) {
        const ExperimentConfig c = apply_sweep_value(cfg, p, v);
        const std::string label = p + "=" + fmt(v);
        table << fmt(v) << ',';
        if (cfg.sweep.driver == Command::lq) {
          const LQRow r = run_lq(c, dir, report, label, false, log);
          table << r.vcycle << ',' << r.gmres << ',' << r.n_max << '\n';
          converged = converged && r.converged;
        } else if (cfg.sweep.driver == Command::sparse) {
          const SparseRow r = run_sparse(c, dir, report, label, false, log);
          table << r.newton << ',' << std::setprecision(3) << r.avg_vcycle << ',' << r.avg_gmres << std::setprecision(10)
                << '\n';
          converged = converged && r.converged;
        } else {
          const CVaRRow r = run_cvar(c, dir, report, nullptr, label, false, log);
          table << r.outer << ',' << r.inner << ',' << std::setprecision(3) << r.avg_vcycle << ',' << r.avg_gmres
                << std::setprecision(10) << '\n';
          converged = converged && r.converged;
        }
        table.flush();
      }
      break;
    }
  }
  text << "wall time = " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  {
    auto os = open_out(dir / "report.txt");
    os << text.str();
  }
  if (!converged) throw ConvergenceError("experiment " + cfg.name + ": a solver did not reach its tolerance");
}

}  // namespace colmg
