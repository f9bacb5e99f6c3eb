#include "colmg/problem.hpp"

#include <stdexcept>

namespace colmg {

SamplingMethod parse_sampling_method(std::string_view name) {
  if (name == "gauss-hermite") return SamplingMethod::gauss_hermite;
  if (name == "monte-carlo") return SamplingMethod::monte_carlo;
  if (name == "deterministic") return SamplingMethod::deterministic;
  throw std::invalid_argument("unknown sampling method '" + std::string(name) + "'");
}

std::string_view to_string(SamplingMethod m) {
  switch (m) {
    case SamplingMethod::gauss_hermite: return "gauss-hermite";
    case SamplingMethod::monte_carlo: return "monte-carlo";
    case SamplingMethod::deterministic: return "deterministic";
  }
  return "?";
}

LinearMethod parse_linear_method(std::string_view name) {
  if (name == "vcycle") return LinearMethod::vcycle;
  if (name == "gmres") return LinearMethod::gmres;
  if (name == "both") return LinearMethod::both;
  throw std::invalid_argument("unknown linear solver '" + std::string(name) + "'");
}

std::string_view to_string(LinearMethod m) {
  switch (m) {
    case LinearMethod::vcycle: return "vcycle";
    case LinearMethod::gmres: return "gmres";
    case LinearMethod::both: return "both";
  }
  return "?";
}

Discretization make_discretization(const DiscretizationSpec& spec) {
  Discretization d;
  d.spec = spec;
  d.ph = make_problem_hierarchy(spec.domain, spec.level_min, spec.level_max, spec.control, spec.interpolation);
  const MeshLevel& fine = d.ph.mesh.finest();
  const SamplingSpec& s = spec.sampling;
  if (s.method == SamplingMethod::deterministic) {
    d.samples = deterministic_sample(fine);
  } else {
    s.cov.validate();
    d.kl = compute_kl(fine, s.cov, s.kl);
    if (s.method == SamplingMethod::gauss_hermite) {
      d.samples = sample_gauss_hermite_tensor(d.kl, fine, s.points);
    } else {
      if (s.count < 1) throw std::invalid_argument("Monte Carlo sampling needs a positive sample count");
      d.samples = sample_monte_carlo(d.kl, fine, s.count, s.seed);
    }
  }
  d.ops = assemble_level_operators(fine, d.samples, d.ph.support);
  d.y_d = interpolate_free(fine, default_target);
  d.f = Vector::Zero(fine.num_free());
  return d;
}

void LinearSolveStats::merge(const LinearSolveStats& o) {
  systems += o.systems;
  vcycle_iterations += o.vcycle_iterations;
  vcycle_systems += o.vcycle_systems;
  gmres_iterations += o.gmres_iterations;
  gmres_systems += o.gmres_systems;
  unconverged += o.unconverged;
}

LinearSolver::LinearSolver(BlockSaddleSystem sys, const ProblemHierarchy& ph, const LinearSolveSpec& spec)
    : mg_(std::move(sys), ph, spec.mg), spec_(spec) {}

BlockVector LinearSolver::solve(const BlockVector& rhs, LinearSolveStats& stats) const {
  ++stats.systems;
  BlockVector x;
  bool ok = true;
  if (spec_.method != LinearMethod::gmres) {
    x = mg_.solve_stationary(rhs, spec_.tol, spec_.maxit, last_vcycle_);
    stats.vcycle_iterations += last_vcycle_.iterations;
    ++stats.vcycle_systems;
    if (spec_.method == LinearMethod::vcycle) ok = last_vcycle_.converged;
  }
  if (spec_.method != LinearMethod::vcycle) {
    KrylovConfig kc;
    kc.tol = spec_.tol;
    kc.maxit = spec_.maxit;
    x = gmres(system_operator(mg_.finest()), vcycle_preconditioner(mg_), rhs, kc, last_gmres_);
    stats.gmres_iterations += last_gmres_.iterations;
    ++stats.gmres_systems;
    ok = last_gmres_.converged;
  }
  if (!ok) ++stats.unconverged;
  return x;
}

SampleSolver::SampleSolver(const LevelOperators& ops) {
  for (const auto& A : ops.A) {
    auto c = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(Eigen::SparseMatrix<double>(*A));
    if (c->info() != Eigen::Success) throw std::runtime_error("SampleSolver: factorization failed");
    chol_.push_back(std::move(c));
  }
}

Vector SampleSolver::state(int j, const Vector& rhs) const { return chol_.at(j)->solve(rhs); }

// stiffness matrices are symmetric
Vector SampleSolver::adjoint(int j, const Vector& rhs) const { return chol_.at(j)->solve(rhs); }

LQResult solve_lq(const Discretization& d, double nu, const LinearSolveSpec& spec) {
  BlockSaddleSystem sys = assemble_lq_system(d.ops, d.samples.weights, d.fine().level, nu);
  LQProblemData data{d.y_d, d.f, nu};
  const BlockVector rhs = assemble_lq_rhs(sys, d.ops, data);
  LinearSolver solver(std::move(sys), d.ph, spec);
  LinearSolveStats stats;
  LQResult r;
  r.x = solver.solve(rhs, stats);
  r.vcycle = solver.last_vcycle();
  r.gmres = solver.last_gmres();
  return r;
}

double tracking_cost(const SparseMatrix& M, const Vector& y, const Vector& y_d) {
  const Vector e = y - y_d;
  return 0.5 * e.dot(M * e);
}

}  // namespace colmg
