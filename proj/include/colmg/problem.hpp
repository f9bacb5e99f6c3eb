#pragma once

#include "colmg/krylov.hpp"
#include "colmg/multigrid.hpp"
#include "colmg/saddle.hpp"
#include "colmg/stochastic.hpp"

#include <Eigen/SparseCholesky>
#include <cstdint>
#include <memory>
#include <string_view>

namespace colmg {

enum class SamplingMethod { gauss_hermite, monte_carlo, deterministic };

SamplingMethod parse_sampling_method(std::string_view name);
std::string_view to_string(SamplingMethod m);

struct SamplingSpec {
  SamplingMethod method = SamplingMethod::gauss_hermite;
  int points = 5;  // per dimension, collocation
  int count = 100;  // Monte Carlo
  std::uint64_t seed = 42;
  CovarianceSpec cov;
  KLTarget kl = KLTarget::with_terms(3);
};

struct DiscretizationSpec {
  Domain domain = Domain::l_shape;
  int level_min = 3;
  int level_max = 5;
  ControlKind control = ControlKind::distributed;
  Interpolation interpolation = Interpolation::bilinear;
  SamplingSpec sampling;
};

/// Everything on the finest level that the drivers share: mesh hierarchy,
/// random field, samples, finite element matrices and the data y_d, f.
struct Discretization {
  DiscretizationSpec spec;
  ProblemHierarchy ph;
  KLExpansion kl;
  SampleSet samples;
  LevelOperators ops;
  Vector y_d;
  Vector f;

  const MeshLevel& fine() const { return ph.mesh.finest(); }
  int n_state() const { return fine().num_free(); }
  int n_samples() const { return samples.size(); }
};

Discretization make_discretization(const DiscretizationSpec& spec);

enum class LinearMethod { vcycle, gmres, both };

LinearMethod parse_linear_method(std::string_view name);
std::string_view to_string(LinearMethod m);

/// `both` runs the stationary V-cycle for its iteration count and keeps the
/// GMRES solution.
struct LinearSolveSpec {
  LinearMethod method = LinearMethod::gmres;
  double tol = 1e-9;
  int maxit = 200;
  MultigridConfig mg;
};

struct LinearSolveStats {
  int systems = 0;
  long vcycle_iterations = 0;
  int vcycle_systems = 0;
  long gmres_iterations = 0;
  int gmres_systems = 0;
  int unconverged = 0;

  double avg_vcycle() const { return vcycle_systems ? double(vcycle_iterations) / vcycle_systems : 0.0; }
  double avg_gmres() const { return gmres_systems ? double(gmres_iterations) / gmres_systems : 0.0; }
  void merge(const LinearSolveStats& o);
};

/// Multigrid hierarchy for one operator plus the chosen outer iteration.
class LinearSolver {
 public:
  LinearSolver(BlockSaddleSystem sys, const ProblemHierarchy& ph, const LinearSolveSpec& spec);

  BlockVector solve(const BlockVector& rhs, LinearSolveStats& stats) const;
  const BlockSaddleSystem& system() const { return mg_.finest(); }
  const Multigrid& multigrid() const { return mg_; }
  const SolveReport& last_vcycle() const { return last_vcycle_; }
  const SolveReport& last_gmres() const { return last_gmres_; }

 private:
  Multigrid mg_;
  LinearSolveSpec spec_;
  mutable SolveReport last_vcycle_;
  mutable SolveReport last_gmres_;
};

/// Per-sample state solves A_j y_j = b and adjoint solves A_j^T p_j = b.
class SampleSolver {
 public:
  explicit SampleSolver(const LevelOperators& ops);
  Vector state(int j, const Vector& rhs) const;
  Vector adjoint(int j, const Vector& rhs) const;
  int size() const { return static_cast<int>(chol_.size()); }

 private:
  std::vector<std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>> chol_;
};

struct LQResult {
  BlockVector x;
  SolveReport vcycle;
  SolveReport gmres;
};

/// Solves the linear-quadratic optimality system for regularization nu.
LQResult solve_lq(const Discretization& d, double nu, const LinearSolveSpec& spec);

/// 0.5 (y - y_d)^T M (y - y_d)
double tracking_cost(const SparseMatrix& M, const Vector& y, const Vector& y_d);

}  // namespace colmg
