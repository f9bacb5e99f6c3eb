#pragma once

#include "colmg/problem.hpp"

#include <limits>
#include <vector>

namespace colmg {

/// min 0.5 E||y - y_d||^2 + nu/2 ||u||^2 + beta ||u||_1 subject to a <= u <= b.
/// Infinite bounds switch the box off.
struct SparseControlProblem {
  double nu = 1e-4;
  double beta = 1e-2;
  double a = -50.0;
  double b = 50.0;
  void validate() const;
};

/// Nodal residual u - (max(0, pbar - beta) + min(0, pbar + beta)
///   - max(0, pbar - beta - nu b) - min(0, pbar + beta - nu a)) / nu.
Vector evaluate_F_sparse(const Vector& u, const Vector& pbar, const SparseControlProblem& prob);

struct ActiveSets {
  std::vector<int> plus;
  std::vector<int> minus;
  Vector marker;  // 1/nu on plus and minus, 0 elsewhere
  int size() const { return static_cast<int>(plus.size() + minus.size()); }
};

ActiveSets update_active_sets(const Vector& pbar, const SparseControlProblem& prob);

struct NewtonConfig {
  double tol = 1e-9;
  double inner_tol = 1e-8;
  double sigma = 1e-4;
  double rho = 0.5;
  int max_outer = 100;
  int max_inner = 50;
  int max_backtracks = 30;
  void validate() const;
};

struct SparseResult {
  Vector u;
  DenseMatrix y;  // n_state x N
  DenseMatrix p;
  std::vector<double> merit;  // phi(u^k), k = 0, 1, ...
  std::vector<double> steps;  // accepted gamma per iteration
  int iterations = 0;
  bool converged = false;
  LinearSolveStats linear;
  double wall_time = 0.0;

  Vector mean_adjoint(const std::vector<double>& weights) const;
};

/// Globalized semismooth Newton from u0 (zero when empty). The Newton
/// systems are solved with the collective multigrid.
SparseResult semismooth_newton(const Discretization& d, const SparseControlProblem& prob,
                               const NewtonConfig& cfg, const LinearSolveSpec& lin, const Vector& u0 = Vector());

/// Runs the problem for each nu in `ladder` (last entry is the target),
/// starting each stage from the previous optimum. Returns every stage.
std::vector<SparseResult> semismooth_newton_continuation(const Discretization& d, SparseControlProblem prob,
                                                         const std::vector<double>& ladder,
                                                         const NewtonConfig& cfg, const LinearSolveSpec& lin);

/// Number of entries with |u_i| > tol.
int support_size(const Vector& u, double tol = 1e-8);

}  // namespace colmg
