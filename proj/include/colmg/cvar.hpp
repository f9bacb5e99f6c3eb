#pragma once

#include "colmg/problem.hpp"
#include "colmg/sparse_control.hpp"

#include <cstdint>
#include <vector>

namespace colmg {

/// C^2 smoothing of max(0, x): zero below -eps/2, identity above eps/2 and
/// s^3/eps^2 - s^4/(2 eps^3) with s = x + eps/2 in between.
double g_eps(double x, double eps);
double g_eps_prime(double x, double eps);
double g_eps_second(double x, double eps);

/// min_{u,t} t + E[g_eps(Q - t)] / (1 - lambda) + nu/2 ||u||^2, Q = 0.5 ||y - y_d||^2.
struct CVaRProblem {
  double lambda = 0.9;
  double eps = 1e-2;
  double nu = 1e-4;
  void validate() const;
};

/// Residual split as F1 (states, control, adjoints) and the scalar F2.
struct CVaRResidual {
  BlockVector F1;
  double F2 = 0.0;
  Vector q;  // 0.5 (y_j - y_d)^T M (y_j - y_d), without t
};

CVaRResidual cvar_residual(const Discretization& d, const CVaRProblem& prob, const BlockVector& x, double t);

/// F2 at fixed states as a function of t alone.
double cvar_F2(const Vector& q, const std::vector<double>& weights, const CVaRProblem& prob, double t);

struct CVaRJacobian {
  BlockSaddleSystem J11;  // C_j = (g' M + g'' M w w^T M) / (1 - lambda), w = y_j - y_d
  BlockVector J12;        // -v_j in the state rows
  BlockVector J21;        // -zeta_j v_j^T in the state columns
  double J22 = 0.0;       // E[g''] / (1 - lambda)
  bool singular = false;  // g'' vanishes on every sample
};

CVaRJacobian cvar_jacobian_blocks(const Discretization& d, const CVaRProblem& prob, const BlockVector& x, double t);

struct CVaRCounters {
  int inner = 0;  // Newton steps spent computing h(t)
  LinearSolveStats linear;
};

/// Newton on F1(x, t) = 0 at fixed t from the warm start x.
BlockVector eliminate_h(const Discretization& d, const CVaRProblem& prob, double t, BlockVector x,
                        const NewtonConfig& cfg, const LinearSolveSpec& lin, CVaRCounters& counters);

/// F'(t) = J22 - J21 J11^-1 J12 at x = h(t).
double reduced_derivative(const Discretization& d, const CVaRProblem& prob, double t, const BlockVector& x,
                          const LinearSolveSpec& lin, CVaRCounters& counters);

/// Root of the nondecreasing map t -> F2(q, t), by safeguarded Newton with bisection.
double solve_F2_for_t(const Vector& q, const std::vector<double>& weights, const CVaRProblem& prob, double t0);

struct CVaRResult {
  BlockVector x;
  double t = 0.0;
  int outer = 0;
  int splitting_steps = 0;
  std::vector<double> F_history;  // |F(t^k)|
  bool converged = false;
  CVaRCounters counters;
  double wall_time = 0.0;

  Vector control(const BlockLayout& layout) const { return x.segment(layout.u_offset(), layout.n_control); }
};

/// Newton on F(t) = F2(h(t), t) with the states eliminated, plus a splitting
/// step whenever the t-coupling of the Jacobian vanishes. cfg.tol is the
/// tolerance on |F(t)|.
CVaRResult preconditioned_newton_cvar(const Discretization& d, const CVaRProblem& prob, const NewtonConfig& cfg,
                                      const LinearSolveSpec& lin, double t0 = 0.0,
                                      const BlockVector& x0 = BlockVector());

/// Runs the eps values in order, each warm-started from the previous optimum.
std::vector<CVaRResult> cvar_eps_continuation(const Discretization& d, CVaRProblem prob,
                                              const std::vector<double>& eps_ladder, const NewtonConfig& cfg,
                                              const LinearSolveSpec& lin);

/// 0.5 ||y(u, omega) - y_d||^2 on `count` fresh Monte Carlo draws of the
/// random field of `d`.
std::vector<double> sample_quantity_of_interest(const Discretization& d, const Vector& u, int count,
                                                std::uint64_t seed);

/// Empirical CVaR at `level` of equally weighted values.
double empirical_cvar(std::vector<double> values, double level);

}  // namespace colmg
