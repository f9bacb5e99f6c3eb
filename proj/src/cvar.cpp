#include "colmg/cvar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace colmg {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("g_eps: eps must be positive");
}

}  // namespace

double g_eps(double x, double eps) {
  check_eps(eps);
  if (x <= -0.5 * eps) return 0.0;
  if (x >= 0.5 * eps) return x;
  const double s = x + 0.5 * eps;
  return s * s * s / (eps * eps) - s * s * s * s / (2.0 * eps * eps * eps);
}

double g_eps_prime(double x, double eps) {
  check_eps(eps);
  if (x <= -0.5 * eps) return 0.0;
  if (x >= 0.5 * eps) return 1.0;
  const double s = x + 0.5 * eps;
  return 3.0 * s * s / (eps * eps) - 2.0 * s * s * s / (eps * eps * eps);
}

double g_eps_second(double x, double eps) {
  check_eps(eps);
  if (x <= -0.5 * eps || x >= 0.5 * eps) return 0.0;
  const double s = x + 0.5 * eps;
  return 6.0 * s / (eps * eps) - 6.0 * s * s / (eps * eps * eps);
}

void CVaRProblem::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("cvar: lambda must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("cvar: eps must be positive");
  if (!(nu > 0.0)) throw std::invalid_argument("cvar: nu must be positive");
}

namespace {

BlockLayout cvar_layout(const Discretization& d) {
  if (d.spec.control != ControlKind::distributed) {
    throw std::invalid_argument("cvar: only distributed controls are supported");
  }
  return {d.n_samples(), d.n_state(), d.n_state()};
}

void check_size(const BlockLayout& L, const BlockVector& x) {
  if (x.size() != L.size()) throw std::invalid_argument("cvar: iterate has the wrong size");
}

Vector quantities(const Discretization& d, const BlockLayout& L, const BlockVector& x) {
  const SparseMatrix& M = *d.ops.M;
  Vector q(L.samples);
  for (int j = 0; j < L.samples; ++j) {
    q[j] = tracking_cost(M, x.segment(L.y_offset(j), L.n_state), d.y_d);
  }
  return q;
}

}  // namespace

double cvar_F2(const Vector& q, const std::vector<double>& weights, const CVaRProblem& prob, double t) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < q.size(); ++j) s += weights[j] * g_eps_prime(q[j] - t, prob.eps);
  return 1.0 - s / (1.0 - prob.lambda);
}

CVaRResidual cvar_residual(const Discretization& d, const CVaRProblem& prob, const BlockVector& x, double t) {
  prob.validate();
  const BlockLayout L = cvar_layout(d);
  check_size(L, x);
  const SparseMatrix& M = *d.ops.M;
  const int n = L.n_state;
  const auto& w = d.samples.weights;
  CVaRResidual r;
  r.q = quantities(d, L, x);
  r.F1 = BlockVector::Zero(L.size());
  const Vector u = x.segment(L.u_offset(), n);
  Vector pbar = Vector::Zero(n);
  const Vector Muf = M * (u + d.f);
  for (int j = 0; j < L.samples; ++j) {
    const auto y = x.segment(L.y_offset(j), n);
    const auto p = x.segment(L.p_offset(j), n);
    const double gp = g_eps_prime(r.q[j] - t, prob.eps) / (1.0 - prob.lambda);
    const SparseMatrix& A = *d.ops.A[j];
    r.F1.segment(L.y_offset(j), n) = gp * (M * (y - d.y_d)) + A.transpose() * p;
    r.F1.segment(L.p_offset(j), n) = A * y - Muf;
    pbar += w[j] * p;
  }
  r.F1.segment(L.u_offset(), n) = prob.nu * (M * u) - M * pbar;
  r.F2 = cvar_F2(r.q, w, prob, t);
  return r;
}

CVaRJacobian cvar_jacobian_blocks(const Discretization& d, const CVaRProblem& prob, const BlockVector& x, double t) {
  prob.validate();
  const BlockLayout L = cvar_layout(d);
  check_size(L, x);
  const auto& M = d.ops.M;
  const int n = L.n_state;
  const auto& w = d.samples.weights;
  const double s = 1.0 / (1.0 - prob.lambda);
  const Vector q = quantities(d, L, x);
  CVaRJacobian J;
  BlockSaddleSystem& S = J.J11;
  S.level = d.fine().level;
  S.layout = L;
  S.weights = w;
  S.G = Block(M, prob.nu);
  J.J12 = BlockVector::Zero(L.size());
  J.J21 = BlockVector::Zero(L.size());
  J.singular = true;
  for (int j = 0; j < L.samples; ++j) {
    const double g1 = g_eps_prime(q[j] - t, prob.eps);
    const double g2 = g_eps_second(q[j] - t, prob.eps);
    Block C(M, s * g1);
    if (g2 != 0.0) {
      J.singular = false;
      const Vector Mw = *M * (x.segment(L.y_offset(j), n) - d.y_d);
      const Vector v = s * g2 * Mw;
      C.set_rank_one(v, Mw);
      J.J12.segment(L.y_offset(j), n) = -v;
      J.J21.segment(L.y_offset(j), n) = -w[j] * v;
      J.J22 += w[j] * s * g2;
    }
    S.C.push_back(std::move(C));
    S.A.emplace_back(d.ops.A[j], 1.0);
    S.D.emplace_back(M, -w[j]);
    S.E.emplace_back(M, -1.0);
  }
  S.control_to_state = d.ops.control_to_state;
  S.state_to_control.assign(n, -1);
  for (int k = 0; k < n; ++k) S.state_to_control[S.control_to_state[k]] = k;
  S.validate();
  return J;
}

BlockVector eliminate_h(const Discretization& d, const CVaRProblem& prob, double t, BlockVector x,
                        const NewtonConfig& cfg, const LinearSolveSpec& lin, CVaRCounters& counters) {
  const BlockLayout L = cvar_layout(d);
  if (x.size() == 0) x = BlockVector::Zero(L.size());
  check_size(L, x);
  CVaRResidual r = cvar_residual(d, prob, x, t);
  const double r0 = r.F1.norm();
  double rn = r0;
  int k = 0;
  // the relative test is meaningless before the first step
  while (k == 0 ? rn > cfg.inner_tol : std::max(rn / r0, rn) > cfg.inner_tol) {
    if (k == cfg.max_inner) throw std::runtime_error("eliminate_h: inner Newton did not converge");
    CVaRJacobian J = cvar_jacobian_blocks(d, prob, x, t);
    LinearSolver solver(std::move(J.J11), d.ph, lin);
    const BlockVector dx = solver.solve(r.F1, counters.linear);
    ++k;
    ++counters.inner;
    double gamma = 1.0;
    CVaRResidual rt = cvar_residual(d, prob, x - dx, t);
    int back = 0;
    bool stalled = false;
    while (rt.F1.norm() > (1.0 - cfg.sigma * gamma) * rn) {
      if (++back > cfg.max_backtracks) {
        // a warm start can push the relative target below round-off; the
        // absolute test already holds then
        if (rn <= cfg.inner_tol) {
          stalled = true;
          break;
        }
        throw std::runtime_error("eliminate_h: line search failed");
      }
      gamma *= cfg.rho;
      rt = cvar_residual(d, prob, x - gamma * dx, t);
    }
    if (stalled) break;
    x -= gamma * dx;
    r = std::move(rt);
    rn = r.F1.norm();
    if (!std::isfinite(rn)) throw std::runtime_error("eliminate_h: inner Newton diverged");
  }
  return x;
}

double reduced_derivative(const Discretization& d, const CVaRProblem& prob, double t, const BlockVector& x,
                          const LinearSolveSpec& lin, CVaRCounters& counters) {
  CVaRJacobian J = cvar_jacobian_blocks(d, prob, x, t);
  if (J.singular) return 0.0;
  const BlockVector J12 = J.J12;
  const BlockVector J21 = J.J21;
  LinearSolver solver(std::move(J.J11), d.ph, lin);
  const BlockVector z = solver.solve(J12, counters.linear);
  return J.J22 - J21.dot(z);
}

double solve_F2_for_t(const Vector& q, const std::vector<double>& weights, const CVaRProblem& prob, double t0) {
  prob.validate();
  if (q.size() == 0) throw std::invalid_argument("solve_F2_for_t: no samples");
  // F2 = 1 - 1/(1-lambda) <= 0 once every g' is one, F2 = 1 once every g' is zero
  double lo = q.minCoeff() - prob.eps;
  double hi = q.maxCoeff() + prob.eps;
  auto F = [&](double t) { return cvar_F2(q, weights, prob, t); };
  auto dF = [&](double t) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < q.size(); ++j) s += weights[j] * g_eps_second(q[j] - t, prob.eps);
    return s / (1.0 - prob.lambda);
  };
  if (F(lo) > 0.0 || F(hi) < 0.0) throw std::runtime_error("solve_F2_for_t: no sign change");
  double t = std::clamp(t0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double f = F(t);
    if (f == 0.0) return t;
    if (f < 0.0) lo = t; else hi = t;
    if (std::abs(f) <= 1e-14 || hi - lo <= 1e-15 * std::max(1.0, std::abs(t))) return t;
    const double df = dF(t);
    double tn = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    t = tn;
  }
  return t;
}

CVaRResult preconditioned_newton_cvar(const Discretization& d, const CVaRProblem& prob, const NewtonConfig& cfg,
                                      const LinearSolveSpec& lin, double t0, const BlockVector& x0) {
  prob.validate();
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto& w = d.samples.weights;
  CVaRResult r;
  r.t = t0;
  r.x = eliminate_h(d, prob, r.t, x0, cfg, lin, r.counters);
  CVaRResidual res = cvar_residual(d, prob, r.x, r.t);
  double F = res.F2;
  r.F_history.push_back(std::abs(F));
  while (std::abs(F) > cfg.tol && r.outer < cfg.max_outer) {
    const CVaRJacobian J = cvar_jacobian_blocks(d, prob, r.x, r.t);
    double Fp = 0.0;
    if (!J.singular) Fp = reduced_derivative(d, prob, r.t, r.x, lin, r.counters);
    if (J.singular || !(Fp > 0.0) || !std::isfinite(Fp)) {
      // splitting: x already solves F1 at t, move t to the root of F2(x, .)
      r.t = solve_F2_for_t(res.q, w, prob, r.t);
      r.x = eliminate_h(d, prob, r.t, r.x, cfg, lin, r.counters);
      res = cvar_residual(d, prob, r.x, r.t);
      F = res.F2;
      ++r.splitting_steps;
    } else {
      const double dir = -F / Fp;
      double gamma = 1.0;
      BlockVector xt = eliminate_h(d, prob, r.t + dir, r.x, cfg, lin, r.counters);
      CVaRResidual rt = cvar_residual(d, prob, xt, r.t + dir);
      int back = 0;
      while (std::abs(rt.F2) - std::abs(F) > -cfg.sigma * std::abs(F)) {
        if (++back > cfg.max_backtracks) throw std::runtime_error("cvar: line search failed");
        gamma *= cfg.rho;
        xt = eliminate_h(d, prob, r.t + gamma * dir, r.x, cfg, lin, r.counters);
        rt = cvar_residual(d, prob, xt, r.t + gamma * dir);
      }
      r.t += gamma * dir;
      r.x = std::move(xt);
      res = std::move(rt);
      F = res.F2;
    }
    ++r.outer;
    r.F_history.push_back(std::abs(F));
  }
  r.converged = std::abs(F) <= cfg.tol;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CVaRResult> cvar_eps_continuation(const Discretization& d, CVaRProblem prob,
                                              const std::vector<double>& eps_ladder, const NewtonConfig& cfg,
                                              const LinearSolveSpec& lin) {
  if (eps_ladder.empty()) throw std::invalid_argument("cvar: empty eps ladder");
  std::vector<CVaRResult> out;
  double t = 0.0;
  BlockVector x;
  for (double eps : eps_ladder) {
    prob.eps = eps;
    out.push_back(preconditioned_newton_cvar(d, prob, cfg, lin, t, x));
    t = out.back().t;
    x = out.back().x;
  }
  return out;
}

std::vector<double> sample_quantity_of_interest(const Discretization& d, const Vector& u, int count,
                                                std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_quantity_of_interest: count must be positive");
  if (d.kl.terms() == 0) throw std::invalid_argument("sample_quantity_of_interest: no random field");
  const MeshLevel& mesh = d.fine();
  const SparseMatrix& M = *d.ops.M;
  const Vector rhs = *d.ops.B * u + M * d.f;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector xi(d.kl.terms());
  std::vector<double> out;
  out.reserve(count);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol;
  for (int s = 0; s < count; ++s) {
    for (Eigen::Index m = 0; m < xi.size(); ++m) xi[m] = normal(rng);
    const Eigen::SparseMatrix<double> A(assemble_stiffness(mesh, kl_coefficient(d.kl, mesh, xi)));
    if (s == 0) chol.analyzePattern(A);
    chol.factorize(A);
    if (chol.info() != Eigen::Success) throw std::runtime_error("sample_quantity_of_interest: factorization failed");
    out.push_back(tracking_cost(M, chol.solve(rhs), d.y_d));
  }
  return out;
}

double empirical_cvar(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("empirical_cvar: no values");
  if (!(level >= 0.0 && level < 1.0)) throw std::invalid_argument("empirical_cvar: level must lie in [0, 1)");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const auto k = static_cast<std::size_t>(std::max(0.0, std::ceil(level * n) - 1.0));
  const double t = values[k];
  double excess = 0.0;
  for (double v : values) excess += std::max(0.0, v - t);
  return t + excess / (n * (1.0 - level));
}

}  // namespace colmg
