#include "colmg/sparse_control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace colmg {

void SparseControlProblem::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("sparse control: nu must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("sparse control: beta must be nonnegative");
  if (!(a < 0.0 && 0.0 < b)) throw std::invalid_argument("sparse control: need a < 0 < b");
}

void NewtonConfig::validate() const {
  if (!(tol > 0.0) || !(inner_tol > 0.0)) throw std::invalid_argument("newton: tolerances must be positive");
  if (!(sigma > 0.0 && sigma < 1.0) || !(rho > 0.0 && rho < 1.0)) {
    throw std::invalid_argument("newton: sigma and rho must lie in (0, 1)");
  }
  if (max_outer < 0 || max_inner < 1 || max_backtracks < 0) throw std::invalid_argument("newton: bad iteration limits");
}

Vector evaluate_F_sparse(const Vector& u, const Vector& pbar, const SparseControlProblem& prob) {
  if (u.size() != pbar.size()) throw std::invalid_argument("evaluate_F_sparse: size mismatch");
  const double nu = prob.nu;
  const double beta = prob.beta;
  Vector F(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double q = pbar[i];
    double s = std::max(0.0, q - beta) + std::min(0.0, q + beta);
    // guard against inf - inf when the box is off
    if (std::isfinite(prob.b)) s -= std::max(0.0, q - beta - nu * prob.b);
    if (std::isfinite(prob.a)) s -= std::min(0.0, q + beta - nu * prob.a);
    F[i] = u[i] - s / nu;
  }
  return F;
}

ActiveSets update_active_sets(const Vector& pbar, const SparseControlProblem& prob) {
  ActiveSets s;
  s.marker = Vector::Zero(pbar.size());
  const double nu = prob.nu;
  for (Eigen::Index i = 0; i < pbar.size(); ++i) {
    const double up = pbar[i] - prob.beta;
    const double lo = pbar[i] + prob.beta;
    if (0.0 <= up && up <= nu * prob.b) {
      s.plus.push_back(static_cast<int>(i));
      s.marker[i] = 1.0 / nu;
    } else if (nu * prob.a <= lo && lo <= 0.0) {
      s.minus.push_back(static_cast<int>(i));
      s.marker[i] = 1.0 / nu;
    }
  }
  return s;
}

Vector SparseResult::mean_adjoint(const std::vector<double>& weights) const {
  Vector m = Vector::Zero(p.rows());
  for (std::size_t j = 0; j < weights.size(); ++j) m += weights[j] * p.col(static_cast<Eigen::Index>(j));
  return m;
}

int support_size(const Vector& u, double tol) {
  return static_cast<int>((u.array().abs() > tol).count());
}

namespace {

double merit(const SparseMatrix& M, const Vector& F) { return std::sqrt(std::max(0.0, F.dot(M * F))); }

Vector weighted_mean(const DenseMatrix& p, const std::vector<double>& w) {
  Vector m = Vector::Zero(p.rows());
  for (std::size_t j = 0; j < w.size(); ++j) m += w[j] * p.col(static_cast<Eigen::Index>(j));
  return m;
}

/// Newton matrix: C = M, G = M, D_j = -zeta_j M H, E = -M.
BlockSaddleSystem newton_system(const Discretization& d, const ActiveSets& act) {
  const auto& M = d.ops.M;
  SparseMatrix MH = *M * act.marker.asDiagonal();
  MH.prune(0.0);
  auto MHp = std::make_shared<const SparseMatrix>(std::move(MH));
  BlockSaddleSystem s;
  const int N = d.n_samples();
  const int n = d.n_state();
  s.level = d.fine().level;
  s.layout = {N, n, n};
  s.weights = d.samples.weights;
  s.G = Block(M, 1.0);
  for (int j = 0; j < N; ++j) {
    s.C.emplace_back(M, 1.0);
    s.A.emplace_back(d.ops.A[j], 1.0);
    s.D.emplace_back(MHp, -d.samples.weights[j]);
    s.E.emplace_back(M, -1.0);
  }
  s.control_to_state = d.ops.control_to_state;
  s.state_to_control.assign(n, -1);
  for (int k = 0; k < n; ++k) s.state_to_control[s.control_to_state[k]] = k;
  s.validate();
  return s;
}

}  // namespace

SparseResult semismooth_newton(const Discretization& d, const SparseControlProblem& prob, const NewtonConfig& cfg,
                               const LinearSolveSpec& lin, const Vector& u0) {
  prob.validate();
  cfg.validate();
  if (d.spec.control != ControlKind::distributed) {
    throw std::invalid_argument("semismooth_newton: only distributed controls are supported");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const int N = d.n_samples();
  const int n = d.n_state();
  const SparseMatrix& M = *d.ops.M;
  SparseResult r;
  r.u = u0.size() ? u0 : Vector::Zero(n);
  if (r.u.size() != n) throw std::invalid_argument("semismooth_newton: initial control has the wrong size");
  r.y.resize(n, N);
  r.p.resize(n, N);
  {
    SampleSolver ss(d.ops);
    const Vector rhs = M * (d.f + r.u);
    for (int j = 0; j < N; ++j) {
      r.y.col(j) = ss.state(j, rhs);
      r.p.col(j) = ss.adjoint(j, M * (d.y_d - r.y.col(j)));
    }
  }
  Vector pbar = weighted_mean(r.p, d.samples.weights);
  ActiveSets act = update_active_sets(pbar, prob);
  Vector F = evaluate_F_sparse(r.u, pbar, prob);
  double phi = merit(M, F);
  r.merit.push_back(phi);
  while (phi > cfg.tol && r.iterations < cfg.max_outer) {
    LinearSolver solver(newton_system(d, act), d.ph, lin);
    const BlockLayout& L = solver.system().layout;
    BlockVector rhs = BlockVector::Zero(L.size());
    rhs.segment(L.u_offset(), n) = -(M * F);
    const BlockVector dx = solver.solve(rhs, r.linear);
    const Eigen::Map<const DenseMatrix> dy(dx.data(), n, N);
    const Vector du = dx.segment(L.u_offset(), n);
    const Eigen::Map<const DenseMatrix> dp(dx.data() + L.p_offset(0), n, N);
    const Vector dpbar = weighted_mean(dp, d.samples.weights);

    double gamma = 1.0;
    Vector Ft = evaluate_F_sparse(r.u + du, pbar + dpbar, prob);
    double phit = merit(M, Ft);
    int back = 0;
    while (phit - phi > -cfg.sigma * phi) {
      if (++back > cfg.max_backtracks) throw std::runtime_error("semismooth_newton: line search failed");
      gamma *= cfg.rho;
      Ft = evaluate_F_sparse(r.u + gamma * du, pbar + gamma * dpbar, prob);
      phit = merit(M, Ft);
    }
    r.u += gamma * du;
    r.y += gamma * dy;
    r.p += gamma * dp;
    pbar += gamma * dpbar;
    F = std::move(Ft);
    phi = phit;
    act = update_active_sets(pbar, prob);
    r.steps.push_back(gamma);
    r.merit.push_back(phi);
    ++r.iterations;
  }
  r.converged = phi <= cfg.tol;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<SparseResult> semismooth_newton_continuation(const Discretization& d, SparseControlProblem prob,
                                                         const std::vector<double>& ladder,
                                                         const NewtonConfig& cfg, const LinearSolveSpec& lin) {
  if (ladder.empty()) throw std::invalid_argument("continuation: empty nu ladder");
  std::vector<SparseResult> out;
  Vector u;
  for (double nu : ladder) {
    prob.nu = nu;
    out.push_back(semismooth_newton(d, prob, cfg, lin, u));
    u = out.back().u;
  }
  return out;
}

}  // namespace colmg
