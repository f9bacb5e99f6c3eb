#include "colmg/multigrid.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace colmg {

double observed_convergence_factor(const SolveReport& report) {
  const auto& r = report.residuals;
  if (r.size() < 6) throw std::invalid_argument("convergence factor needs at least 6 residuals");
  const std::size_t n = r.size();
  if (!(r[n - 6] > 0.0)) throw std::invalid_argument("convergence factor undefined for a zero residual");
  return std::pow(r[n - 1] / r[n - 6], 1.0 / 5.0);
}

void write_report_csv_header(std::ostream& os) {
  os << "label,method,iterations,converged,final_residual,convergence_factor,seed,wall_time\n";
}

void write_report_csv_row(std::ostream& os, const SolveReport& r, std::string_view label) {
  os << label << ',' << r.method << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
     << std::setprecision(6) << std::scientific << r.final_residual << ',' << std::defaultfloat
     << std::setprecision(6) << r.convergence_factor << ',' << r.seed << ',' << std::setprecision(4)
     << r.wall_time << '\n';
}

CoarseSolverKind parse_coarse_solver(std::string_view name) {
  if (name == "block-elimination") return CoarseSolverKind::block_elimination;
  if (name == "sparse-lu") return CoarseSolverKind::sparse_lu;
  throw std::invalid_argument("unknown coarse solver '" + std::string(name) + "'");
}

CoarseSolver::CoarseSolver(const BlockSaddleSystem& sys, CoarseSolverKind kind) : sys_(&sys), kind_(kind) {
  if (kind == CoarseSolverKind::sparse_lu) {
    sparse_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    Eigen::SparseMatrix<double> m = sys.materialize();
    sparse_->compute(m);
    if (sparse_->info() != Eigen::Success) throw std::runtime_error("coarse solver: sparse LU failed");
    return;
  }
  const int N = sys.samples();
  const int nu = sys.layout.n_control;
  DenseMatrix schur = sys.G.dense();
  lu_a_.reserve(N);
  for (int j = 0; j < N; ++j) {
    lu_a_.emplace_back(sys.A[j].dense());
    C_.push_back(sys.C[j].dense());
    D_.push_back(sys.D[j].dense());
    E_.push_back(sys.E[j].dense());
    // G + D_j A_j^-T C_j A_j^-1 E_j
    const DenseMatrix X = lu_a_[j].solve(E_[j]);
    const DenseMatrix Z = lu_a_[j].transpose().solve(C_[j] * X);
    schur.noalias() += D_[j] * Z;
  }
  if (nu > 0) {
    schur_.compute(schur);
    const double rc = schur_.rcond();
    if (!(rc > 1e-15)) throw std::runtime_error("coarse solver: singular control Schur complement");
  }
  for (int j = 0; j < N; ++j) {
    if (!(lu_a_[j].rcond() > 1e-15)) {
      throw std::runtime_error("coarse solver: singular A_" + std::to_string(j));
    }
  }
}

BlockVector CoarseSolver::solve(const BlockVector& f) const {
  const BlockSaddleSystem& s = *sys_;
  if (kind_ == CoarseSolverKind::sparse_lu) {
    BlockVector x = sparse_->solve(f);
    return x;
  }
  const int N = s.samples();
  const int nh = s.layout.n_state;
  const int nu = s.layout.n_control;
  BlockVector x(s.layout.size());
  // u-row right-hand side: b - sum_j D_j A_j^-T (f_y - C_j A_j^-1 f_p)
  Vector rhs_u = f.segment(s.layout.u_offset(), nu);
  std::vector<Vector> w(N);
  for (int j = 0; j < N; ++j) {
    w[j] = lu_a_[j].solve(f.segment(s.layout.p_offset(j), nh));
    const Vector q = lu_a_[j].transpose().solve(f.segment(s.layout.y_offset(j), nh) - C_[j] * w[j]);
    rhs_u.noalias() -= D_[j] * q;
  }
  const Vector u = nu > 0 ? Vector(schur_.solve(rhs_u)) : Vector();
  x.segment(s.layout.u_offset(), nu) = u;
  for (int j = 0; j < N; ++j) {
    const Vector y = lu_a_[j].solve(f.segment(s.layout.p_offset(j), nh) - E_[j] * u);
    x.segment(s.layout.y_offset(j), nh) = y;
    x.segment(s.layout.p_offset(j), nh) =
        lu_a_[j].transpose().solve(f.segment(s.layout.y_offset(j), nh) - C_[j] * y);
  }
  return x;
}

void MultigridConfig::validate() const {
  smoother.validate();
  if (n1 < 0 || n2 < 0 || n1 + n2 < 1) throw std::invalid_argument("multigrid: need n1, n2 >= 0 and n1 + n2 >= 1");
}

Multigrid::Multigrid(BlockSaddleSystem finest, const ProblemHierarchy& ph, MultigridConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int lmin = ph.mesh.level_min;
  if (finest.level < lmin || finest.level > ph.mesh.level_max) {
    throw std::invalid_argument("multigrid: system level outside the mesh hierarchy");
  }
  std::vector<BlockSaddleSystem> down;
  down.push_back(std::move(finest));
  for (int l = down.back().level; l > lmin; --l) {
    down.push_back(galerkin_coarsen(down.back(), ph.transfer_to(l), ph.controls(l - 1)));
  }
  for (auto it = down.rbegin(); it != down.rend(); ++it) systems_.push_back(std::move(*it));
  for (std::size_t k = 0; k + 1 < systems_.size(); ++k) {
    transfers_.push_back(make_block_transfer(ph.transfer_to(systems_[k + 1].level), systems_[k + 1].layout,
                                             systems_[k].layout));
  }
  setup();
}

Multigrid::Multigrid(std::vector<BlockSaddleSystem> systems, std::vector<TransferOperator> transfers,
                     MultigridConfig cfg)
    : cfg_(cfg), systems_(std::move(systems)) {
  cfg_.validate();
  if (systems_.empty() || transfers.size() + 1 != systems_.size()) {
    throw std::invalid_argument("multigrid: need one transfer between each pair of levels");
  }
  for (std::size_t k = 0; k < transfers.size(); ++k) {
    transfers_.push_back(make_block_transfer(transfers[k], systems_[k + 1].layout, systems_[k].layout));
  }
  setup();
}

void Multigrid::setup() {
  for (const auto& s : systems_) s.validate();
  smoothers_.reserve(systems_.size());
  for (const auto& s : systems_) smoothers_.emplace_back(s, cfg_.smoother);
  coarse_ = std::make_unique<CoarseSolver>(systems_.front(), cfg_.coarse);
}

void Multigrid::vcycle(BlockVector& x, const BlockVector& f, int k) const {
  if (k < 0) k = num_levels() - 1;
  if (k == 0) {
    x = coarse_->solve(f);
    return;
  }
  const CollectiveSmoother& sm = smoothers_[k];
  for (int s = 0; s < cfg_.n1; ++s) sm.sweep(x, f);
  const BlockVector r = systems_[k].residual(f, x);
  const BlockTransfer& t = transfers_[k - 1];
  const BlockVector rc = t.restrict_vector(r);
  BlockVector ec = BlockVector::Zero(rc.size());
  vcycle(ec, rc, k - 1);
  x += t.prolong_vector(ec);
  for (int s = 0; s < cfg_.n2; ++s) sm.sweep(x, f);
}

BlockVector Multigrid::precondition(const BlockVector& r) const {
  BlockVector x = BlockVector::Zero(r.size());
  vcycle(x, r);
  return x;
}

BlockVector Multigrid::solve_stationary(const BlockVector& f, double tol, int maxit, SolveReport& report) const {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_stationary: tol must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  report = SolveReport{};
  report.method = "vcycle";
  BlockVector x = BlockVector::Zero(f.size());
  const double fn = f.norm();
  if (fn == 0.0) {
    report.converged = true;
    report.residuals = {0.0};
    return x;
  }
  report.residuals.push_back(1.0);
  double rel = 1.0;
  while (report.iterations < maxit) {
    vcycle(x, f);
    ++report.iterations;
    rel = finest().residual(f, x).norm() / fn;
    report.residuals.push_back(rel);
    if (rel <= tol) break;
    if (!std::isfinite(rel)) break;
  }
  report.final_residual = rel;
  report.converged = rel <= tol;
  if (report.residuals.size() >= 6 && report.residuals[report.residuals.size() - 6] > 0.0) {
    report.convergence_factor = observed_convergence_factor(report);
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return x;
}

}  // namespace colmg
