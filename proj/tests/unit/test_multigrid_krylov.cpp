#include "colmg/krylov.hpp"
#include "colmg/multigrid.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <sstream>

using namespace colmg;
using namespace colmg::testing;

namespace {

// Columns op(e_q) for q < n.
DenseMatrix materialize(const std::function<Vector(const Vector&)>& op, Eigen::Index n) {
  DenseMatrix m;
  for (Eigen::Index q = 0; q < n; ++q) {
    Vector e = Vector::Zero(n);
    e[q] = 1.0;
    const Vector c = op(e);
    if (q == 0) m.resize(c.size(), n);
    m.col(q) = c;
  }
  return m;
}

}  // namespace

TEST_CASE("multigrid: coarsest level alone is a direct solve") {
  for (CoarseSolverKind kind : {CoarseSolverKind::block_elimination, CoarseSolverKind::sparse_lu}) {
    const Discretization d = small_discretization(2, 3, 3);
    const BlockSaddleSystem s = small_lq_system(d);
    MultigridConfig cfg;
    cfg.coarse = kind;
    const Multigrid mg(std::vector<BlockSaddleSystem>{BlockSaddleSystem(s)}, std::vector<TransferOperator>{}, cfg);
    const Vector f = random_vector(s.layout.size(), 21);
    const Vector x = mg.precondition(f);
    CHECK((s.apply(x) - f).norm() < 1e-10 * f.norm());
    const CoarseSolver cs(s, kind);
    CHECK((cs.solve(f) - x).cwiseAbs().maxCoeff() < 1e-9 * x.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("multigrid: two-grid error propagation equals the dense operator") {
  ModelProblem1D mp = ModelProblem1D::with_random_eta(15, 3, 1e-2, 4);
  const BlockSaddleSystem full = model_full_system(mp);
  const TransferOperator t = model_transfer(mp);
  std::vector<int> c2s((mp.Nh - 1) / 2);
  for (std::size_t k = 0; k < c2s.size(); ++k) c2s[k] = static_cast<int>(k);
  const BlockSaddleSystem coarse = galerkin_coarsen(full, t, c2s);
  MultigridConfig cfg;
  cfg.n1 = 1;
  cfg.n2 = 1;
  cfg.smoother.theta = 1.0;
  const Multigrid mg({BlockSaddleSystem(coarse), BlockSaddleSystem(full)}, {t}, cfg);
  const Eigen::Index n = full.layout.size();
  const Vector zero = Vector::Zero(n);
  const DenseMatrix T = materialize(
      [&](const Vector& e) {
        Vector x = e;
        mg.vcycle(x, zero);
        return x;
      },
      n);
  const BlockTransfer bt = make_block_transfer(t, full.layout, coarse.layout);
  const DenseMatrix Pn = materialize([&](const Vector& v) { return bt.prolong_vector(v); }, coarse.layout.size());
  const DenseMatrix R = materialize([&](const Vector& v) { return bt.restrict_vector(v); }, n);
  const DenseMatrix S = full.dense();
  const DenseMatrix Sc = coarse.dense();
  CHECK((R * S * Pn - Sc).cwiseAbs().maxCoeff() < 1e-10 * Sc.cwiseAbs().maxCoeff());
  const DenseMatrix G = dense_jacobi_map(full, 1.0);
  const DenseMatrix cgc = DenseMatrix::Identity(n, n) - Pn * Sc.partialPivLu().solve(R * S);
  const DenseMatrix expect = G * cgc * G;
  CHECK((T - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("multigrid: stationary solve from the exact solution and for a zero rhs") {
  const Discretization d = small_discretization(2, 4, 3);
  const BlockSaddleSystem s = small_lq_system(d);
  const Multigrid mg(BlockSaddleSystem(s), d.ph, MultigridConfig{});
  SolveReport rep;
  const Vector x = mg.solve_stationary(Vector::Zero(s.layout.size()), 1e-9, 50, rep);
  CHECK(rep.iterations == 0);
  CHECK(rep.converged);
  CHECK(x.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(observed_convergence_factor(rep), std::invalid_argument);

  const Vector xs = random_vector(s.layout.size(), 31);
  const Vector f = s.apply(xs);
  Vector y = xs;
  mg.vcycle(y, f);
  CHECK((y - xs).cwiseAbs().maxCoeff() < 1e-10);
  SolveReport exact;
  exact.residuals = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(observed_convergence_factor(exact), std::invalid_argument);
}

TEST_CASE("multigrid: V-cycle converges on a three-level L-shape hierarchy") {
  const Discretization d = small_discretization(2, 4, 4);
  const BlockSaddleSystem s = small_lq_system(d, 1e-4);
  const Multigrid mg(BlockSaddleSystem(s), d.ph, MultigridConfig{});
  CHECK(mg.num_levels() == 3);
  SolveReport rep;
  const Vector f = random_vector(s.layout.size(), 41);
  const Vector x = mg.solve_stationary(f, 1e-9, 100, rep);
  CHECK(rep.converged);
  CHECK(rep.iterations < 40);
  CHECK((s.apply(x) - f).norm() <= 1e-9 * f.norm() * 1.0000001);
  CHECK(rep.convergence_factor < 0.6);
}

TEST_CASE("multigrid: preconditioner is linear and clusters the spectrum") {
  const Discretization d = small_discretization(2, 3, 2);
  const BlockSaddleSystem s = small_lq_system(d, 1e-2);
  const Multigrid mg(BlockSaddleSystem(s), d.ph, MultigridConfig{});
  const Vector r = random_vector(s.layout.size(), 51);
  const Vector a = mg.precondition(r);
  const Vector b = mg.precondition(3.5 * r);
  CHECK((b - 3.5 * a).cwiseAbs().maxCoeff() < 1e-12 * b.cwiseAbs().maxCoeff());
  CHECK(mg.precondition(Vector::Zero(s.layout.size())).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::Index n = s.layout.size();
  const DenseMatrix S = s.dense();
  const DenseMatrix PcS = materialize([&](const Vector& v) { return mg.precondition(S * v); }, n);
  const Eigen::VectorXcd ev = Eigen::EigenSolver<DenseMatrix>(PcS).eigenvalues();
  CHECK((ev.array() - 1.0).abs().maxCoeff() < 1.0);
}

TEST_CASE("GMRES: identity operator converges in one step") {
  const Vector b = random_vector(10, 61);
  SolveReport rep;
  const Vector x = gmres(identity_operator(), identity_operator(), b, KrylovConfig{}, rep);
  CHECK(rep.iterations == 1);
  CHECK((x - b).norm() < 1e-14);
}

TEST_CASE("GMRES: small SPD system matches dense LU within n steps") {
  DenseMatrix A = DenseMatrix::Random(5, 5);
  A = A * A.transpose() + 5.0 * DenseMatrix::Identity(5, 5);
  const Vector b = random_vector(5, 62);
  KrylovConfig kc;
  kc.tol = 1e-13;
  kc.record_orthogonality = true;
  SolveReport rep;
  GmresInfo info;
  const Vector x = gmres(matrix_operator(A), identity_operator(), b, kc, rep, &info);
  CHECK(rep.iterations <= 5);
  CHECK(rep.converged);
  CHECK((x - A.partialPivLu().solve(b)).norm() < 1e-11);
  CHECK(info.orthogonality_drift < 1e-12);
}

TEST_CASE("GMRES: zero right-hand side and restart") {
  SolveReport rep;
  const Vector x = gmres(identity_operator(), identity_operator(), Vector::Zero(4), KrylovConfig{}, rep);
  CHECK(rep.iterations == 0);
  CHECK(x.cwiseAbs().maxCoeff() == 0.0);
  DenseMatrix A = DenseMatrix::Identity(30, 30);
  for (int i = 0; i + 1 < 30; ++i) A(i, i + 1) = 0.6;
  KrylovConfig kc;
  kc.restart = 5;
  kc.maxit = 300;
  const Vector b = random_vector(30, 63);
  const Vector y = gmres(matrix_operator(A), identity_operator(), b, kc, rep);
  CHECK(rep.converged);
  CHECK((A * y - b).norm() <= 1e-9 * b.norm() * 1.0000001);
}

TEST_CASE("GMRES: V-cycle preconditioning of the saddle system") {
  const Discretization d = small_discretization(2, 4, 4);
  const BlockSaddleSystem s = small_lq_system(d, 1e-4);
  const Multigrid mg(BlockSaddleSystem(s), d.ph, MultigridConfig{});
  const Vector f = random_vector(s.layout.size(), 64);
  SolveReport rep;
  const Vector x = gmres(system_operator(s), vcycle_preconditioner(mg), f, KrylovConfig{}, rep);
  CHECK(rep.converged);
  CHECK(rep.iterations < 25);
  CHECK((s.apply(x) - f).norm() <= 1e-9 * f.norm() * 1.0000001);
}

TEST_CASE("reports: CSV rows carry the solve summary") {
  SolveReport r;
  r.method = "gmres";
  r.iterations = 13;
  r.converged = true;
  r.final_residual = 5e-10;
  r.convergence_factor = 0.2;
  r.seed = 42;
  std::ostringstream os;
  write_report_csv_header(os);
  write_report_csv_row(os, r, "nu=1e-4");
  CHECK(os.str().rfind("label,method,iterations,converged,final_residual,convergence_factor,seed,wall_time\n", 0) == 0);
  CHECK(os.str().find("nu=1e-4,gmres,13,1,5.000000e-10,0.2,42,") != std::string::npos);
}
