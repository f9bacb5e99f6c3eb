#include "colmg/sparse_control.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <limits>

using namespace colmg;
using namespace colmg::testing;

namespace {

LinearSolveSpec tight_gmres() {
  LinearSolveSpec lin;
  lin.tol = 1e-11;
  return lin;
}

}  // namespace

TEST_CASE("F_sparse: hand-evaluated probe and the zero state") {
  SparseControlProblem prob{1.0, 1.0, -50.0, 50.0};
  Vector u = Vector::Zero(1), pbar = Vector::Constant(1, 2.0);
  CHECK(evaluate_F_sparse(u, pbar, prob)[0] == doctest::Approx(-1.0));
  prob = {1e-4, 1e-2, -50.0, 50.0};
  const Vector zero = Vector::Zero(6);
  CHECK(evaluate_F_sparse(zero, zero, prob).cwiseAbs().maxCoeff() == 0.0);
  // in the interior regime u = (pbar - beta) / nu solves F = 0
  pbar = Vector::Constant(1, 0.013);
  u = Vector::Constant(1, (0.013 - 1e-2) / 1e-4);
  CHECK(std::abs(evaluate_F_sparse(u, pbar, prob)[0]) < 1e-10);
  // beyond the box the optimum is the bound
  pbar = Vector::Constant(1, 1.0);
  u = Vector::Constant(1, 50.0);
  CHECK(std::abs(evaluate_F_sparse(u, pbar, prob)[0]) < 1e-10);
}

TEST_CASE("active sets: closed inequalities and degenerate bounds") {
  const SparseControlProblem prob{1e-2, 0.1, -5.0, 5.0};
  Vector pbar(5);
  pbar << 0.1, -0.1, 0.0, 0.5, 0.12;
  const ActiveSets s = update_active_sets(pbar, prob);
  CHECK(s.plus == std::vector<int>{0, 4});
  CHECK(s.minus == std::vector<int>{1});
  CHECK(s.marker[0] == doctest::Approx(1.0 / prob.nu));
  CHECK(s.marker[2] == 0.0);
  CHECK(s.marker[3] == 0.0);  // pbar - beta = 0.4 > nu b, upper bound active

  const ActiveSets none = update_active_sets(Vector::Zero(4), prob);
  CHECK(none.size() == 0);

  const double inf = std::numeric_limits<double>::infinity();
  const SparseControlProblem free_box{1.0, 0.0, -inf, inf};
  Vector q(4);
  q << -1.0, 0.0, 2.0, -0.5;
  const ActiveSets f = update_active_sets(q, free_box);
  CHECK(f.plus == std::vector<int>{1, 2});
  CHECK(f.minus == std::vector<int>{0, 3});
  CHECK(evaluate_F_sparse(q, q, free_box).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("problem validation") {
  CHECK_THROWS_AS((SparseControlProblem{0.0, 0.0, -1.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SparseControlProblem{1.0, -1.0, -1.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SparseControlProblem{1.0, 0.0, 1.0, -1.0}.validate()), std::invalid_argument);
  NewtonConfig c;
  c.rho = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("semismooth Newton: beta = 0 without active bounds reproduces the LQ optimum") {
  const Discretization d = small_discretization(2, 4, 4);
  const double inf = std::numeric_limits<double>::infinity();
  const SparseControlProblem prob{1e-4, 0.0, -inf, inf};
  NewtonConfig cfg;
  const SparseResult r = semismooth_newton(d, prob, cfg, tight_gmres());
  CHECK(r.converged);
  const LQResult lq = solve_lq(d, prob.nu, tight_gmres());
  const BlockLayout L{d.n_samples(), d.n_state(), d.n_state()};
  const Vector u_lq = lq.x.segment(L.u_offset(), L.n_control);
  CHECK((r.u - u_lq).norm() < 1e-6 * u_lq.norm());
}

TEST_CASE("semismooth Newton: merit decreases and the tail is superlinear") {
  const Discretization d = small_discretization(2, 4, 4);
  const SparseControlProblem prob{1e-4, 1e-2, -50.0, 50.0};
  const SparseResult r = semismooth_newton(d, prob, NewtonConfig{}, tight_gmres());
  REQUIRE(r.converged);
  CHECK(r.merit.back() < 1e-9);
  for (std::size_t k = 1; k < r.merit.size(); ++k) CHECK(r.merit[k] < r.merit[k - 1]);
  const std::size_t n = r.merit.size();
  REQUIRE(n >= 4);
  const double q1 = r.merit[n - 2] / r.merit[n - 3];
  const double q2 = r.merit[n - 1] / r.merit[n - 2];
  CHECK(q2 < q1);
  CHECK(q2 < 0.1);
  // the optimum satisfies the nonsmooth optimality map
  const Vector pbar = r.mean_adjoint(d.samples.weights);
  CHECK(evaluate_F_sparse(r.u, pbar, prob).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("semismooth Newton: large beta gives the zero control") {
  const Discretization d = small_discretization(2, 3, 3);
  const SparseControlProblem prob{1e-4, 1e3, -50.0, 50.0};
  const SparseResult r = semismooth_newton(d, prob, NewtonConfig{}, tight_gmres());
  CHECK(r.converged);
  CHECK(support_size(r.u) == 0);
}

TEST_CASE("semismooth Newton: support shrinks as beta grows") {
  const Discretization d = small_discretization(2, 4, 4);
  int prev = std::numeric_limits<int>::max();
  for (double beta : {0.0, 5e-3, 5e-2}) {
    const SparseResult r = semismooth_newton(d, {1e-4, beta, -50.0, 50.0}, NewtonConfig{}, tight_gmres());
    REQUIRE(r.converged);
    const int s = support_size(r.u);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("semismooth Newton: continuation reports every stage") {
  const Discretization d = small_discretization(2, 3, 3);
  const auto stages =
      semismooth_newton_continuation(d, {1e-4, 1e-2, -50.0, 50.0}, {1e-2, 1e-3, 1e-4}, NewtonConfig{}, tight_gmres());
  REQUIRE(stages.size() == 3);
  for (const auto& s : stages) CHECK(s.converged);
  const SparseResult direct = semismooth_newton(d, {1e-4, 1e-2, -50.0, 50.0}, NewtonConfig{}, tight_gmres());
  CHECK((stages.back().u - direct.u).norm() < 1e-6 * (1.0 + direct.u.norm()));
}
