#include "colmg/saddle.hpp"
#include "colmg/smoother.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace colmg;
using namespace colmg::testing;

TEST_CASE("saddle: apply agrees with the materialized matrix") {
  const Discretization d = small_discretization();
  const BlockSaddleSystem s = small_lq_system(d);
  s.validate();
  const DenseMatrix S = s.dense();
  CHECK((DenseMatrix(s.materialize()) - S).cwiseAbs().maxCoeff() < 1e-14);
  const Eigen::Index n = s.layout.size();
  for (Eigen::Index q = 0; q < n; q += 17) {
    Vector e = Vector::Zero(n);
    e[q] = 1.0;
    CHECK((s.apply(e) - S.col(q)).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(s.apply(Vector::Zero(n)).cwiseAbs().maxCoeff() == 0.0);
  const Vector x = random_vector(n, 3);
  CHECK((s.apply(x) - S * x).norm() < 1e-12 * (S * x).norm());
}

TEST_CASE("saddle: block structure of the dense assembly") {
  const Discretization d = small_discretization();
  const BlockSaddleSystem s = small_lq_system(d, 1e-3);
  const DenseMatrix S = s.dense();
  const BlockLayout& L = s.layout;
  const DenseMatrix M(*d.ops.M);
  const int n = L.n_state;
  for (int j = 0; j < L.samples; ++j) {
    const double z = d.samples.weights[j];
    const DenseMatrix A(*d.ops.A[j]);
    CHECK((S.block(L.y_offset(j), L.y_offset(j), n, n) - M).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((S.block(L.y_offset(j), L.p_offset(j), n, n) - A.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((S.block(L.p_offset(j), L.y_offset(j), n, n) - A).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((S.block(L.u_offset(), L.p_offset(j), n, n) + z * M).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((S.block(L.p_offset(j), L.u_offset(), n, n) + M).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK((S.block(L.u_offset(), L.u_offset(), n, n) - 1e-3 * M).cwiseAbs().maxCoeff() < 1e-16);
}

TEST_CASE("saddle: single deterministic sample is the classical KKT system") {
  DiscretizationSpec spec;
  spec.level_min = 2;
  spec.level_max = 3;
  spec.sampling.method = SamplingMethod::deterministic;
  const Discretization d = make_discretization(spec);
  const BlockSaddleSystem s = small_lq_system(d);
  CHECK(s.samples() == 1);
  CHECK(s.layout.size() == 3 * d.n_state());
  const NodeReducedSystem ns = extract_node_system(s, 0);
  CHECK(ns.dense().rows() == 3);
}

TEST_CASE("saddle: system size of the reference collocation run") {
  DiscretizationSpec spec;  // L-shape levels 3..5, 5 Gauss-Hermite points in 3 dimensions
  const Discretization d = make_discretization(spec);
  CHECK(d.n_samples() == 125);
  CHECK(d.n_state() == 705);
  const BlockSaddleSystem s = small_lq_system(d, 1e-4);
  CHECK(s.layout.size() == 251 * 705);
  CHECK(s.layout.size() == doctest::Approx(1.77e5).epsilon(0.01));
}

TEST_CASE("saddle: zero data gives the zero optimum") {
  const Discretization d = small_discretization();
  const BlockSaddleSystem s = small_lq_system(d);
  const Vector zero = Vector::Zero(d.n_state());
  const BlockVector rhs = assemble_lq_rhs(s, d.ops, {zero, zero, 1e-2});
  CHECK(rhs.cwiseAbs().maxCoeff() == 0.0);
  LinearSolveSpec lin;
  const LinearSolver solver(BlockSaddleSystem(s), d.ph, lin);
  LinearSolveStats st;
  CHECK(solver.solve(rhs, st).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("galerkin coarsening: C block equals R M P and the layout shrinks") {
  const Discretization d = small_discretization();
  const BlockSaddleSystem s = small_lq_system(d);
  const TransferOperator& t = d.ph.transfer_to(3);
  const BlockSaddleSystem c = galerkin_coarsen(s, t, d.ph.controls(2));
  CHECK(c.samples() == s.samples());
  CHECK(c.layout.n_state == d.ph.mesh.at(2).num_free());
  const DenseMatrix RMP = DenseMatrix(t.R) * DenseMatrix(*d.ops.M) * DenseMatrix(t.P);
  CHECK((c.C[0].dense() - RMP).cwiseAbs().maxCoeff() < 1e-15);
  const DenseMatrix RAP = DenseMatrix(t.R) * DenseMatrix(*d.ops.A[1]) * DenseMatrix(t.P);
  CHECK((c.A[1].dense() - RAP).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("node system: diagonal entries and local-control nodes") {
  const Discretization d = small_discretization();
  const BlockSaddleSystem s = small_lq_system(d);
  for (int i = 0; i < d.n_state(); ++i) {
    const NodeReducedSystem ns = extract_node_system(s, i);
    for (int j = 0; j < s.samples(); ++j) {
      CHECK(ns.a[j] > 0.0);
      CHECK(ns.a[j] == doctest::Approx(d.ops.A[j]->coeff(i, i)));
    }
  }
  const Discretization loc = small_discretization(2, 3, 2, ControlKind::local, Domain::unit_square);
  const BlockSaddleSystem sl = small_lq_system(loc);
  int without = 0;
  for (int i = 0; i < loc.n_state(); ++i) {
    const NodeReducedSystem ns = extract_node_system(sl, i);
    const auto& c = loc.fine().coords[loc.fine().free_nodes[i]];
    const bool inside = c[0] >= 0.25 && c[0] <= 0.75 && c[1] >= 0.25 && c[1] <= 0.75;
    CHECK(ns.has_control == inside);
    if (!ns.has_control) {
      ++without;
      CHECK(ns.dense().rows() == 2 * sl.samples() + 1);
    }
  }
  CHECK(without > 0);
}

TEST_CASE("node system: closed-form solve matches dense LU") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> pos(0.5, 2.0), any(-1.0, 1.0);
  const int N = 5;
  NodeReducedSystem ns;
  ns.a.resize(N);
  ns.c.resize(N);
  ns.d.resize(N);
  ns.e.resize(N);
  for (int j = 0; j < N; ++j) {
    ns.a[j] = pos(gen);
    ns.c[j] = pos(gen);
    ns.d[j] = -pos(gen) / N;
    ns.e[j] = -pos(gen);
  }
  ns.g = 1e-2;
  ns.has_control = true;
  Vector xy(N), xp(N);
  for (int j = 0; j < N; ++j) {
    xy[j] = any(gen);
    xp[j] = any(gen);
  }
  const double xu = any(gen);
  Vector full(2 * N + 1);
  full << xy, xu, xp;
  const Vector rhs = ns.dense() * full;
  Vector y, p;
  double u = 0.0;
  solve_node_system(ns, rhs.head(N), rhs[N], rhs.tail(N), y, u, p);
  CHECK((y - xy).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(std::abs(u - xu) < 1e-13);
  CHECK((p - xp).cwiseAbs().maxCoeff() < 1e-13);
  const Vector lu = ns.dense().partialPivLu().solve(rhs);
  CHECK((lu - full).cwiseAbs().maxCoeff() < 1e-12);

  solve_node_system(ns, Vector::Zero(N), 0.0, Vector::Zero(N), y, u, p);
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);
  CHECK(u == 0.0);
  CHECK(p.cwiseAbs().maxCoeff() == 0.0);

  ns.has_control = false;
  solve_node_system(ns, Vector::Zero(N), 0.0, ns.a, y, u, p);
  CHECK((y - Vector::Ones(N)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("smoother: Jacobi sweep equals the dense iteration map") {
  const Discretization d = small_discretization(2, 3, 3);
  const BlockSaddleSystem s = small_lq_system(d);
  const Eigen::Index n = s.layout.size();
  const Vector x0 = random_vector(n, 1);
  const Vector f = random_vector(n, 2);
  for (double theta : {1.0, 0.5}) {
    SmootherConfig cfg;
    cfg.theta = theta;
    const CollectiveSmoother sm(s, cfg);
    Vector x = x0;
    sm.sweep(x, f);
    // x1 = G x0 + (I - G) S^-1 f
    const DenseMatrix G = dense_jacobi_map(s, theta);
    const DenseMatrix S = s.dense();
    const Vector expect = G * x0 + (DenseMatrix::Identity(n, n) - G) * S.partialPivLu().solve(f);
    CHECK((x - expect).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + expect.cwiseAbs().maxCoeff()));
  }
  SmootherConfig one, half;
  one.theta = 1.0;
  half.theta = 0.5;
  Vector a = x0, b = x0;
  CollectiveSmoother(s, one).sweep(a, f);
  CollectiveSmoother(s, half).sweep(b, f);
  CHECK(((b - x0) - 0.5 * (a - x0)).cwiseAbs().maxCoeff() < 1e-12 * (a - x0).cwiseAbs().maxCoeff());
}

TEST_CASE("smoother: exact solution is a fixed point") {
  const Discretization d = small_discretization(2, 3, 3);
  const BlockSaddleSystem s = small_lq_system(d);
  const Vector xs = random_vector(s.layout.size(), 9);
  const Vector f = s.apply(xs);
  for (SmootherVariant v : {SmootherVariant::jacobi, SmootherVariant::gauss_seidel}) {
    SmootherConfig cfg;
    cfg.variant = v;
    Vector x = xs;
    CollectiveSmoother(s, cfg).sweep(x, f);
    CHECK((x - xs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("smoother: Gauss-Seidel sweep equals sequential dense node solves") {
  const Discretization d = small_discretization(2, 3, 2);
  const BlockSaddleSystem s = small_lq_system(d);
  const DenseMatrix S = s.dense();
  const Eigen::Index n = s.layout.size();
  const Vector f = random_vector(n, 4);
  Vector ref = random_vector(n, 5);
  Vector x = ref;
  SmootherConfig cfg;
  cfg.variant = SmootherVariant::gauss_seidel;
  cfg.theta = 0.7;
  CollectiveSmoother(s, cfg).sweep(x, f);
  for (int i = 0; i < s.layout.n_state; ++i) {
    const auto idx = node_indices(s, i);
    const int m = static_cast<int>(idx.size());
    const Vector r = f - S * ref;
    DenseMatrix blk(m, m);
    Vector rb(m);
    for (int a = 0; a < m; ++a) {
      rb[a] = r[idx[a]];
      for (int b = 0; b < m; ++b) blk(a, b) = S(idx[a], idx[b]);
    }
    const Vector dx = blk.partialPivLu().solve(rb);
    for (int a = 0; a < m; ++a) ref[idx[a]] += cfg.theta * dx[a];
  }
  CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("smoother: rank-one C blocks enter the node diagonal and the sweep") {
  const Discretization d = small_discretization(2, 3, 2);
  BlockSaddleSystem s = small_lq_system(d);
  const Vector w = random_vector(d.n_state(), 12);
  s.C[1].set_rank_one(0.3 * w, w);
  const DenseMatrix S = s.dense();
  const NodeReducedSystem ns = extract_node_system(s, 4);
  CHECK(ns.c[1] == doctest::Approx(d.ops.M->coeff(4, 4) + 0.3 * w[4] * w[4]));
  // block application of a rank-one C against its dense form
  const Vector v = random_vector(d.n_state(), 13);
  Vector out = Vector::Zero(d.n_state());
  s.C[1].apply_add(v, out);
  CHECK((out - s.C[1].dense() * v).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::Index n = s.layout.size();
  const Vector x0 = random_vector(n, 14);
  const Vector f = random_vector(n, 15);
  SmootherConfig cfg;
  cfg.theta = 1.0;
  Vector x = x0;
  CollectiveSmoother(s, cfg).sweep(x, f);
  const DenseMatrix G = dense_jacobi_map(s, 1.0);
  const Vector expect = G * x0 + (DenseMatrix::Identity(n, n) - G) * S.partialPivLu().solve(f);
  CHECK((x - expect).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + expect.cwiseAbs().maxCoeff()));
}
