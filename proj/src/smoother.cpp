#include "colmg/smoother.hpp"

#include <cmath>
#include <stdexcept>

namespace colmg {

SmootherVariant parse_smoother_variant(std::string_view name) {
  if (name == "jacobi") return SmootherVariant::jacobi;
  if (name == "gauss-seidel") return SmootherVariant::gauss_seidel;
  throw std::invalid_argument("unknown smoother '" + std::string(name) + "'");
}

std::string_view to_string(SmootherVariant v) {
  return v == SmootherVariant::jacobi ? "jacobi" : "gauss-seidel";
}

void SmootherConfig::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("smoother: theta must lie in (0, 1]");
}

DenseMatrix NodeReducedSystem::dense() const {
  const int N = static_cast<int>(a.size());
  DenseMatrix S = DenseMatrix::Zero(2 * N + 1, 2 * N + 1);
  for (int j = 0; j < N; ++j) {
    S(j, j) = c[j];
    S(j, N + 1 + j) = a[j];
    S(N + 1 + j, j) = a[j];
    if (has_control) {
      S(N, N + 1 + j) = d[j];
      S(N + 1 + j, N) = e[j];
    }
  }
  S(N, N) = has_control ? g : 1.0;
  return S;
}

NodeReducedSystem extract_node_system(const BlockSaddleSystem& sys, int node) {
  const int N = sys.samples();
  if (node < 0 || node >= sys.layout.n_state) throw std::out_of_range("extract_node_system: node out of range");
  NodeReducedSystem ns;
  ns.node = node;
  ns.a.resize(N);
  ns.c.resize(N);
  ns.d = Vector::Zero(N);
  ns.e = Vector::Zero(N);
  const int k = sys.state_to_control[node];
  ns.has_control = k >= 0;
  for (int j = 0; j < N; ++j) {
    ns.a[j] = sys.A[j].entry(node, node);
    if (ns.a[j] == 0.0) {
      throw std::domain_error("extract_node_system: zero diagonal in A_" + std::to_string(j) +
                              " at node " + std::to_string(node));
    }
    ns.c[j] = sys.C[j].entry(node, node);
    if (ns.has_control) {
      ns.d[j] = sys.D[j].entry(k, node);
      ns.e[j] = sys.E[j].entry(node, k);
    }
  }
  if (ns.has_control) ns.g = sys.G.entry(k, k);
  return ns;
}

void solve_node_system(const NodeReducedSystem& ns, const Vector& f_y, double b, const Vector& f_p,
                       Vector& y, double& u, Vector& p) {
  const Vector inv_a = ns.a.cwiseInverse();
  u = 0.0;
  if (ns.has_control) {
    const double den = ns.g + (ns.d.array() * ns.c.array() * ns.e.array() * inv_a.array().square()).sum();
    if (den == 0.0 || !std::isfinite(den)) {
      throw std::domain_error("solve_node_system: zero Schur denominator at node " + std::to_string(ns.node));
    }
    const double num =
        b - (ns.d.array() * (f_y.array() * inv_a.array() - ns.c.array() * f_p.array() * inv_a.array().square())).sum();
    u = num / den;
  }
  y = (f_p.array() - ns.e.array() * u) * inv_a.array();
  p = (f_y.array() - ns.c.array() * y.array()) * inv_a.array();
}

CollectiveSmoother::CollectiveSmoother(const BlockSaddleSystem& sys, SmootherConfig cfg)
    : sys_(&sys), cfg_(cfg) {
  cfg_.validate();
  const int N = sys.samples();
  const int nh = sys.layout.n_state;
  const int nu = sys.layout.n_control;
  inv_a_.resize(nh, N);
  c_.resize(nh, N);
  d_.resize(nu, N);
  e_.resize(nu, N);
  g_.resize(nu);
  schur_.resize(nu);
  for (int j = 0; j < N; ++j) {
    const Block& A = sys.A[j];
    const Block& C = sys.C[j];
    for (int i = 0; i < nh; ++i) {
      const double a = A.entry(i, i);
      if (a == 0.0) {
        throw std::domain_error("collective smoother: zero diagonal in A_" + std::to_string(j) +
                                " at node " + std::to_string(i));
      }
      inv_a_(i, j) = 1.0 / a;
      c_(i, j) = C.entry(i, i);
    }
    for (int k = 0; k < nu; ++k) {
      const int i = sys.control_to_state[k];
      d_(k, j) = sys.D[j].entry(k, i);
      e_(k, j) = sys.E[j].entry(i, k);
    }
  }
  for (int k = 0; k < nu; ++k) {
    const int i = sys.control_to_state[k];
    g_[k] = sys.G.entry(k, k);
    double s = g_[k];
    for (int j = 0; j < N; ++j) s += d_(k, j) * c_(i, j) * e_(k, j) * inv_a_(i, j) * inv_a_(i, j);
    if (s == 0.0 || !std::isfinite(s)) {
      throw std::domain_error("collective smoother: zero Schur denominator at node " + std::to_string(i));
    }
    schur_[k] = s;
  }
  if (cfg_.variant == SmootherVariant::gauss_seidel) {
    for (int j = 0; j < N; ++j) {
      if (!sys.A[j].mat) throw std::invalid_argument("Gauss-Seidel smoother needs sparse A blocks");
      At_.emplace_back(sys.A[j].mat->transpose());
    }
  }
}

void CollectiveSmoother::sweep(BlockVector& x, const BlockVector& f) const {
  if (x.size() != sys_->layout.size() || f.size() != sys_->layout.size()) {
    throw std::invalid_argument("smoother: dimension mismatch");
  }
  if (cfg_.variant == SmootherVariant::jacobi) {
    jacobi(x, f);
  } else {
    gauss_seidel(x, f);
  }
}

void CollectiveSmoother::node_solves(const BlockVector& r, BlockVector& dx) const {
  const BlockSaddleSystem& s = *sys_;
  const int nu = s.layout.n_control;
  dx.resize(r.size());
  auto fy = s.ys(r);
  auto fp = s.ps(r);
  const auto b = r.segment(s.layout.u_offset(), nu);
  auto Y = s.ys(dx);
  auto P = s.ps(dx);
  auto U = dx.segment(s.layout.u_offset(), nu);
  // state rows without control first, then overwrite the control nodes
  Y.array() = fp.array() * inv_a_.array();
  for (int k = 0; k < nu; ++k) {
    const int i = s.control_to_state[k];
    const auto ia = inv_a_.row(i).array();
    const double num =
        b[k] - (d_.row(k).array() * (fy.row(i).array() * ia - c_.row(i).array() * fp.row(i).array() * ia * ia)).sum();
    const double u = num / schur_[k];
    U[k] = u;
    Y.row(i).array() = (fp.row(i).array() - e_.row(k).array() * u) * ia;
  }
  P.array() = (fy.array() - c_.array() * Y.array()) * inv_a_.array();
  node_updates_ += s.layout.n_state;
}

void CollectiveSmoother::jacobi(BlockVector& x, const BlockVector& f) const {
  const BlockVector r = sys_->residual(f, x);
  BlockVector dx;
  node_solves(r, dx);
  x += cfg_.theta * dx;
}

namespace {

double row_dot(const SparseMatrix& m, int row, const double* x) {
  double s = 0.0;
  for (SparseMatrix::InnerIterator it(m, row); it; ++it) s += it.value() * x[it.col()];
  return s;
}

}  // namespace

void CollectiveSmoother::gauss_seidel(BlockVector& x, const BlockVector& f) const {
  const BlockSaddleSystem& s = *sys_;
  const int N = s.samples();
  const int nh = s.layout.n_state;
  const double theta = cfg_.theta;
  double* X = x.data();
  const double* F = f.data();
  const Eigen::Index uo = s.layout.u_offset();

  // running values of right^T y_j for rank-one terms in C_j
  std::vector<double> c_dot(N, 0.0);
  for (int j = 0; j < N; ++j) {
    if (s.C[j].has_rank_one()) c_dot[j] = s.C[j].right.dot(x.segment(s.layout.y_offset(j), nh));
  }
  auto block_row = [&](const Block& b, int row, const double* v) {
    double r = b.mat && b.scale != 0.0 ? b.scale * row_dot(*b.mat, row, v) : 0.0;
    if (b.has_rank_one()) r += b.left[row] * b.right.dot(Eigen::Map<const Vector>(v, b.cols()));
    return r;
  };

  Vector fy(N), fp(N), dy(N), dp(N);
  for (int i = 0; i < nh; ++i) {
    const int k = s.state_to_control[i];
    double b = 0.0;
    if (k >= 0) {
      b = F[uo + k] - block_row(s.G, k, X + uo);
      for (int j = 0; j < N; ++j) b -= block_row(s.D[j], k, X + s.layout.p_offset(j));
    }
    for (int j = 0; j < N; ++j) {
      const double* y = X + s.layout.y_offset(j);
      const double* p = X + s.layout.p_offset(j);
      const Block& C = s.C[j];
      double cy = C.mat && C.scale != 0.0 ? C.scale * row_dot(*C.mat, i, y) : 0.0;
      if (C.has_rank_one()) cy += C.left[i] * c_dot[j];
      fy[j] = F[s.layout.y_offset(j) + i] - cy - s.A[j].scale * row_dot(At_[j], i, p);
      double ap = s.A[j].scale * row_dot(*s.A[j].mat, i, y) + block_row(s.E[j], i, X + uo);
      fp[j] = F[s.layout.p_offset(j) + i] - ap;
    }
    const auto ia = inv_a_.row(i).transpose().array();
    double du = 0.0;
    if (k >= 0) {
      const auto d = d_.row(k).transpose().array();
      du = (b - (d * (fy.array() * ia - c_.row(i).transpose().array() * fp.array() * ia * ia)).sum()) / schur_[k];
      dy = (fp.array() - e_.row(k).transpose().array() * du) * ia;
    } else {
      dy = fp.array() * ia;
    }
    dp = (fy.array() - c_.row(i).transpose().array() * dy.array()) * ia;
    if (k >= 0) X[uo + k] += theta * du;
    for (int j = 0; j < N; ++j) {
      X[s.layout.y_offset(j) + i] += theta * dy[j];
      X[s.layout.p_offset(j) + i] += theta * dp[j];
      if (s.C[j].has_rank_one()) c_dot[j] += s.C[j].right[i] * theta * dy[j];
    }
  }
  node_updates_ += nh;
}

}  // namespace colmg
