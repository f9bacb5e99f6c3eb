#include "colmg/saddle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace colmg {

Block::Block(std::shared_ptr<const SparseMatrix> m, double s) : mat(std::move(m)), scale(s) {
  if (!mat) throw std::invalid_argument("Block: null matrix, use Block::zero");
  rows_ = static_cast<int>(mat->rows());
  cols_ = static_cast<int>(mat->cols());
}

Block Block::zero(int rows, int cols) {
  Block b;
  b.rows_ = rows;
  b.cols_ = cols;
  b.scale = 0.0;
  return b;
}

void Block::set_rank_one(Vector l, Vector r) {
  if (l.size() != rows_ || r.size() != cols_) throw std::invalid_argument("Block: rank-one size mismatch");
  left = std::move(l);
  right = std::move(r);
}

void Block::apply_add(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> y, double alpha) const {
  if (mat && scale != 0.0) y.noalias() += (alpha * scale) * (*mat * x);
  if (has_rank_one()) y += (alpha * right.dot(x)) * left;
}

void Block::apply_transpose_add(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> y,
                                double alpha) const {
  if (mat && scale != 0.0) y.noalias() += (alpha * scale) * (mat->transpose() * x);
  if (has_rank_one()) y += (alpha * left.dot(x)) * right;
}

double Block::entry(int i, int j) const {
  double v = mat ? scale * mat->coeff(i, j) : 0.0;
  if (has_rank_one()) v += left[i] * right[j];
  return v;
}

DenseMatrix Block::dense() const {
  DenseMatrix d = DenseMatrix::Zero(rows_, cols_);
  if (mat) d = scale * DenseMatrix(*mat);
  if (has_rank_one()) d += left * right.transpose();
  return d;
}

void Block::add_triplets(std::vector<Triplet>& out, int row0, int col0) const {
  if (mat && scale != 0.0) {
    for (int r = 0; r < mat->outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(*mat, r); it; ++it)
        out.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
  }
  if (has_rank_one()) {
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (left[i] * right[j] != 0.0) out.emplace_back(row0 + i, col0 + j, left[i] * right[j]);
  }
}

void BlockSaddleSystem::validate() const {
  const int N = layout.samples;
  const int nh = layout.n_state;
  const int nu = layout.n_control;
  if (N < 1) throw std::invalid_argument("BlockSaddleSystem: no samples");
  if (static_cast<int>(C.size()) != N || static_cast<int>(A.size()) != N ||
      static_cast<int>(D.size()) != N || static_cast<int>(E.size()) != N ||
      static_cast<int>(weights.size()) != N) {
    throw std::invalid_argument("BlockSaddleSystem: per-sample block count differs from N");
  }
  auto check = [](const Block& b, int r, int c, const char* what) {
    if (b.rows() != r || b.cols() != c) {
      throw std::invalid_argument(std::string("BlockSaddleSystem: dimension mismatch in ") + what);
    }
  };
  check(G, nu, nu, "G");
  for (int j = 0; j < N; ++j) {
    check(C[j], nh, nh, "C");
    check(A[j], nh, nh, "A");
    check(D[j], nu, nh, "D");
    check(E[j], nh, nu, "E");
  }
  if (static_cast<int>(control_to_state.size()) != nu || static_cast<int>(state_to_control.size()) != nh) {
    throw std::invalid_argument("BlockSaddleSystem: control map has wrong size");
  }
}

Eigen::Map<const DenseMatrix> BlockSaddleSystem::ys(const BlockVector& x) const {
  return {x.data(), layout.n_state, layout.samples};
}
Eigen::Map<const DenseMatrix> BlockSaddleSystem::ps(const BlockVector& x) const {
  return {x.data() + layout.p_offset(0), layout.n_state, layout.samples};
}
Eigen::Map<DenseMatrix> BlockSaddleSystem::ys(BlockVector& x) const {
  return {x.data(), layout.n_state, layout.samples};
}
Eigen::Map<DenseMatrix> BlockSaddleSystem::ps(BlockVector& x) const {
  return {x.data() + layout.p_offset(0), layout.n_state, layout.samples};
}

void BlockSaddleSystem::apply(const BlockVector& x, BlockVector& out) const {
  if (x.size() != layout.size()) throw std::invalid_argument("apply: dimension mismatch");
  out.setZero(layout.size());
  const int nh = layout.n_state;
  const int nu = layout.n_control;
  const auto u = x.segment(layout.u_offset(), nu);
  auto out_u = out.segment(layout.u_offset(), nu);
  G.apply_add(u, out_u);
  for (int j = 0; j < layout.samples; ++j) {
    const auto y = x.segment(layout.y_offset(j), nh);
    const auto p = x.segment(layout.p_offset(j), nh);
    auto oy = out.segment(layout.y_offset(j), nh);
    auto op = out.segment(layout.p_offset(j), nh);
    C[j].apply_add(y, oy);
    A[j].apply_transpose_add(p, oy);
    D[j].apply_add(p, out_u);
    A[j].apply_add(y, op);
    E[j].apply_add(u, op);
  }
}

BlockVector BlockSaddleSystem::apply(const BlockVector& x) const {
  BlockVector out;
  apply(x, out);
  return out;
}

BlockVector BlockSaddleSystem::residual(const BlockVector& f, const BlockVector& x) const {
  BlockVector r;
  apply(x, r);
  return f - r;
}

SparseMatrix BlockSaddleSystem::materialize() const {
  std::vector<Triplet> t;
  const int uo = static_cast<int>(layout.u_offset());
  G.add_triplets(t, uo, uo);
  for (int j = 0; j < layout.samples; ++j) {
    const int yo = static_cast<int>(layout.y_offset(j));
    const int po = static_cast<int>(layout.p_offset(j));
    C[j].add_triplets(t, yo, yo);
    std::vector<Triplet> at;
    A[j].add_triplets(at, 0, 0);
    for (const auto& e : at) {
      t.emplace_back(yo + e.col(), po + e.row(), e.value());
      t.emplace_back(po + e.row(), yo + e.col(), e.value());
    }
    D[j].add_triplets(t, uo, po);
    E[j].add_triplets(t, po, uo);
  }
  const int n = static_cast<int>(layout.size());
  return from_triplets(n, n, t);
}

DenseMatrix BlockSaddleSystem::dense() const { return DenseMatrix(materialize()); }

BlockTransfer make_block_transfer(const TransferOperator& t, const BlockLayout& fine,
                                  const BlockLayout& coarse) {
  if (t.P.rows() != fine.n_state || t.P.cols() != coarse.n_state) {
    throw std::invalid_argument("make_block_transfer: state transfer does not match layouts");
  }
  if (t.P_u.rows() != fine.n_control || t.P_u.cols() != coarse.n_control) {
    throw std::invalid_argument("make_block_transfer: control transfer does not match layouts");
  }
  return {t, fine, coarse};
}

BlockVector BlockTransfer::restrict_vector(const BlockVector& x) const {
  BlockVector out(coarse.size());
  const int N = fine.samples;
  Eigen::Map<const DenseMatrix> yf(x.data(), fine.n_state, N);
  Eigen::Map<const DenseMatrix> pf(x.data() + fine.p_offset(0), fine.n_state, N);
  Eigen::Map<DenseMatrix> yc(out.data(), coarse.n_state, N);
  Eigen::Map<DenseMatrix> pc(out.data() + coarse.p_offset(0), coarse.n_state, N);
  yc.noalias() = scalar.R * yf;
  pc.noalias() = scalar.R * pf;
  out.segment(coarse.u_offset(), coarse.n_control).noalias() =
      scalar.R_u * x.segment(fine.u_offset(), fine.n_control);
  return out;
}

BlockVector BlockTransfer::prolong_vector(const BlockVector& x) const {
  BlockVector out(fine.size());
  const int N = fine.samples;
  Eigen::Map<const DenseMatrix> yc(x.data(), coarse.n_state, N);
  Eigen::Map<const DenseMatrix> pc(x.data() + coarse.p_offset(0), coarse.n_state, N);
  Eigen::Map<DenseMatrix> yf(out.data(), fine.n_state, N);
  Eigen::Map<DenseMatrix> pf(out.data() + fine.p_offset(0), fine.n_state, N);
  yf.noalias() = scalar.P * yc;
  pf.noalias() = scalar.P * pc;
  out.segment(fine.u_offset(), fine.n_control).noalias() =
      scalar.P_u * x.segment(coarse.u_offset(), coarse.n_control);
  return out;
}

namespace {

std::vector<int> invert_map(const std::vector<int>& c2s, int n_state) {
  std::vector<int> s2c(n_state, -1);
  for (std::size_t k = 0; k < c2s.size(); ++k) s2c[c2s[k]] = static_cast<int>(k);
  return s2c;
}

}  // namespace

BlockSaddleSystem galerkin_coarsen(const BlockSaddleSystem& sys, const TransferOperator& t,
                                   const std::vector<int>& coarse_control_to_state) {
  if (t.level != sys.level) {
    throw std::invalid_argument("galerkin_coarsen: transfer is for level " + std::to_string(t.level) +
                                ", system is on level " + std::to_string(sys.level));
  }
  if (t.P.rows() != sys.layout.n_state || t.P_u.rows() != sys.layout.n_control) {
    throw std::invalid_argument("galerkin_coarsen: transfer does not match the system");
  }
  enum Side { state = 0, control = 1 };
  const SparseMatrix* Rs[2] = {&t.R, &t.R_u};
  const SparseMatrix* Ps[2] = {&t.P, &t.P_u};
  std::map<std::tuple<const SparseMatrix*, int, int>, std::shared_ptr<const SparseMatrix>> cache;

  auto coarsen = [&](const Block& b, Side rs, Side cs) {
    const int rows = static_cast<int>(Rs[rs]->rows());
    const int cols = static_cast<int>(Ps[cs]->cols());
    Block out = Block::zero(rows, cols);
    if (b.mat) {
      auto key = std::make_tuple(b.mat.get(), static_cast<int>(rs), static_cast<int>(cs));
      auto it = cache.find(key);
      if (it == cache.end()) {
        auto m = std::make_shared<const SparseMatrix>(triple_product(*Rs[rs], *b.mat, *Ps[cs]));
        it = cache.emplace(key, std::move(m)).first;
      }
      out = Block(it->second, b.scale);
    }
    if (b.has_rank_one()) {
      out.set_rank_one(*Rs[rs] * b.left, Ps[cs]->transpose() * b.right);
    }
    return out;
  };

  BlockSaddleSystem c;
  c.level = sys.level - 1;
  c.layout = {sys.layout.samples, static_cast<int>(t.P.cols()), static_cast<int>(t.P_u.cols())};
  c.weights = sys.weights;
  c.G = coarsen(sys.G, control, control);
  for (int j = 0; j < sys.samples(); ++j) {
    c.C.push_back(coarsen(sys.C[j], state, state));
    c.A.push_back(coarsen(sys.A[j], state, state));
    c.D.push_back(coarsen(sys.D[j], control, state));
    c.E.push_back(coarsen(sys.E[j], state, control));
  }
  c.control_to_state = coarse_control_to_state;
  c.state_to_control = invert_map(coarse_control_to_state, c.layout.n_state);
  c.validate();
  return c;
}

double default_target(double x, double y) {
  return std::exp(y * y) * std::sin(2.0 * std::numbers::pi * x) * std::sin(2.0 * std::numbers::pi * y);
}

LevelOperators assemble_level_operators(const MeshLevel& mesh, const SampleSet& samples,
                                        const ControlSupport& support) {
  LevelOperators ops;
  ops.M = std::make_shared<const SparseMatrix>(assemble_mass(mesh));
  if (support.kind == ControlKind::distributed) {
    ops.B = ops.M;
    ops.Bt = ops.M;
    ops.M_u = ops.M;
  } else {
    ops.B = std::make_shared<const SparseMatrix>(assemble_control_operator(mesh, support));
    ops.Bt = std::make_shared<const SparseMatrix>(SparseMatrix(ops.B->transpose()));
    ops.M_u = std::make_shared<const SparseMatrix>(assemble_control_mass(mesh, support));
  }
  ops.A.reserve(samples.size());
  for (int j = 0; j < samples.size(); ++j) {
    ops.A.push_back(std::make_shared<const SparseMatrix>(assemble_stiffness(mesh, samples.kappa[j])));
  }
  ops.control_to_state = support.state_dofs(mesh);
  return ops;
}

BlockSaddleSystem assemble_lq_system(const LevelOperators& ops, const std::vector<double>& weights,
                                     int level, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("assemble_lq_system: nu must be positive");
  if (weights.size() != ops.A.size()) throw std::invalid_argument("assemble_lq_system: weight count mismatch");
  BlockSaddleSystem s;
  s.level = level;
  s.layout = {static_cast<int>(weights.size()), static_cast<int>(ops.M->rows()),
              static_cast<int>(ops.M_u->rows())};
  s.weights = weights;
  s.G = Block(ops.M_u, nu);
  for (std::size_t j = 0; j < weights.size(); ++j) {
    s.C.emplace_back(ops.M, 1.0);
    s.A.emplace_back(ops.A[j], 1.0);
    s.D.emplace_back(ops.Bt, -weights[j]);
    s.E.emplace_back(ops.B, -1.0);
  }
  s.control_to_state = ops.control_to_state;
  s.state_to_control = invert_map(ops.control_to_state, s.layout.n_state);
  s.validate();
  return s;
}

BlockVector assemble_lq_rhs(const BlockSaddleSystem& sys, const LevelOperators& ops,
                            const LQProblemData& data) {
  const int nh = sys.layout.n_state;
  if (data.y_d.size() != nh || data.f.size() != nh) {
    throw std::invalid_argument("assemble_lq_rhs: data vectors do not match the state space");
  }
  BlockVector rhs = BlockVector::Zero(sys.layout.size());
  const Vector My = *ops.M * data.y_d;
  const Vector Mf = *ops.M * data.f;
  for (int j = 0; j < sys.samples(); ++j) {
    rhs.segment(sys.layout.y_offset(j), nh) = My;
    rhs.segment(sys.layout.p_offset(j), nh) = Mf;
  }
  return rhs;
}

ProblemHierarchy make_problem_hierarchy(Domain domain, int level_min, int level_max, ControlKind control,
                                        Interpolation interp) {
  ProblemHierarchy ph;
  const BoundaryKind bc = control == ControlKind::boundary ? BoundaryKind::neumann_bottom : BoundaryKind::dirichlet;
  ph.mesh = build_hierarchy(domain, level_min, level_max, bc);
  ph.support = make_control_support(ph.mesh, control);
  for (int l = level_min; l <= level_max; ++l) {
    ph.control_to_state.push_back(ph.support.state_dofs(ph.mesh.at(l)));
    if (l > level_min) ph.transfers.push_back(build_transfer(ph.mesh, l, &ph.support, interp));
  }
  return ph;
}

}  // namespace colmg
