#pragma once

#include "colmg/fem.hpp"
#include "colmg/mesh.hpp"
#include "colmg/sparse.hpp"
#include "colmg/stochastic.hpp"

#include <map>
#include <memory>
#include <vector>

namespace colmg {

/// scale * mat + left * right^T. A null `mat` is the zero matrix; empty
/// `left` means no rank-one term.
struct Block {
  std::shared_ptr<const SparseMatrix> mat;
  double scale = 1.0;
  Vector left;
  Vector right;
  int rows_ = 0;
  int cols_ = 0;

  Block() = default;
  Block(std::shared_ptr<const SparseMatrix> m, double s = 1.0);
  static Block zero(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool has_rank_one() const { return left.size() > 0; }
  void set_rank_one(Vector l, Vector r);

  /// y += alpha * B x
  void apply_add(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> y, double alpha = 1.0) const;
  /// y += alpha * B^T x
  void apply_transpose_add(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> y,
                           double alpha = 1.0) const;
  /// B(i, j)
  double entry(int i, int j) const;
  DenseMatrix dense() const;
  void add_triplets(std::vector<Triplet>& out, int row0, int col0) const;
};

/// Sizes and offsets of x = (y_1..y_N, u, p_1..p_N) stored contiguously.
struct BlockLayout {
  int samples = 0;
  int n_state = 0;
  int n_control = 0;

  Eigen::Index size() const { return 2 * static_cast<Eigen::Index>(samples) * n_state + n_control; }
  Eigen::Index y_offset(int j) const { return static_cast<Eigen::Index>(j) * n_state; }
  Eigen::Index u_offset() const { return static_cast<Eigen::Index>(samples) * n_state; }
  Eigen::Index p_offset(int j) const { return u_offset() + n_control + static_cast<Eigen::Index>(j) * n_state; }
};

using BlockVector = Vector;

/// The (2N+1)-block operator
///   [ C_j      A_j^T ]
///   [     G    D_j   ]
///   [ A_j  E_j       ]
/// with per-sample blocks C_j, A_j (state x state), D_j (control x state),
/// E_j (state x control) and a shared control block G.
struct BlockSaddleSystem {
  int level = 0;
  BlockLayout layout;
  std::vector<double> weights;
  std::vector<Block> C;
  std::vector<Block> A;
  std::vector<Block> D;
  std::vector<Block> E;
  Block G;
  /// state dof carrying control dof k, and the inverse map (-1 where none)
  std::vector<int> control_to_state;
  std::vector<int> state_to_control;

  int samples() const { return layout.samples; }
  void validate() const;

  Eigen::Map<const DenseMatrix> ys(const BlockVector& x) const;
  Eigen::Map<const DenseMatrix> ps(const BlockVector& x) const;
  Eigen::Map<DenseMatrix> ys(BlockVector& x) const;
  Eigen::Map<DenseMatrix> ps(BlockVector& x) const;

  void apply(const BlockVector& x, BlockVector& out) const;
  BlockVector apply(const BlockVector& x) const;
  BlockVector residual(const BlockVector& f, const BlockVector& x) const;

  SparseMatrix materialize() const;
  DenseMatrix dense() const;
};

/// Transfers lifted to block vectors.
struct BlockTransfer {
  TransferOperator scalar;
  BlockLayout fine;
  BlockLayout coarse;
  BlockVector restrict_vector(const BlockVector& x) const;
  BlockVector prolong_vector(const BlockVector& x) const;
};

BlockTransfer make_block_transfer(const TransferOperator& t, const BlockLayout& fine,
                                  const BlockLayout& coarse);

/// Replaces every block X by R X P with the state or control transfers on
/// each side. Blocks sharing a matrix on the fine level share it on the coarse
/// level as well.
BlockSaddleSystem galerkin_coarsen(const BlockSaddleSystem& sys, const TransferOperator& t,
                                   const std::vector<int>& coarse_control_to_state);

struct LQProblemData {
  Vector y_d;  // free-dof nodal values
  Vector f;
  double nu = 1e-4;
};

/// Reference target used in the experiments, exp(y^2) sin(2 pi x) sin(2 pi y).
double default_target(double x, double y);

/// Finite element matrices of one level shared by the problem instances.
struct LevelOperators {
  std::shared_ptr<const SparseMatrix> M;
  std::shared_ptr<const SparseMatrix> B;
  std::shared_ptr<const SparseMatrix> Bt;
  std::shared_ptr<const SparseMatrix> M_u;
  std::vector<std::shared_ptr<const SparseMatrix>> A;  // one per sample
  std::vector<int> control_to_state;
};

LevelOperators assemble_level_operators(const MeshLevel& mesh, const SampleSet& samples,
                                        const ControlSupport& support);

/// C_j = M, G = nu M_U, D_j = -zeta_j B^T, E_j = -B; rhs (M y_d, 0, M f).
BlockSaddleSystem assemble_lq_system(const LevelOperators& ops, const std::vector<double>& weights,
                                     int level, double nu);
BlockVector assemble_lq_rhs(const BlockSaddleSystem& sys, const LevelOperators& ops,
                            const LQProblemData& data);

/// Per-level helpers for building multigrid hierarchies.
struct ProblemHierarchy {
  MeshHierarchy mesh;
  ControlSupport support;
  std::vector<TransferOperator> transfers;  // transfers[k] between level_min+k and level_min+k+1
  std::vector<std::vector<int>> control_to_state;  // per level
  const TransferOperator& transfer_to(int level) const { return transfers.at(level - mesh.level_min - 1); }
  const std::vector<int>& controls(int level) const { return control_to_state.at(level - mesh.level_min); }
};

ProblemHierarchy make_problem_hierarchy(Domain domain, int level_min, int level_max, ControlKind control,
                                        Interpolation interp = Interpolation::bilinear);

}  // namespace colmg
