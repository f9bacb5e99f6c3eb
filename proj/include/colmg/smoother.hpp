#pragma once

#include "colmg/saddle.hpp"

#include <string_view>

namespace colmg {

enum class SmootherVariant { jacobi, gauss_seidel };

SmootherVariant parse_smoother_variant(std::string_view name);
std::string_view to_string(SmootherVariant v);

struct SmootherConfig {
  SmootherVariant variant = SmootherVariant::jacobi;
  double theta = 0.5;
  void validate() const;
};

/// Diagonal entries coupling the 2N+1 unknowns at one mesh node.
struct NodeReducedSystem {
  int node = 0;
  Vector a, c, d, e;
  double g = 0.0;
  bool has_control = false;

  DenseMatrix dense() const;  // ordering (y_1..y_N, u, p_1..p_N)
};

NodeReducedSystem extract_node_system(const BlockSaddleSystem& sys, int node);

/// Solves the node system with the right-hand side split as in the block
/// rows: f_y for the C/A^T rows, b for the control row, f_p for the A/E rows.
void solve_node_system(const NodeReducedSystem& ns, const Vector& f_y, double b, const Vector& f_p,
                       Vector& y, double& u, Vector& p);

/// Collective relaxation on one level. Diagonals are extracted once.
class CollectiveSmoother {
 public:
  CollectiveSmoother(const BlockSaddleSystem& sys, SmootherConfig cfg);

  /// One sweep, in place.
  void sweep(BlockVector& x, const BlockVector& f) const;
  const SmootherConfig& config() const { return cfg_; }
  /// node updates performed so far (each touches 2N+1 unknowns)
  long long node_updates() const { return node_updates_; }

 private:
  void jacobi(BlockVector& x, const BlockVector& f) const;
  void gauss_seidel(BlockVector& x, const BlockVector& f) const;
  /// Computes the correction for residual r into dx (all nodes).
  void node_solves(const BlockVector& r, BlockVector& dx) const;

  const BlockSaddleSystem* sys_;
  SmootherConfig cfg_;
  DenseMatrix inv_a_, c_;  // n_state x N
  DenseMatrix d_, e_;      // n_control x N
  Vector g_, schur_;       // n_control
  std::vector<SparseMatrix> At_;  // A_j^T, row access for Gauss-Seidel
  mutable long long node_updates_ = 0;
};

}  // namespace colmg
