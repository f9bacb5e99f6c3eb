#pragma once

#include "colmg/saddle.hpp"
#include "colmg/smoother.hpp"

#include <Eigen/SparseLU>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace colmg {

struct SolveReport {
  std::string method;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residuals;  // relative residual norms, entry 0 is the initial one
  double final_residual = 0.0;
  double convergence_factor = 0.0;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
  std::string config;
};

/// Geometric mean of the last five residual ratios.
double observed_convergence_factor(const SolveReport& report);

void write_report_csv_header(std::ostream& os);
void write_report_csv_row(std::ostream& os, const SolveReport& r, std::string_view label);

enum class CoarseSolverKind { block_elimination, sparse_lu };
CoarseSolverKind parse_coarse_solver(std::string_view name);

/// Direct solver for the coarsest system.
class CoarseSolver {
 public:
  CoarseSolver(const BlockSaddleSystem& sys, CoarseSolverKind kind);
  BlockVector solve(const BlockVector& f) const;

 private:
  const BlockSaddleSystem* sys_;
  CoarseSolverKind kind_;
  std::vector<Eigen::PartialPivLU<DenseMatrix>> lu_a_;
  std::vector<DenseMatrix> C_, D_, E_;
  Eigen::PartialPivLU<DenseMatrix> schur_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> sparse_;
};

struct MultigridConfig {
  SmootherConfig smoother;
  int n1 = 2;
  int n2 = 2;
  CoarseSolverKind coarse = CoarseSolverKind::block_elimination;
  void validate() const;
};

/// V-cycle over a Galerkin hierarchy. levels_[0] is the coarsest system.
class Multigrid {
 public:
  /// Coarsens `finest` with the transfers of `ph` down to the coarsest mesh level.
  Multigrid(BlockSaddleSystem finest, const ProblemHierarchy& ph, MultigridConfig cfg);
  /// Explicit hierarchy (coarsest first) with transfers[k] between k and k+1.
  Multigrid(std::vector<BlockSaddleSystem> systems, std::vector<TransferOperator> transfers,
            MultigridConfig cfg);
  Multigrid(const Multigrid&) = delete;
  Multigrid& operator=(const Multigrid&) = delete;
  Multigrid(Multigrid&&) = default;

  int num_levels() const { return static_cast<int>(systems_.size()); }
  const BlockSaddleSystem& finest() const { return systems_.back(); }
  const BlockSaddleSystem& system(int k) const { return systems_.at(k); }
  const CollectiveSmoother& smoother(int k) const { return smoothers_.at(k); }

  /// One V-cycle on hierarchy index k (default finest) starting from x.
  void vcycle(BlockVector& x, const BlockVector& f, int k = -1) const;
  /// One V-cycle from zero.
  BlockVector precondition(const BlockVector& r) const;
  /// Repeated V-cycles from x = 0 until ||f - Sx|| <= tol ||f||.
  BlockVector solve_stationary(const BlockVector& f, double tol, int maxit, SolveReport& report) const;

 private:
  void setup();

  MultigridConfig cfg_;
  std::vector<BlockSaddleSystem> systems_;
  std::vector<BlockTransfer> transfers_;  // transfers_[k]: between k and k+1
  std::vector<CollectiveSmoother> smoothers_;
  std::unique_ptr<CoarseSolver> coarse_;
};

}  // namespace colmg
