#pragma once

#include "colmg/multigrid.hpp"
#include "colmg/sparse.hpp"

#include <functional>

namespace colmg {

/// out = op(in); `out` is resized by the callee as needed.
using LinearOperator = std::function<void(const Vector&, Vector&)>;

struct KrylovConfig {
  double tol = 1e-9;
  int maxit = 200;
  int restart = 0;  // 0: no restart
  bool record_orthogonality = false;
  void validate() const;
};

struct GmresInfo {
  double orthogonality_drift = 0.0;  // max |V^T V - I| when recorded
};

/// Right-preconditioned GMRES from x = 0. Stops on ||b - op(x)|| <= tol ||b||.
Vector gmres(const LinearOperator& op, const LinearOperator& pc, const Vector& b, const KrylovConfig& cfg,
             SolveReport& report, GmresInfo* info = nullptr);

LinearOperator identity_operator();
LinearOperator matrix_operator(const DenseMatrix& m);
LinearOperator system_operator(const BlockSaddleSystem& sys);
LinearOperator vcycle_preconditioner(const Multigrid& mg);

}  // namespace colmg
