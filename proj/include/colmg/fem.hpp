#pragma once

#include "colmg/mesh.hpp"
#include "colmg/sparse.hpp"

#include <vector>

namespace colmg {

/// `free_dofs` restricts rows and columns to free nodes (Dirichlet rows
/// eliminated); `all_nodes` keeps every mesh node.
enum class Assembly { free_dofs, all_nodes };

/// P1 stiffness with a coefficient that is constant on each element.
SparseMatrix assemble_stiffness(const MeshLevel& mesh, const std::vector<double>& kappa,
                                Assembly mode = Assembly::free_dofs);
SparseMatrix assemble_stiffness(const MeshLevel& mesh, Assembly mode = Assembly::free_dofs);

SparseMatrix assemble_mass(const MeshLevel& mesh, Assembly mode = Assembly::free_dofs);
/// Row sums of the full mass matrix, one entry per mesh node.
Vector lumped_mass(const MeshLevel& mesh);

/// B with one row per free node and one column per control dof.
SparseMatrix assemble_control_operator(const MeshLevel& mesh, const ControlSupport& support);
/// Mass matrix of the control space, N_u x N_u.
SparseMatrix assemble_control_mass(const MeshLevel& mesh, const ControlSupport& support);

/// Scalar transfers between levels `level-1` and `level`, on free dofs.
/// P interpolates from the coarse level and R = 2^-d P^T. The control pair
/// acts on the control dofs of each level.
struct TransferOperator {
  int level = 0;
  SparseMatrix P;
  SparseMatrix R;
  SparseMatrix P_u;
  SparseMatrix R_u;
};

TransferOperator build_transfer(const MeshHierarchy& hier, int level,
                                const ControlSupport* support = nullptr,
                                Interpolation kind = Interpolation::bilinear);

/// Nodal interpolant of a function of (x, y), free dofs only.
template <class F>
Vector interpolate_free(const MeshLevel& mesh, F&& f) {
  Vector v(mesh.num_free());
  for (int k = 0; k < mesh.num_free(); ++k) {
    const auto& c = mesh.coords[mesh.free_nodes[k]];
    v[k] = f(c[0], c[1]);
  }
  return v;
}

}  // namespace colmg
