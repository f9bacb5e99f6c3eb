#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace colmg {

enum class Domain { interval, unit_square, l_shape };

Domain parse_domain(std::string_view name);
std::string_view to_string(Domain d);

/// Which part of the boundary carries homogeneous Dirichlet data. With
/// `neumann_bottom` the open segment (0,1)x{0} of the unit square is left free.
enum class BoundaryKind { dirichlet, neumann_bottom };

/// One structured level. Nodes sit on the integer lattice {0..2^level}^d scaled
/// by h = 2^-level and are numbered lexicographically by (y, x).
struct MeshLevel {
  int level = 0;
  int dim = 1;
  double h = 1.0;
  std::vector<std::array<double, 2>> coords;
  std::vector<std::array<int, 2>> lattice;
  /// Triangles (dim 2) or intervals (dim 1, third entry is -1).
  std::vector<std::array<int, 3>> elements;
  std::vector<bool> dirichlet;
  /// node -> free dof index, -1 on Dirichlet nodes
  std::vector<int> free_index;
  std::vector<int> free_nodes;

  int num_nodes() const { return static_cast<int>(coords.size()); }
  int num_free() const { return static_cast<int>(free_nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int vertices_per_element() const { return dim + 1; }

  double element_measure(int e) const;
  std::array<double, 2> element_barycenter(int e) const;
  /// Returns the node index at lattice position (ix, iy) or -1 if absent.
  int node_at(int ix, int iy) const;

  std::vector<int> lattice_lookup;  // (n+1)^d table, -1 where no node
};

/// Prolongation rule for fine nodes at cell centres. `bilinear` averages the
/// four cell corners (tensor product of the 1D rule, full weighting after
/// transposition); `p1` interpolates along the triangle diagonal, which is
/// exact for the nested P1 spaces. Both coincide on edge midpoints and in 1D.
enum class Interpolation { bilinear, p1 };

Interpolation parse_interpolation(std::string_view name);
std::string_view to_string(Interpolation k);

struct ParentLink {
  int coarse_node;
  double weight;
};

struct MeshHierarchy {
  Domain domain = Domain::interval;
  BoundaryKind boundary = BoundaryKind::dirichlet;
  int level_min = 1;
  int level_max = 1;
  std::vector<MeshLevel> levels;  // levels[k] has level index level_min + k

  const MeshLevel& at(int level) const;
  const MeshLevel& finest() const { return levels.back(); }
  const MeshLevel& coarsest() const { return levels.front(); }

  /// coarse node -> coinciding fine node, for the pair (level-1, level)
  std::vector<int> embedding(int level) const;
  /// fine node -> list of coarse parents with interpolation weights
  std::vector<std::vector<ParentLink>> parents(int level, Interpolation kind = Interpolation::bilinear) const;
};

MeshHierarchy build_hierarchy(Domain domain, int level_min, int level_max,
                              BoundaryKind boundary = BoundaryKind::dirichlet);
MeshLevel build_level(Domain domain, int level, BoundaryKind boundary = BoundaryKind::dirichlet);

/// Plain-text export: "nodes <n>" then "x y dirichlet" lines, "elements <m>" then vertex lists.
void write_mesh(std::ostream& os, const MeshLevel& mesh);

enum class ControlKind { distributed, local, boundary };

ControlKind parse_control_kind(std::string_view name);
std::string_view to_string(ControlKind k);

/// Control degrees of freedom per level. Controls live on a subset of the
/// free mesh nodes; for local controls the region is the closed square
/// [0.25, 0.75]^2, for boundary controls the segment (0,1)x{0}.
struct ControlSupport {
  ControlKind kind = ControlKind::distributed;
  int level_min = 1;
  /// per level: mesh node index of each control dof
  std::vector<std::vector<int>> nodes;

  const std::vector<int>& at(int level) const { return nodes.at(level - level_min); }
  int num_controls(int level) const { return static_cast<int>(at(level).size()); }
  /// free dof index (state numbering) of each control dof
  std::vector<int> state_dofs(const MeshLevel& mesh) const;
};

ControlSupport make_control_support(const MeshHierarchy& hier, ControlKind kind);

}  // namespace colmg
