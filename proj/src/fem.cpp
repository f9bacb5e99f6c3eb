#include "colmg/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace colmg {

namespace {

int dof(const MeshLevel& mesh, Assembly mode, int node) {
  return mode == Assembly::all_nodes ? node : mesh.free_index[node];
}

int size_of(const MeshLevel& mesh, Assembly mode) {
  return mode == Assembly::all_nodes ? mesh.num_nodes() : mesh.num_free();
}

// Gradients of the three barycentric functions of triangle e (constant).
std::array<std::array<double, 2>, 3> p1_gradients(const MeshLevel& mesh, int e, double& area) {
  const auto& el = mesh.elements[e];
  const auto& a = mesh.coords[el[0]];
  const auto& b = mesh.coords[el[1]];
  const auto& c = mesh.coords[el[2]];
  const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  area = 0.5 * det;
  return {{{(b[1] - c[1]) / det, (c[0] - b[0]) / det},
           {(c[1] - a[1]) / det, (a[0] - c[0]) / det},
           {(a[1] - b[1]) / det, (b[0] - a[0]) / det}}};
}

std::vector<int> control_index_of_nodes(const MeshLevel& mesh, const ControlSupport& support) {
  const auto& nodes = support.at(mesh.level);
  if (nodes.empty()) throw std::invalid_argument("control support is empty");
  std::vector<int> idx(mesh.num_nodes(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] < 0 || nodes[k] >= mesh.num_nodes() || mesh.dirichlet[nodes[k]]) {
      throw std::invalid_argument("control support node is not a free mesh node");
    }
    idx[nodes[k]] = static_cast<int>(k);
  }
  return idx;
}

bool element_in_local_region(const MeshLevel& mesh, int e) {
  const auto bc = mesh.element_barycenter(e);
  return bc[0] > 0.25 && bc[0] < 0.75 && bc[1] > 0.25 && bc[1] < 0.75;
}

// Calls visit(node_a, node_b, weight) for the 1D trace mass on the bottom edge.
template <class Visit>
void for_each_bottom_edge_entry(const MeshLevel& mesh, Visit&& visit) {
  const int n = 1 << mesh.level;
  const double h = mesh.h;
  for (int ix = 0; ix < n; ++ix) {
    const int v0 = mesh.node_at(ix, 0);
    const int v1 = mesh.node_at(ix + 1, 0);
    visit(v0, v0, h / 3.0);
    visit(v1, v1, h / 3.0);
    visit(v0, v1, h / 6.0);
    visit(v1, v0, h / 6.0);
  }
}

// Calls visit(node_a, node_b, weight) for every local mass entry of elements accepted by keep(e).
template <class Keep, class Visit>
void for_each_mass_entry(const MeshLevel& mesh, Keep&& keep, Visit&& visit) {
  const int nv = mesh.vertices_per_element();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!keep(e)) continue;
    const auto& el = mesh.elements[e];
    const double meas = mesh.element_measure(e);
    const double diag = mesh.dim == 1 ? meas / 3.0 : meas / 6.0;
    const double off = mesh.dim == 1 ? meas / 6.0 : meas / 12.0;
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b < nv; ++b) visit(el[a], el[b], a == b ? diag : off);
    }
  }
}

}  // namespace

SparseMatrix assemble_stiffness(const MeshLevel& mesh, const std::vector<double>& kappa, Assembly mode) {
  if (static_cast<int>(kappa.size()) != mesh.num_elements()) {
    throw std::invalid_argument("assemble_stiffness: one coefficient per element expected");
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double k = kappa[e];
    if (!(k > 0.0) || !std::isfinite(k)) {
      throw std::invalid_argument("assemble_stiffness: non-positive coefficient on element " +
                                  std::to_string(e));
    }
    const auto& el = mesh.elements[e];
    if (mesh.dim == 1) {
      const double w = k / mesh.element_measure(e);
      for (int a = 0; a < 2; ++a) {
        const int ia = dof(mesh, mode, el[a]);
        if (ia < 0) continue;
        for (int b = 0; b < 2; ++b) {
          const int ib = dof(mesh, mode, el[b]);
          if (ib >= 0) t.emplace_back(ia, ib, a == b ? w : -w);
        }
      }
      continue;
    }
    double area = 0.0;
    const auto g = p1_gradients(mesh, e, area);
    for (int a = 0; a < 3; ++a) {
      const int ia = dof(mesh, mode, el[a]);
      if (ia < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int ib = dof(mesh, mode, el[b]);
        if (ib < 0) continue;
        t.emplace_back(ia, ib, k * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
      }
    }
  }
  const int n = size_of(mesh, mode);
  SparseMatrix A = from_triplets(n, n, t);
  A.prune(1e-300);
  return A;
}

SparseMatrix assemble_stiffness(const MeshLevel& mesh, Assembly mode) {
  return assemble_stiffness(mesh, std::vector<double>(mesh.num_elements(), 1.0), mode);
}

SparseMatrix assemble_mass(const MeshLevel& mesh, Assembly mode) {
  std::vector<Triplet> t;
  for_each_mass_entry(mesh, [](int) { return true; }, [&](int a, int b, double w) {
    const int ia = dof(mesh, mode, a);
    const int ib = dof(mesh, mode, b);
    if (ia >= 0 && ib >= 0) t.emplace_back(ia, ib, w);
  });
  const int n = size_of(mesh, mode);
  return from_triplets(n, n, t);
}

Vector lumped_mass(const MeshLevel& mesh) {
  Vector w = Vector::Zero(mesh.num_nodes());
  for_each_mass_entry(mesh, [](int) { return true; }, [&](int a, int, double v) { w[a] += v; });
  return w;
}

SparseMatrix assemble_control_operator(const MeshLevel& mesh, const ControlSupport& support) {
  if (support.kind == ControlKind::distributed) return assemble_mass(mesh);
  const auto cidx = control_index_of_nodes(mesh, support);
  std::vector<Triplet> t;
  auto visit = [&](int a, int b, double w) {
    const int row = mesh.free_index[a];
    const int col = cidx[b];
    if (row >= 0 && col >= 0) t.emplace_back(row, col, w);
  };
  if (support.kind == ControlKind::local) {
    for_each_mass_entry(mesh, [&](int e) { return element_in_local_region(mesh, e); }, visit);
  } else {
    for_each_bottom_edge_entry(mesh, visit);
  }
  return from_triplets(mesh.num_free(), support.num_controls(mesh.level), t);
}

SparseMatrix assemble_control_mass(const MeshLevel& mesh, const ControlSupport& support) {
  if (support.kind == ControlKind::distributed) return assemble_mass(mesh);
  const auto cidx = control_index_of_nodes(mesh, support);
  std::vector<Triplet> t;
  auto visit = [&](int a, int b, double w) {
    if (cidx[a] >= 0 && cidx[b] >= 0) t.emplace_back(cidx[a], cidx[b], w);
  };
  if (support.kind == ControlKind::local) {
    for_each_mass_entry(mesh, [&](int e) { return element_in_local_region(mesh, e); }, visit);
  } else {
    for_each_bottom_edge_entry(mesh, visit);
  }
  const int nu = support.num_controls(mesh.level);
  return from_triplets(nu, nu, t);
}

TransferOperator build_transfer(const MeshHierarchy& hier, int level, const ControlSupport* support,
                                Interpolation kind) {
  if (level <= hier.level_min || level > hier.level_max) {
    throw std::out_of_range("build_transfer: level " + std::to_string(level) + " out of range");
  }
  const MeshLevel& coarse = hier.at(level - 1);
  const MeshLevel& fine = hier.at(level);
  const auto parents = hier.parents(level, kind);
  const double scale = std::ldexp(1.0, -fine.dim);

  TransferOperator t;
  t.level = level;
  std::vector<Triplet> entries;
  for (int k = 0; k < fine.num_free(); ++k) {
    for (const ParentLink& pl : parents[fine.free_nodes[k]]) {
      const int c = coarse.free_index[pl.coarse_node];
      if (c >= 0) entries.emplace_back(k, c, pl.weight);
    }
  }
  t.P = from_triplets(fine.num_free(), coarse.num_free(), entries);
  t.R = SparseMatrix(scale * SparseMatrix(t.P.transpose()));

  if (support != nullptr) {
    const auto& fnodes = support->at(level);
    std::vector<int> cidx(coarse.num_nodes(), -1);
    const auto& cnodes = support->at(level - 1);
    for (std::size_t k = 0; k < cnodes.size(); ++k) cidx[cnodes[k]] = static_cast<int>(k);
    entries.clear();
    for (std::size_t k = 0; k < fnodes.size(); ++k) {
      for (const ParentLink& pl : parents[fnodes[k]]) {
        const int c = cidx[pl.coarse_node];
        if (c >= 0) entries.emplace_back(static_cast<int>(k), c, pl.weight);
      }
    }
    t.P_u = from_triplets(static_cast<int>(fnodes.size()), static_cast<int>(cnodes.size()), entries);
    t.R_u = SparseMatrix(scale * SparseMatrix(t.P_u.transpose()));
  }
  return t;
}

}  // namespace colmg
