#include "colmg/mesh.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace colmg {

Domain parse_domain(std::string_view name) {
  if (name == "interval") return Domain::interval;
  if (name == "unit-square") return Domain::unit_square;
  if (name == "l-shape") return Domain::l_shape;
  throw std::invalid_argument("unsupported domain '" + std::string(name) + "'");
}

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::interval: return "interval";
    case Domain::unit_square: return "unit-square";
    case Domain::l_shape: return "l-shape";
  }
  return "?";
}

ControlKind parse_control_kind(std::string_view name) {
  if (name == "distributed") return ControlKind::distributed;
  if (name == "local") return ControlKind::local;
  if (name == "boundary") return ControlKind::boundary;
  throw std::invalid_argument("unsupported control kind '" + std::string(name) + "'");
}

Interpolation parse_interpolation(std::string_view name) {
  if (name == "bilinear") return Interpolation::bilinear;
  if (name == "p1") return Interpolation::p1;
  throw std::invalid_argument("unknown interpolation '" + std::string(name) + "'");
}

std::string_view to_string(Interpolation k) { return k == Interpolation::bilinear ? "bilinear" : "p1"; }

std::string_view to_string(ControlKind k) {
  switch (k) {
    case ControlKind::distributed: return "distributed";
    case ControlKind::local: return "local";
    case ControlKind::boundary: return "boundary";
  }
  return "?";
}

double MeshLevel::element_measure(int e) const {
  const auto& el = elements[e];
  if (dim == 1) return std::abs(coords[el[1]][0] - coords[el[0]][0]);
  const auto& a = coords[el[0]];
  const auto& b = coords[el[1]];
  const auto& c = coords[el[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

std::array<double, 2> MeshLevel::element_barycenter(int e) const {
  const auto& el = elements[e];
  std::array<double, 2> bc{0.0, 0.0};
  const int nv = vertices_per_element();
  for (int k = 0; k < nv; ++k) {
    bc[0] += coords[el[k]][0];
    bc[1] += coords[el[k]][1];
  }
  bc[0] /= nv;
  bc[1] /= nv;
  return bc;
}

int MeshLevel::node_at(int ix, int iy) const {
  const int n = 1 << level;
  if (ix < 0 || ix > n || iy < 0 || iy > n) return -1;
  if (dim == 1) return iy == 0 ? lattice_lookup[ix] : -1;
  return lattice_lookup[static_cast<std::size_t>(iy) * (n + 1) + ix];
}

namespace {

// Lattice point (ix, iy) on a 2^level grid belongs to the closed domain.
bool in_domain(Domain domain, int n, int ix, int iy) {
  if (domain == Domain::l_shape) {
    const int half = n / 2;
    return !(ix > half && iy > half);
  }
  return true;
}

bool on_dirichlet_boundary(Domain domain, BoundaryKind bc, int n, int ix, int iy) {
  if (domain == Domain::interval) return ix == 0 || ix == n;
  if (bc == BoundaryKind::neumann_bottom && iy == 0 && ix > 0 && ix < n) return false;
  if (ix == 0 || ix == n || iy == 0 || iy == n) return true;
  if (domain == Domain::l_shape) {
    const int half = n / 2;
    if ((ix == half && iy >= half) || (iy == half && ix >= half)) return true;
  }
  return false;
}

}  // namespace

MeshLevel build_level(Domain domain, int level, BoundaryKind boundary) {
  if (level < 1) throw std::invalid_argument("build_level: level must be >= 1");
  if (boundary == BoundaryKind::neumann_bottom && domain != Domain::unit_square) {
    throw std::invalid_argument("build_level: Neumann bottom segment requires the unit square");
  }
  MeshLevel m;
  m.level = level;
  m.dim = domain == Domain::interval ? 1 : 2;
  const int n = 1 << level;
  m.h = 1.0 / n;

  if (m.dim == 1) {
    m.lattice_lookup.assign(n + 1, -1);
    for (int ix = 0; ix <= n; ++ix) {
      m.lattice_lookup[ix] = static_cast<int>(m.coords.size());
      m.coords.push_back({ix * m.h, 0.0});
      m.lattice.push_back({ix, 0});
    }
    for (int ix = 0; ix < n; ++ix) m.elements.push_back({ix, ix + 1, -1});
  } else {
    m.lattice_lookup.assign(static_cast<std::size_t>(n + 1) * (n + 1), -1);
    for (int iy = 0; iy <= n; ++iy) {
      for (int ix = 0; ix <= n; ++ix) {
        if (!in_domain(domain, n, ix, iy)) continue;
        m.lattice_lookup[static_cast<std::size_t>(iy) * (n + 1) + ix] =
            static_cast<int>(m.coords.size());
        m.coords.push_back({ix * m.h, iy * m.h});
        m.lattice.push_back({ix, iy});
      }
    }
    const int half = n / 2;
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        if (domain == Domain::l_shape && ix >= half && iy >= half) continue;
        const int v00 = m.node_at(ix, iy);
        const int v10 = m.node_at(ix + 1, iy);
        const int v11 = m.node_at(ix + 1, iy + 1);
        const int v01 = m.node_at(ix, iy + 1);
        // Each square is cut along its (0,0)-(1,1) diagonal; this keeps the
        // refinement nested.
        m.elements.push_back({v00, v10, v11});
        m.elements.push_back({v00, v11, v01});
      }
    }
  }

  m.dirichlet.resize(m.coords.size());
  m.free_index.assign(m.coords.size(), -1);
  for (int v = 0; v < m.num_nodes(); ++v) {
    m.dirichlet[v] = on_dirichlet_boundary(domain, boundary, n, m.lattice[v][0], m.lattice[v][1]);
    if (!m.dirichlet[v]) {
      m.free_index[v] = static_cast<int>(m.free_nodes.size());
      m.free_nodes.push_back(v);
    }
  }
  return m;
}

MeshHierarchy build_hierarchy(Domain domain, int level_min, int level_max, BoundaryKind boundary) {
  if (level_min < 1 || level_min > level_max) {
    throw std::invalid_argument("build_hierarchy: need 1 <= level_min <= level_max");
  }
  MeshHierarchy h;
  h.domain = domain;
  h.boundary = boundary;
  h.level_min = level_min;
  h.level_max = level_max;
  for (int l = level_min; l <= level_max; ++l) h.levels.push_back(build_level(domain, l, boundary));
  return h;
}

const MeshLevel& MeshHierarchy::at(int level) const {
  if (level < level_min || level > level_max) throw std::out_of_range("MeshHierarchy: level out of range");
  return levels[level - level_min];
}

std::vector<int> MeshHierarchy::embedding(int level) const {
  if (level <= level_min || level > level_max) throw std::out_of_range("embedding: level out of range");
  const MeshLevel& coarse = at(level - 1);
  const MeshLevel& fine = at(level);
  std::vector<int> map(coarse.num_nodes());
  for (int v = 0; v < coarse.num_nodes(); ++v) {
    map[v] = fine.node_at(2 * coarse.lattice[v][0], 2 * coarse.lattice[v][1]);
  }
  return map;
}

std::vector<std::vector<ParentLink>> MeshHierarchy::parents(int level, Interpolation kind) const {
  if (level <= level_min || level > level_max) throw std::out_of_range("parents: level out of range");
  const MeshLevel& coarse = at(level - 1);
  const MeshLevel& fine = at(level);
  std::vector<std::vector<ParentLink>> out(fine.num_nodes());
  for (int v = 0; v < fine.num_nodes(); ++v) {
    const int ix = fine.lattice[v][0];
    const int iy = fine.lattice[v][1];
    const bool ox = ix % 2 != 0;
    const bool oy = iy % 2 != 0;
    auto add = [&](int cx, int cy, double w) {
      const int c = coarse.node_at(cx, cy);
      if (c < 0) throw std::logic_error("parents: missing coarse node");
      out[v].push_back({c, w});
    };
    if (!ox && !oy) {
      add(ix / 2, iy / 2, 1.0);
    } else if (ox && !oy) {
      add((ix - 1) / 2, iy / 2, 0.5);
      add((ix + 1) / 2, iy / 2, 0.5);
    } else if (!ox && oy) {
      add(ix / 2, (iy - 1) / 2, 0.5);
      add(ix / 2, (iy + 1) / 2, 0.5);
    } else if (kind == Interpolation::p1) {
      // midpoint of a coarse diagonal edge
      add((ix - 1) / 2, (iy - 1) / 2, 0.5);
      add((ix + 1) / 2, (iy + 1) / 2, 0.5);
    } else {
      add((ix - 1) / 2, (iy - 1) / 2, 0.25);
      add((ix + 1) / 2, (iy - 1) / 2, 0.25);
      add((ix - 1) / 2, (iy + 1) / 2, 0.25);
      add((ix + 1) / 2, (iy + 1) / 2, 0.25);
    }
  }
  return out;
}

void write_mesh(std::ostream& os, const MeshLevel& mesh) {
  os << "nodes " << mesh.num_nodes() << '\n';
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    os << mesh.coords[v][0] << ' ' << mesh.coords[v][1] << ' ' << (mesh.dirichlet[v] ? 1 : 0) << '\n';
  }
  os << "elements " << mesh.num_elements() << '\n';
  for (const auto& el : mesh.elements) {
    os << el[0] << ' ' << el[1];
    if (mesh.dim == 2) os << ' ' << el[2];
    os << '\n';
  }
}

std::vector<int> ControlSupport::state_dofs(const MeshLevel& mesh) const {
  const auto& ns = at(mesh.level);
  std::vector<int> out(ns.size());
  for (std::size_t k = 0; k < ns.size(); ++k) out[k] = mesh.free_index[ns[k]];
  return out;
}

ControlSupport make_control_support(const MeshHierarchy& hier, ControlKind kind) {
  ControlSupport s;
  s.kind = kind;
  s.level_min = hier.level_min;
  if (kind == ControlKind::boundary && hier.boundary != BoundaryKind::neumann_bottom) {
    throw std::invalid_argument("boundary control needs a hierarchy with a Neumann bottom segment");
  }
  if (kind != ControlKind::distributed && hier.domain != Domain::unit_square) {
    throw std::invalid_argument("local and boundary controls are defined on the unit square");
  }
  for (const MeshLevel& m : hier.levels) {
    const int n = 1 << m.level;
    std::vector<int> nodes;
    for (int v : m.free_nodes) {
      const int ix = m.lattice[v][0];
      const int iy = m.lattice[v][1];
      bool keep = false;
      switch (kind) {
        case ControlKind::distributed: keep = true; break;
        case ControlKind::local: keep = 4 * ix >= n && 4 * ix <= 3 * n && 4 * iy >= n && 4 * iy <= 3 * n; break;
        case ControlKind::boundary: keep = iy == 0; break;
      }
      if (keep) nodes.push_back(v);
    }
    if (nodes.empty()) {
      throw std::invalid_argument("control support is empty on level " + std::to_string(m.level));
    }
    s.nodes.push_back(std::move(nodes));
  }
  return s;
}

}  // namespace colmg
