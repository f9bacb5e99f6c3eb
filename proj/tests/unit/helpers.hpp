#pragma once

#include "colmg/problem.hpp"
#include "colmg/spectral.hpp"

#include <random>

namespace colmg::testing {

/// Small L-shape problem with a few Monte Carlo samples.
inline Discretization small_discretization(int level_min = 2, int level_max = 3, int samples = 3,
                                           ControlKind control = ControlKind::distributed,
                                           Domain domain = Domain::l_shape) {
  DiscretizationSpec s;
  s.domain = domain;
  s.level_min = level_min;
  s.level_max = level_max;
  s.control = control;
  s.sampling.method = SamplingMethod::monte_carlo;
  s.sampling.count = samples;
  s.sampling.seed = 5;
  s.sampling.cov = {0.5, 0.5};
  s.sampling.kl = KLTarget::with_terms(3);
  return make_discretization(s);
}

inline BlockSaddleSystem small_lq_system(const Discretization& d, double nu = 1e-2) {
  return assemble_lq_system(d.ops, d.samples.weights, d.fine().level, nu);
}

inline Vector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(gen);
  return v;
}

/// Indices of the 2N+1 unknowns at state node i, ordered (y_1..y_N, u, p_1..p_N).
inline std::vector<Eigen::Index> node_indices(const BlockSaddleSystem& s, int i) {
  const BlockLayout& L = s.layout;
  std::vector<Eigen::Index> idx;
  for (int j = 0; j < L.samples; ++j) idx.push_back(L.y_offset(j) + i);
  const int k = s.state_to_control[i];
  if (k >= 0) idx.push_back(L.u_offset() + k);
  for (int j = 0; j < L.samples; ++j) idx.push_back(L.p_offset(j) + i);
  return idx;
}

/// Dense collective block-Jacobi iteration matrix I - theta D^-1 S.
inline DenseMatrix dense_jacobi_map(const BlockSaddleSystem& s, double theta) {
  const DenseMatrix S = s.dense();
  const Eigen::Index n = S.rows();
  DenseMatrix Dinv = DenseMatrix::Zero(n, n);
  std::vector<bool> covered(n, false);
  for (int i = 0; i < s.layout.n_state; ++i) {
    const auto idx = node_indices(s, i);
    const int m = static_cast<int>(idx.size());
    DenseMatrix blk(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) blk(a, b) = S(idx[a], idx[b]);
    const DenseMatrix inv = blk.inverse();
    for (int a = 0; a < m; ++a) {
      covered[idx[a]] = true;
      for (int b = 0; b < m; ++b) Dinv(idx[a], idx[b]) = inv(a, b);
    }
  }
  for (Eigen::Index q = 0; q < n; ++q)
    if (!covered[q]) Dinv(q, q) = 1.0 / S(q, q);
  return DenseMatrix::Identity(n, n) - theta * Dinv * S;
}

}  // namespace colmg::testing
