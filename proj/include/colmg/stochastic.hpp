#pragma once

#include "colmg/mesh.hpp"
#include "colmg/sparse.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace colmg {

/// Gaussian covariance sigma2 * exp(-|x-y|^2 / L2).
struct CovarianceSpec {
  double sigma2 = 0.5;
  double L2 = 0.5;
  void validate() const;
};

/// Either a fixed number of terms or a target captured-variance fraction.
struct KLTarget {
  int terms = 0;
  double fraction = 0.0;
  static KLTarget with_terms(int m) { return {m, 0.0}; }
  static KLTarget with_fraction(double f) { return {0, f}; }
};

/// Truncated expansion g = sigma * sum_j sqrt(lambda_j) b_j xi_j. `lambda`
/// holds the eigenvalues of the unit-variance kernel, `modes` the nodal values
/// of b_j on every mesh node (columns), orthonormal in the lumped-mass product.
struct KLExpansion {
  double sigma2 = 0.0;
  double L2 = 0.0;
  Vector lambda;
  DenseMatrix modes;
  Vector weights;  // lumped mass per node
  double captured_fraction = 0.0;
  double trace = 0.0;
  int terms() const { return static_cast<int>(lambda.size()); }
};

/// Nystrom discretization of the covariance operator on all nodes of `mesh`.
KLExpansion compute_kl(const MeshLevel& mesh, const CovarianceSpec& cov, KLTarget target);

/// Per-element coefficient exp(g) with g averaged over the element vertices.
std::vector<double> kl_coefficient(const KLExpansion& kl, const MeshLevel& mesh,
                                   const Eigen::Ref<const Vector>& xi);

struct SampleSet {
  std::vector<double> weights;
  DenseMatrix xi;  // N x M, one row per sample
  std::vector<std::vector<double>> kappa;  // per sample, per element
  std::uint64_t seed = 0;
  bool monte_carlo = false;
  int size() const { return static_cast<int>(weights.size()); }
};

/// Gauss-Hermite rule for the standard normal density: nodes and weights summing to 1.
void gauss_hermite(int points, std::vector<double>& nodes, std::vector<double>& weights);

SampleSet sample_monte_carlo(const KLExpansion& kl, const MeshLevel& mesh, int count,
                             std::uint64_t seed);
SampleSet sample_gauss_hermite_tensor(const KLExpansion& kl, const MeshLevel& mesh,
                                      int points_per_dim, long budget = 100000);
/// Builds a sample set from explicit parameter vectors and weights.
SampleSet sample_from_points(const KLExpansion& kl, const MeshLevel& mesh, const DenseMatrix& xi,
                             const std::vector<double>& weights);
/// A single deterministic sample with kappa = 1.
SampleSet deterministic_sample(const MeshLevel& mesh);

/// CSV with header weight,xi_1..xi_M.
void write_samples_csv(std::ostream& os, const SampleSet& s);

}  // namespace colmg
