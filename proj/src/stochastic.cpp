#include "colmg/stochastic.hpp"

#include "colmg/fem.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace colmg {

void CovarianceSpec::validate() const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("covariance: sigma2 must be positive");
  if (!(L2 > 0.0)) throw std::invalid_argument("covariance: L2 must be positive");
}

namespace {

struct Eigenpairs {
  Vector values;        // descending
  DenseMatrix vectors;  // matching columns
};

Eigenpairs dense_top(const DenseMatrix& K) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(K);
  if (es.info() != Eigen::Success) throw std::runtime_error("compute_kl: eigensolver failed");
  Eigenpairs out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

// Subspace iteration with Rayleigh-Ritz for the k leading eigenpairs of a
// symmetric positive semidefinite matrix.
Eigenpairs subspace_top(const DenseMatrix& K, int k, int wanted) {
  const int n = static_cast<int>(K.rows());
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  DenseMatrix Q(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) Q(i, j) = normal(rng);
  Vector previous = Vector::Constant(k, -1.0);
  Eigenpairs out;
  for (int it = 0; it < 500; ++it) {
    DenseMatrix Z = K * Q;
    Eigen::HouseholderQR<DenseMatrix> qr(Z);
    Q = qr.householderQ() * DenseMatrix::Identity(n, k);
    DenseMatrix H = Q.transpose() * K * Q;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(H);
    Vector vals = es.eigenvalues().reverse();
    DenseMatrix vecs = es.eigenvectors().rowwise().reverse();
    Q = Q * vecs;
    const double scale = std::max(vals[0], 1e-300);
    const double change = (vals.head(wanted) - previous.head(wanted)).cwiseAbs().maxCoeff();
    previous = vals;
    out.values = vals;
    out.vectors = Q;
    if (it > 2 && change <= 1e-14 * scale) {
      DenseMatrix Rm = K * Q.leftCols(wanted) - Q.leftCols(wanted) * vals.head(wanted).asDiagonal();
      if (Rm.colwise().norm().maxCoeff() <= 1e-10 * scale) return out;
    }
  }
  throw std::runtime_error("compute_kl: subspace iteration did not converge");
}

int terms_for_fraction(const Vector& values, double trace, double fraction) {
  double acc = 0.0;
  for (int j = 0; j < values.size(); ++j) {
    acc += std::max(values[j], 0.0);
    if (acc / trace >= fraction) return j + 1;
  }
  return -1;
}

}  // namespace

KLExpansion compute_kl(const MeshLevel& mesh, const CovarianceSpec& cov, KLTarget target) {
  cov.validate();
  if (target.terms <= 0 && !(target.fraction > 0.0)) {
    throw std::invalid_argument("compute_kl: give a number of terms or a variance fraction");
  }
  if (target.terms <= 0 && target.fraction > 1.0) {
    throw std::invalid_argument("compute_kl: variance fraction exceeds the computable total");
  }
  const int n = mesh.num_nodes();
  if (target.terms > n) throw std::invalid_argument("compute_kl: more terms than mesh nodes");

  KLExpansion kl;
  kl.sigma2 = cov.sigma2;
  kl.L2 = cov.L2;
  kl.weights = lumped_mass(mesh);
  kl.trace = kl.weights.sum();
  const Vector sw = kl.weights.cwiseSqrt();

  DenseMatrix K(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double dx = mesh.coords[i][0] - mesh.coords[j][0];
      const double dy = mesh.coords[i][1] - mesh.coords[j][1];
      K(i, j) = sw[i] * std::exp(-(dx * dx + dy * dy) / cov.L2) * sw[j];
    }
  }

  Eigenpairs ep;
  int m = target.terms;
  if (n <= 400) {
    ep = dense_top(K);
    if (m <= 0) m = terms_for_fraction(ep.values, kl.trace, target.fraction);
  } else {
    int k = std::max(32, 2 * std::max(m, 8));
    while (true) {
      k = std::min(k, n);
      const int wanted = m > 0 ? m : std::max(1, k / 2);
      ep = k == n ? dense_top(K) : subspace_top(K, k, wanted);
      if (m > 0) break;
      const int found = terms_for_fraction(ep.values.head(wanted), kl.trace, target.fraction);
      if (found > 0) {
        m = found;
        break;
      }
      if (k == n) break;
      k *= 2;
    }
  }
  if (m <= 0) throw std::invalid_argument("compute_kl: variance fraction exceeds the computable total");

  kl.lambda = ep.values.head(m).cwiseMax(0.0);
  kl.modes = sw.cwiseInverse().asDiagonal() * ep.vectors.leftCols(m);
  kl.captured_fraction = kl.lambda.sum() / kl.trace;
  return kl;
}

std::vector<double> kl_coefficient(const KLExpansion& kl, const MeshLevel& mesh,
                                   const Eigen::Ref<const Vector>& xi) {
  if (xi.size() != kl.terms()) throw std::invalid_argument("kl_coefficient: wrong parameter dimension");
  if (kl.modes.rows() != mesh.num_nodes()) throw std::invalid_argument("kl_coefficient: mesh mismatch");
  const double sigma = std::sqrt(kl.sigma2);
  const Vector coeff = sigma * (kl.lambda.cwiseSqrt().array() * xi.array()).matrix();
  const Vector g = kl.modes * coeff;
  const int nv = mesh.vertices_per_element();
  std::vector<double> kappa(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double s = 0.0;
    for (int a = 0; a < nv; ++a) s += g[mesh.elements[e][a]];
    kappa[e] = std::exp(s / nv);
  }
  return kappa;
}

void gauss_hermite(int points, std::vector<double>& nodes, std::vector<double>& weights) {
  if (points < 1) throw std::invalid_argument("gauss_hermite: need at least one point");
  DenseMatrix J = DenseMatrix::Zero(points, points);
  for (int k = 1; k < points; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(J);
  nodes.resize(points);
  weights.resize(points);
  double total = 0.0;
  for (int k = 0; k < points; ++k) {
    nodes[k] = es.eigenvalues()[k];
    weights[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    total += weights[k];
  }
  for (double& w : weights) w /= total;
  // symmetrize against round-off
  for (int k = 0; k < points / 2; ++k) {
    const double x = 0.5 * (nodes[points - 1 - k] - nodes[k]);
    const double w = 0.5 * (weights[k] + weights[points - 1 - k]);
    nodes[k] = -x;
    nodes[points - 1 - k] = x;
    weights[k] = weights[points - 1 - k] = w;
  }
  if (points % 2 == 1) nodes[points / 2] = 0.0;
}

SampleSet sample_from_points(const KLExpansion& kl, const MeshLevel& mesh, const DenseMatrix& xi,
                             const std::vector<double>& weights) {
  if (xi.rows() != static_cast<Eigen::Index>(weights.size()) || xi.cols() != kl.terms()) {
    throw std::invalid_argument("sample_from_points: dimension mismatch");
  }
  SampleSet s;
  s.weights = weights;
  s.xi = xi;
  s.kappa.reserve(weights.size());
  for (Eigen::Index i = 0; i < xi.rows(); ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("sample weights must be positive");
    s.kappa.push_back(kl_coefficient(kl, mesh, xi.row(i).transpose()));
  }
  return s;
}

SampleSet sample_monte_carlo(const KLExpansion& kl, const MeshLevel& mesh, int count,
                             std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_monte_carlo: need at least one sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DenseMatrix xi(count, kl.terms());
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < kl.terms(); ++j) xi(i, j) = normal(rng);
  SampleSet s = sample_from_points(kl, mesh, xi, std::vector<double>(count, 1.0 / count));
  s.seed = seed;
  s.monte_carlo = true;
  return s;
}

SampleSet sample_gauss_hermite_tensor(const KLExpansion& kl, const MeshLevel& mesh,
                                      int points_per_dim, long budget) {
  const int m = kl.terms();
  std::vector<double> x, w;
  gauss_hermite(points_per_dim, x, w);
  long total = 1;
  for (int j = 0; j < m; ++j) {
    total *= points_per_dim;
    if (total > budget) {
      throw std::invalid_argument("sample_gauss_hermite_tensor: " + std::to_string(points_per_dim) +
                                  "^" + std::to_string(m) + " nodes exceed the budget");
    }
  }
  DenseMatrix xi(total, m);
  std::vector<double> weights(total);
  for (long i = 0; i < total; ++i) {
    long rem = i;
    double wt = 1.0;
    for (int j = m - 1; j >= 0; --j) {
      const int k = static_cast<int>(rem % points_per_dim);
      rem /= points_per_dim;
      xi(i, j) = x[k];
      wt *= w[k];
    }
    weights[i] = wt;
  }
  return sample_from_points(kl, mesh, xi, weights);
}

SampleSet deterministic_sample(const MeshLevel& mesh) {
  SampleSet s;
  s.weights = {1.0};
  s.xi = DenseMatrix::Zero(1, 0);
  s.kappa = {std::vector<double>(mesh.num_elements(), 1.0)};
  return s;
}

void write_samples_csv(std::ostream& os, const SampleSet& s) {
  os << "weight";
  for (Eigen::Index j = 0; j < s.xi.cols(); ++j) os << ",xi_" << (j + 1);
  os << '\n' << std::setprecision(17);
  for (int i = 0; i < s.size(); ++i) {
    os << s.weights[i];
    for (Eigen::Index j = 0; j < s.xi.cols(); ++j) os << ',' << s.xi(i, j);
    os << '\n';
  }
}

}  // namespace colmg
