#include "colmg/spectral.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace colmg;

TEST_CASE("model: node block for a single deterministic sample") {
  ModelProblem1D mp;
  mp.Nh = 7;
  mp.N = 1;
  mp.eta = {1.0};
  mp.nu = 1e-3;
  const ModelOperators op = build_model_operators(mp);
  const double d = 2.0 / (mp.h() * mp.h());
  REQUIRE(op.Btilde.rows() == 2);
  CHECK(op.Btilde(0, 0) == doctest::Approx(1.0));
  CHECK(op.Btilde(0, 1) == doctest::Approx(d));
  CHECK(op.Btilde(1, 0) == doctest::Approx(d));
  CHECK(op.Btilde(1, 1) == doctest::Approx(-1.0 / mp.nu));
}

TEST_CASE("model: reduced operator is the control-eliminated, node-major full system") {
  const ModelProblem1D mp = ModelProblem1D::with_random_eta(7, 3, 1e-2, 3);
  const int N = mp.N, nh = mp.Nh;
  const DenseMatrix F = model_full_system(mp).dense();
  // eliminate u with the Schur complement of the G block
  const int nx = 2 * N * nh + nh;
  std::vector<int> keep, elim;
  for (int q = 0; q < nx; ++q) (q >= N * nh && q < N * nh + nh ? elim : keep).push_back(q);
  DenseMatrix Kk(keep.size(), keep.size()), Kke(keep.size(), elim.size()), Kek(elim.size(), keep.size()),
      Kee(elim.size(), elim.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = 0; b < keep.size(); ++b) Kk(a, b) = F(keep[a], keep[b]);
    for (std::size_t b = 0; b < elim.size(); ++b) Kke(a, b) = F(keep[a], elim[b]);
  }
  for (std::size_t a = 0; a < elim.size(); ++a) {
    for (std::size_t b = 0; b < keep.size(); ++b) Kek(a, b) = F(elim[a], keep[b]);
    for (std::size_t b = 0; b < elim.size(); ++b) Kee(a, b) = F(elim[a], elim[b]);
  }
  const DenseMatrix schur = Kk - Kke * Kee.inverse() * Kek;
  // reorder (y_1..y_N, p_1..p_N) block-major into node-major z
  auto z_index = [&](int q) {
    const bool adj = q >= N * nh;
    const int r = adj ? q - N * nh : q;
    const int j = r / nh, i = r % nh;
    return i * 2 * N + (adj ? N : 0) + j;
  };
  DenseMatrix Sz(schur.rows(), schur.cols());
  for (int a = 0; a < schur.rows(); ++a)
    for (int b = 0; b < schur.cols(); ++b) Sz(z_index(a), z_index(b)) = schur(a, b);
  const ModelOperators op = build_model_operators(mp);
  CHECK((Sz - op.S).cwiseAbs().maxCoeff() < 1e-9 * op.S.cwiseAbs().maxCoeff());
}

TEST_CASE("model: H eigenvalues are 2 cos(j pi / (Nh + 1))") {
  ModelProblem1D mp = ModelProblem1D::with_random_eta(15, 2, 1e-2, 1);
  const ModelOperators op = build_model_operators(mp);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(op.H);
  for (int j = 1; j <= mp.Nh; ++j) {
    const double mu = 2.0 * std::cos(j * std::numbers::pi / (mp.Nh + 1));
    CHECK(es.eigenvalues()[mp.Nh - j] == doctest::Approx(mu).epsilon(1e-12));
  }
}

TEST_CASE("smoother spectrum: closed form matches the dense eigensolve") {
  for (int nh : {7, 15, 31}) {
    for (int N : {1, 2, 10}) {
      for (double nu : {1e-2, 1e-4}) {
        const ModelProblem1D mp = ModelProblem1D::with_random_eta(nh, N, nu, 100 + nh + N);
        const SpectrumReport a = smoother_spectrum_G(mp);
        const SpectrumReport o = oracle_spectrum(model_smoother_matrix(mp));
        REQUIRE(a.values.size() == o.values.size());
        CHECK(spectrum_mismatch(a.values, o.values) < 1e-8);
      }
    }
  }
  const ModelProblem1D mp = ModelProblem1D::with_random_eta(15, 4, 1e-2, 2);
  CHECK(spectrum_mismatch(smoother_spectrum_C(mp).values, oracle_spectrum(model_matrix_C(mp)).values) < 1e-10);
  CHECK(spectrum_mismatch(smoother_spectrum_G(mp, 0.6).values, oracle_spectrum(model_smoother_matrix(mp, 0.6)).values) <
        1e-8);
}

TEST_CASE("smoother spectrum: limits of the nontrivial pair") {
  ModelProblem1D big = ModelProblem1D::with_random_eta(15, 3, 1e12, 5);
  const SpectrumReport c_big = smoother_spectrum_C(big);
  CHECK(c_big.r < 1e-6);
  CHECK(std::abs(c_big.values.back() - Complex(-0.5, 0.0)) < 1e-3);
  ModelProblem1D tiny = ModelProblem1D::with_random_eta(15, 3, 1e-14, 5);
  const SpectrumReport c_tiny = smoother_spectrum_C(tiny);
  CHECK(c_tiny.r > 1.0 - 1e-6);
  CHECK(std::abs(c_tiny.values.back()) < 1e-3);
  CHECK(std::abs(c_tiny.values[c_tiny.values.size() - 2]) < 1e-3);
  // r formula
  const ModelProblem1D mp = ModelProblem1D::with_random_eta(15, 3, 1e-2, 6);
  double e = 0.0;
  for (double eta : mp.eta) {
    const double dj = 2.0 * eta / (mp.h() * mp.h());
    e += 1.0 / (dj * dj) / mp.N;
  }
  CHECK(model_r(mp) == doctest::Approx(e / (mp.nu + e)));
}

TEST_CASE("two-level spectrum: closed form matches the dense eigensolve") {
  const ModelProblem1D mp = ModelProblem1D::with_random_eta(31, 10, 1e-2, 7);
  for (auto [n1, n2] : {std::pair{1, 0}, std::pair{1, 1}, std::pair{2, 2}, std::pair{0, 1}}) {
    const SpectrumReport a = two_level_spectrum_analytic(mp, n1, n2);
    const SpectrumReport o = oracle_spectrum(model_two_level_matrix(mp, n1, n2));
    REQUIRE(a.values.size() == o.values.size());
    CHECK(spectrum_mismatch(a.values, o.values) < 1e-8);
    CHECK(a.max_modulus() < 1.0);
    CHECK(a.max_modulus() == doctest::Approx(o.max_modulus()).epsilon(1e-8));
  }
  const SpectrumReport damped = two_level_spectrum_analytic(mp, 2, 2, 0.5);
  CHECK(spectrum_mismatch(damped.values, oracle_spectrum(model_two_level_matrix(mp, 2, 2, 0.5)).values) < 1e-8);
  CHECK_THROWS_AS(two_level_spectrum_analytic(mp, 0, 0), std::invalid_argument);
}

TEST_CASE("two-level spectrum: single sample has only the pair per frequency") {
  const ModelProblem1D mp = ModelProblem1D::with_random_eta(15, 1, 1e-2, 8);
  const SpectrumReport a = two_level_spectrum_analytic(mp, 1, 1);
  const SpectrumReport o = oracle_spectrum(model_two_level_matrix(mp, 1, 1));
  CHECK(a.values.size() == static_cast<std::size_t>(2 * mp.Nh));
  CHECK(spectrum_mismatch(a.values, o.values) < 1e-8);
  CHECK(a.max_modulus() < 1.0);
}

TEST_CASE("two-level spectrum: coarse-grid correction kernel shows up as zero eigenvalues") {
  // I - P Sc^-1 R S vanishes on the range of P, so T = (I - P Sc^-1 R S) G has a kernel of
  // dimension at least 2N (Nh - 1) / 2 and the closed form must carry as many zeros
  const ModelProblem1D mp = ModelProblem1D::with_random_eta(7, 2, 1e-2, 9);
  const DenseMatrix T = model_two_level_matrix(mp, 1, 0);
  const SpectrumReport a = two_level_spectrum_analytic(mp, 1, 0);
  int zeros = 0;
  for (const Complex& v : a.values) zeros += std::abs(v) < 1e-10;
  Eigen::FullPivLU<DenseMatrix> lu(T);
  lu.setThreshold(1e-10);
  const int geometric = static_cast<int>(T.rows() - lu.rank());
  CHECK(geometric >= 2 * mp.N * (mp.Nh - 1) / 2);
  CHECK(zeros >= geometric);
}

TEST_CASE("spectrum mismatch: matching is order independent") {
  std::vector<Complex> a{{1, 0}, {0.5, 0.2}, {0.5, -0.2}, {-0.1, 0}};
  std::vector<Complex> b{{-0.1, 0}, {0.5, -0.2}, {1, 0}, {0.5, 0.2}};
  CHECK(spectrum_mismatch(a, b) < 1e-15);
  b[0] = {-0.1, 1e-3};
  CHECK(spectrum_mismatch(a, b) == doctest::Approx(1e-3));
  std::ostringstream os;
  SpectrumReport s;
  s.source = "analytic";
  s.values = a;
  write_spectrum_csv(os, s);
  CHECK(os.str().rfind("re,im,source\n", 0) == 0);
}

TEST_CASE("model validation") {
  ModelProblem1D mp;
  mp.Nh = 8;
  mp.N = 2;
  mp.eta = {1.0, 1.0};
  CHECK_THROWS_AS(mp.validate(), std::invalid_argument);
  mp.Nh = 7;
  mp.eta = {1.0, -1.0};
  CHECK_THROWS_AS(mp.validate(), std::invalid_argument);
}
