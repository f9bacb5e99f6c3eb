#pragma once

#include "colmg/fem.hpp"
#include "colmg/saddle.hpp"
#include "colmg/sparse.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace colmg {

/// 1D finite-difference model: eta_j * (-y'') = f + u on (0,1), N samples with
/// equal weights, Nh interior points.
struct ModelProblem1D {
  int Nh = 31;
  int N = 10;
  std::vector<double> eta;
  double nu = 1e-2;

  double h() const { return 1.0 / (Nh + 1); }
  int level() const;
  void validate() const;
  /// eta_j = exp(xi_j) with xi_j standard normal from `seed`.
  static ModelProblem1D with_random_eta(int Nh, int N, double nu, std::uint64_t seed);
};

/// Reduced model operators in the node-major ordering z: per node the 2N
/// values (y_1..y_N, p_1..p_N).
struct ModelOperators {
  DenseMatrix Btilde;  // 2N x 2N
  DenseMatrix B;       // 2N x 2N
  DenseMatrix H;       // Nh x Nh
  DenseMatrix S;       // 2N Nh square
};

ModelOperators build_model_operators(const ModelProblem1D& mp);

/// The full (2N+1)-block system of the model, symmetrized by the sample weight.
BlockSaddleSystem model_full_system(const ModelProblem1D& mp);
/// Scalar 1D transfers between Nh and (Nh-1)/2 interior points.
TransferOperator model_transfer(const ModelProblem1D& mp);

using Complex = std::complex<double>;

struct SpectrumReport {
  std::string source;  // "analytic" or "oracle"
  std::vector<Complex> values;  // repeated according to algebraic multiplicity
  double r = 0.0;
  double max_modulus() const;
  /// distinct values (clustered within `radius`) with their multiplicities
  std::vector<std::pair<Complex, int>> multiplicities(double radius = 1e-6) const;
};

/// r = E[d^-2] / (nu + E[d^-2]) with d_j = 2 eta_j / h^2.
double model_r(const ModelProblem1D& mp);

SpectrumReport smoother_spectrum_C(const ModelProblem1D& mp);
/// Spectrum of the damped smoother (1 - theta) I + theta G.
SpectrumReport smoother_spectrum_G(const ModelProblem1D& mp, double theta = 1.0);
/// Spectrum of G^n2 (I - P S_c^-1 R S) G^n1 with damping theta in G.
SpectrumReport two_level_spectrum_analytic(const ModelProblem1D& mp, int n1, int n2, double theta = 1.0);

DenseMatrix model_matrix_C(const ModelProblem1D& mp);
DenseMatrix model_smoother_matrix(const ModelProblem1D& mp, double theta = 1.0);
DenseMatrix model_two_level_matrix(const ModelProblem1D& mp, int n1, int n2, double theta = 1.0);

/// Dense eigenvalues of a real matrix.
SpectrumReport oracle_spectrum(const DenseMatrix& m);

/// Largest distance between matched eigenvalues. Values within `radius` of
/// each other are first replaced by their cluster mean (defective eigenvalues
/// split by about sqrt(eps) in floating point), then pairs are matched
/// greedily by increasing distance.
double spectrum_mismatch(const std::vector<Complex>& a, const std::vector<Complex>& b,
                         double radius = 1e-6);

/// CSV rows "re,im,source".
void write_spectrum_csv(std::ostream& os, const SpectrumReport& s, bool header = true);

}  // namespace colmg
