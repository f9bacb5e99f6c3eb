#include "colmg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace colmg {

int ModelProblem1D::level() const {
  int l = 0;
  while ((1 << l) < Nh + 1) ++l;
  return l;
}

void ModelProblem1D::validate() const {
  if (Nh < 1 || ((Nh + 1) & Nh) != 0) throw std::invalid_argument("model problem: Nh + 1 must be a power of two");
  if (N < 1) throw std::invalid_argument("model problem: need at least one sample");
  if (static_cast<int>(eta.size()) != N) throw std::invalid_argument("model problem: need one eta per sample");
  for (double e : eta)
    if (!(e > 0.0)) throw std::invalid_argument("model problem: eta must be positive");
  if (!(nu > 0.0)) throw std::invalid_argument("model problem: nu must be positive");
}

ModelProblem1D ModelProblem1D::with_random_eta(int Nh, int N, double nu, std::uint64_t seed) {
  ModelProblem1D mp;
  mp.Nh = Nh;
  mp.N = N;
  mp.nu = nu;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int j = 0; j < N; ++j) mp.eta.push_back(std::exp(normal(rng)));
  mp.validate();
  return mp;
}

namespace {

DenseMatrix laplacian_fd(int n, double h) {
  DenseMatrix A = DenseMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2.0 / (h * h);
    if (i > 0) A(i, i - 1) = -1.0 / (h * h);
    if (i + 1 < n) A(i, i + 1) = -1.0 / (h * h);
  }
  return A;
}

DenseMatrix kron_identity(const DenseMatrix& a, int m) {
  DenseMatrix out = DenseMatrix::Zero(a.rows() * m, a.cols() * m);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0) out.block(i * m, j * m, m, m).diagonal().setConstant(a(i, j));
  return out;
}

}  // namespace

ModelOperators build_model_operators(const ModelProblem1D& mp) {
  mp.validate();
  const int N = mp.N;
  const int n2 = 2 * N;
  const double h = mp.h();
  ModelOperators op;
  op.Btilde = DenseMatrix::Zero(n2, n2);
  op.B = DenseMatrix::Zero(n2, n2);
  for (int j = 0; j < N; ++j) {
    const double d = 2.0 * mp.eta[j] / (h * h * N);
    op.Btilde(j, j) = 1.0 / N;
    op.Btilde(j, N + j) = d;
    op.Btilde(N + j, j) = d;
    op.B(j, N + j) = -0.5 * d;
    op.B(N + j, j) = -0.5 * d;
  }
  op.Btilde.bottomRightCorner(N, N).setConstant(-1.0 / (mp.nu * N * N));
  op.H = DenseMatrix::Zero(mp.Nh, mp.Nh);
  for (int i = 0; i + 1 < mp.Nh; ++i) op.H(i, i + 1) = op.H(i + 1, i) = 1.0;
  const int n = n2 * mp.Nh;
  op.S = DenseMatrix::Zero(n, n);
  for (int i = 0; i < mp.Nh; ++i) {
    op.S.block(i * n2, i * n2, n2, n2) = op.Btilde;
    if (i + 1 < mp.Nh) {
      op.S.block(i * n2, (i + 1) * n2, n2, n2) = op.B;
      op.S.block((i + 1) * n2, i * n2, n2, n2) = op.B;
    }
  }
  return op;
}

BlockSaddleSystem model_full_system(const ModelProblem1D& mp) {
  mp.validate();
  const int N = mp.N;
  const int nh = mp.Nh;
  auto I = std::make_shared<const SparseMatrix>(sparse_identity(nh));
  const SparseMatrix A = laplacian_fd(nh, mp.h()).sparseView();
  auto Ap = std::make_shared<const SparseMatrix>(A);
  BlockSaddleSystem s;
  s.level = mp.level();
  s.layout = {N, nh, nh};
  s.weights.assign(N, 1.0 / N);
  s.G = Block(I, mp.nu);
  for (int j = 0; j < N; ++j) {
    s.C.emplace_back(I, 1.0 / N);
    s.A.emplace_back(Ap, mp.eta[j] / N);
    s.D.emplace_back(I, -1.0 / N);
    s.E.emplace_back(I, -1.0 / N);
  }
  s.control_to_state.resize(nh);
  std::iota(s.control_to_state.begin(), s.control_to_state.end(), 0);
  s.state_to_control = s.control_to_state;
  s.validate();
  return s;
}

TransferOperator model_transfer(const ModelProblem1D& mp) {
  mp.validate();
  if (mp.Nh < 3) throw std::invalid_argument("model_transfer: no coarser grid below Nh = 1");
  const int nf = mp.Nh;
  const int nc = (mp.Nh - 1) / 2;
  std::vector<Triplet> t;
  for (int c = 0; c < nc; ++c) {
    t.emplace_back(2 * c, c, 0.5);
    t.emplace_back(2 * c + 1, c, 1.0);
    t.emplace_back(2 * c + 2, c, 0.5);
  }
  TransferOperator tr;
  tr.level = mp.level();
  tr.P = from_triplets(nf, nc, t);
  tr.R = SparseMatrix(0.5 * SparseMatrix(tr.P.transpose()));
  tr.P_u = tr.P;
  tr.R_u = tr.R;
  return tr;
}

double SpectrumReport::max_modulus() const {
  double m = 0.0;
  for (const Complex& v : values) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// Single-linkage clusters of points within `radius`; returns a cluster id per point.
std::vector<int> cluster(const std::vector<Complex>& v, double radius) {
  const int n = static_cast<int>(v.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a].real() < v[b].real(); });
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int i = order[a];
      const int j = order[b];
      if (v[j].real() - v[i].real() > radius) break;
      if (std::abs(v[i] - v[j]) <= radius) parent[find(i)] = find(j);
    }
  }
  std::vector<int> id(n);
  for (int i = 0; i < n; ++i) id[i] = find(i);
  return id;
}

std::vector<Complex> cluster_means(const std::vector<Complex>& v, double radius) {
  const auto id = cluster(v, radius);
  const int n = static_cast<int>(v.size());
  std::vector<Complex> sum(n, Complex(0.0, 0.0));
  std::vector<int> count(n, 0);
  for (int i = 0; i < n; ++i) {
    sum[id[i]] += v[i];
    ++count[id[i]];
  }
  std::vector<Complex> out(n);
  for (int i = 0; i < n; ++i) out[i] = sum[id[i]] / static_cast<double>(count[id[i]]);
  return out;
}

}  // namespace

std::vector<std::pair<Complex, int>> SpectrumReport::multiplicities(double radius) const {
  const auto id = cluster(values, radius);
  std::vector<std::pair<Complex, int>> out;
  std::vector<int> slot(values.size(), -1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (slot[id[i]] < 0) {
      slot[id[i]] = static_cast<int>(out.size());
      out.emplace_back(Complex(0.0, 0.0), 0);
    }
    auto& e = out[slot[id[i]]];
    e.first += values[i];
    ++e.second;
  }
  for (auto& e : out) e.first /= static_cast<double>(e.second);
  return out;
}

double model_r(const ModelProblem1D& mp) {
  mp.validate();
  const double h2 = mp.h() * mp.h();
  double e = 0.0;
  for (double eta : mp.eta) {
    const double d = 2.0 * eta / h2;
    e += 1.0 / (d * d);
  }
  e /= mp.N;
  return e / (mp.nu + e);
}

SpectrumReport smoother_spectrum_C(const ModelProblem1D& mp) {
  SpectrumReport s;
  s.source = "analytic";
  s.r = model_r(mp);
  const double r = s.r;
  for (int k = 0; k < 2 * mp.N - 2; ++k) s.values.emplace_back(-0.5, 0.0);
  const double im = std::sqrt(std::max(0.0, (1.0 - r) * r));
  s.values.emplace_back(-0.5 * (1.0 - r), -0.5 * im);
  s.values.emplace_back(-0.5 * (1.0 - r), 0.5 * im);
  return s;
}

SpectrumReport smoother_spectrum_G(const ModelProblem1D& mp, double theta) {
  const SpectrumReport c = smoother_spectrum_C(mp);
  SpectrumReport s;
  s.source = "analytic";
  s.r = c.r;
  for (int j = 1; j <= mp.Nh; ++j) {
    const double mu = 2.0 * std::cos(j * std::numbers::pi / (mp.Nh + 1));
    for (const Complex& lam : c.values) s.values.push_back(1.0 - theta + theta * (-mu * lam));
  }
  return s;
}

SpectrumReport two_level_spectrum_analytic(const ModelProblem1D& mp, int n1, int n2, double theta) {
  if (n1 < 0 || n2 < 0 || n1 + n2 < 1) throw std::invalid_argument("two-level spectrum: need n1 + n2 >= 1");
  const SpectrumReport c = smoother_spectrum_C(mp);
  const int n = n1 + n2;
  const int half = (mp.Nh + 1) / 2;
  const double pi = std::numbers::pi;
  SpectrumReport s;
  s.source = "analytic";
  s.r = c.r;
  for (int j = 1; j < half; ++j) {
    const double mu = 2.0 * std::cos(j * pi / (mp.Nh + 1));
    const double cj = std::cos(j * pi / (2.0 * (mp.Nh + 1)));
    const double sj = std::sin(j * pi / (2.0 * (mp.Nh + 1)));
    const double c4 = std::pow(cj, 4);
    const double s4 = std::pow(sj, 4);
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      const Complex lam = c.values[i];
      const Complex dj = -mu * lam;  // mu_jhat = -mu_j
      const Complex djh = mu * lam;
      const Complex pj = std::pow(1.0 - theta + theta * dj, n);
      const Complex pjh = std::pow(1.0 - theta + theta * djh, n);
      const Complex den = c4 * (1.0 - dj) + s4 * (1.0 - djh);
      if (std::abs(den) == 0.0) {
        throw std::domain_error("two-level spectrum: zero denominator at j = " + std::to_string(j) +
                                ", i = " + std::to_string(i + 1));
      }
      s.values.push_back((c4 * (1.0 - dj) * pjh + s4 * (1.0 - djh) * pj) / den);
    }
  }
  // mode j = (Nh+1)/2 is invisible on the coarse grid and only sees the smoother
  const double mid = std::pow(1.0 - theta, n);
  for (int k = 0; k < 2 * mp.N; ++k) s.values.emplace_back(mid, 0.0);
  const long zeros = static_cast<long>(mp.N) * (mp.Nh - 1);
  for (long k = 0; k < zeros; ++k) s.values.emplace_back(0.0, 0.0);
  return s;
}

DenseMatrix model_matrix_C(const ModelProblem1D& mp) {
  const ModelOperators op = build_model_operators(mp);
  return op.Btilde.partialPivLu().solve(op.B);
}

DenseMatrix model_smoother_matrix(const ModelProblem1D& mp, double theta) {
  const ModelOperators op = build_model_operators(mp);
  const int m = 2 * mp.N;
  const DenseMatrix Binv = op.Btilde.inverse();
  DenseMatrix G = DenseMatrix::Identity(op.S.rows(), op.S.cols());
  for (int i = 0; i < mp.Nh; ++i) G.middleRows(i * m, m) -= theta * Binv * op.S.middleRows(i * m, m);
  return G;
}

DenseMatrix model_two_level_matrix(const ModelProblem1D& mp, int n1, int n2, double theta) {
  if (n1 < 0 || n2 < 0 || n1 + n2 < 1) throw std::invalid_argument("two-level matrix: need n1 + n2 >= 1");
  const ModelOperators op = build_model_operators(mp);
  const TransferOperator t = model_transfer(mp);
  const int m = 2 * mp.N;
  const DenseMatrix R = kron_identity(DenseMatrix(t.R), m);
  const DenseMatrix P = kron_identity(DenseMatrix(t.P), m);
  const DenseMatrix Sc = R * op.S * P;
  const DenseMatrix cgc = DenseMatrix::Identity(op.S.rows(), op.S.cols()) - P * Sc.partialPivLu().solve(R * op.S);
  const DenseMatrix G = model_smoother_matrix(mp, theta);
  DenseMatrix T = cgc;
  for (int k = 0; k < n1; ++k) T = T * G;
  for (int k = 0; k < n2; ++k) T = G * T;
  return T;
}

SpectrumReport oracle_spectrum(const DenseMatrix& m) {
  Eigen::EigenSolver<DenseMatrix> es(m, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("oracle_spectrum: eigensolver failed");
  SpectrumReport s;
  s.source = "oracle";
  const auto ev = es.eigenvalues();
  s.values.assign(ev.data(), ev.data() + ev.size());
  return s;
}

double spectrum_mismatch(const std::vector<Complex>& a, const std::vector<Complex>& b, double radius) {
  if (a.size() != b.size()) throw std::invalid_argument("spectrum_mismatch: multisets differ in size");
  const auto ca = cluster_means(a, radius);
  const auto cb = cluster_means(b, radius);
  const std::size_t n = ca.size();
  struct Pair {
    double dist;
    int i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      pairs.push_back({std::abs(ca[i] - cb[j]), static_cast<int>(i), static_cast<int>(j)});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.dist < y.dist; });
  std::vector<char> used_a(n, 0), used_b(n, 0);
  double worst = 0.0;
  std::size_t matched = 0;
  for (const Pair& p : pairs) {
    if (used_a[p.i] || used_b[p.j]) continue;
    used_a[p.i] = used_b[p.j] = 1;
    worst = std::max(worst, p.dist);
    if (++matched == n) break;
  }
  return worst;
}

void write_spectrum_csv(std::ostream& os, const SpectrumReport& s, bool header) {
  if (header) os << "re,im,source\n";
  os << std::setprecision(17);
  for (const Complex& v : s.values) os << v.real() << ',' << v.imag() << ',' << s.source << '\n';
}

}  // namespace colmg
