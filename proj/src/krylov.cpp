#include "colmg/krylov.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace colmg {

void KrylovConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("gmres: tol must be positive");
  if (maxit < 1) throw std::invalid_argument("gmres: maxit must be at least 1");
  if (restart < 0) throw std::invalid_argument("gmres: restart must be nonnegative");
}

namespace {

void givens(double a, double b, double& c, double& s) {
  if (b == 0.0) {
    c = 1.0;
    s = 0.0;
  } else if (std::abs(b) > std::abs(a)) {
    const double t = a / b;
    s = 1.0 / std::sqrt(1.0 + t * t);
    c = s * t;
  } else {
    const double t = b / a;
    c = 1.0 / std::sqrt(1.0 + t * t);
    s = c * t;
  }
}

}  // namespace

Vector gmres(const LinearOperator& op, const LinearOperator& pc, const Vector& b, const KrylovConfig& cfg,
             SolveReport& report, GmresInfo* info) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  report = SolveReport{};
  report.method = "gmres";
  const Eigen::Index n = b.size();
  Vector x = Vector::Zero(n);
  const double bn = b.norm();
  if (bn == 0.0) {
    report.converged = true;
    report.residuals = {0.0};
    return x;
  }
  const int m_max = cfg.restart > 0 ? cfg.restart : cfg.maxit;
  Vector r = b;
  double beta = bn;
  report.residuals.push_back(1.0);
  Vector w, z, az;
  double drift = 0.0;

  while (report.iterations < cfg.maxit) {
    const int m = std::min(m_max, cfg.maxit - report.iterations);
    std::vector<Vector> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    DenseMatrix H = DenseMatrix::Zero(m + 1, m);
    Vector cs = Vector::Zero(m), sn = Vector::Zero(m);
    Vector g = Vector::Zero(m + 1);
    g[0] = beta;
    int k = 0;
    bool done = false;
    for (; k < m; ++k) {
      pc(V[k], z);
      op(z, w);
      // modified Gram-Schmidt with one reorthogonalization pass
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= k; ++i) {
          const double hij = V[i].dot(w);
          H(i, k) += hij;
          w.noalias() -= hij * V[i];
        }
      }
      const double hn = w.norm();
      H(k + 1, k) = hn;
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      givens(H(k, k), H(k + 1, k), cs[k], sn[k]);
      H(k, k) = cs[k] * H(k, k) + sn[k] * H(k + 1, k);
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++report.iterations;
      const double est = std::abs(g[k + 1]) / bn;
      report.residuals.push_back(est);
      const bool breakdown = hn <= 1e-14 * beta;
      if (!breakdown) V.push_back(w / hn);
      if (cfg.record_orthogonality && !breakdown) {
        for (std::size_t i = 0; i < V.size(); ++i)
          for (std::size_t j = 0; j <= i; ++j)
            drift = std::max(drift, std::abs(V[i].dot(V[j]) - (i == j ? 1.0 : 0.0)));
      }
      if (est <= cfg.tol || breakdown) {
        ++k;
        done = true;
        break;
      }
    }
    // x += M^-1 V y with H y = g; the preconditioner is linear, so it is
    // applied once to the combined vector instead of storing M^-1 V
    const Vector y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Vector vy = Vector::Zero(n);
    for (int i = 0; i < k; ++i) vy.noalias() += y[i] * V[i];
    pc(vy, z);
    x += z;
    op(x, w);
    r = b - w;
    beta = r.norm();
    const double rel = beta / bn;
    report.residuals.back() = rel;
    if (rel <= cfg.tol) {
      report.converged = true;
      break;
    }
    if (done && !(rel <= cfg.tol)) {
      // recurrence and true residual disagree; continue with a fresh cycle
      if (beta == 0.0 || !std::isfinite(beta)) break;
    }
  }
  report.final_residual = report.residuals.back();
  if (report.residuals.size() >= 6 && report.residuals[report.residuals.size() - 6] > 0.0) {
    report.convergence_factor = observed_convergence_factor(report);
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (info) info->orthogonality_drift = drift;
  return x;
}

LinearOperator identity_operator() {
  return [](const Vector& in, Vector& out) { out = in; };
}

LinearOperator matrix_operator(const DenseMatrix& m) {
  return [m](const Vector& in, Vector& out) { out.noalias() = m * in; };
}

LinearOperator system_operator(const BlockSaddleSystem& sys) {
  return [&sys](const Vector& in, Vector& out) { sys.apply(in, out); };
}

LinearOperator vcycle_preconditioner(const Multigrid& mg) {
  return [&mg](const Vector& in, Vector& out) { out = mg.precondition(in); };
}

}  // namespace colmg
