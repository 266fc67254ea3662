#include "qelm/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qelm {

namespace {

struct LanczosBasis {
  Eigen::MatrixXcd vectors;  // n x m, orthonormal columns
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;      // beta(j) couples j and j+1; beta(m-1) is the residual norm
  bool invariant = false;    // the space is H-invariant, projection is exact
};

/// exp(tau * T) e_1 for the leading (m x m) tridiagonal block.
Eigen::VectorXcd small_expm_e1(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, Eigen::Index m, cplx tau) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    t(j, j) = alpha(j);
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta(j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
  Eigen::VectorXcd d(m);
  for (Eigen::Index k = 0; k < m; ++k) d(k) = std::exp(tau * eig.eigenvalues()(k)) * eig.eigenvectors()(0, k);
  return eig.eigenvectors() * d;
}

/// Stops early once the error estimate for the whole `tau` is below `tol`.
LanczosBasis build_basis(const LinearMap& apply_h, const DenseTensor& start, int max_dim, cplx tau, double tol,
                         int& matvecs) {
  const auto n = static_cast<Eigen::Index>(start.size());
  const Eigen::Index m_max = std::min<Eigen::Index>(max_dim, n);
  LanczosBasis b;
  b.vectors.resize(n, m_max);
  b.alpha.resize(m_max);
  b.beta.resize(m_max);
  b.vectors.col(0) = start.as_vector() / start.norm();

  DenseTensor work(start.shape());
  double scale = 0.0;
  Eigen::Index m = 0;
  for (Eigen::Index j = 0; j < m_max; ++j) {
    work.as_vector() = b.vectors.col(j);
    DenseTensor hv = apply_h(work);
    ++matvecs;
    if (hv.size() != start.size()) throw std::invalid_argument("krylov_expm_apply: map changed vector size");
    Eigen::VectorXcd w = hv.as_vector();
    b.alpha(j) = b.vectors.col(j).dot(w).real();
    w -= b.alpha(j) * b.vectors.col(j);
    if (j > 0) w -= b.beta(j - 1) * b.vectors.col(j - 1);
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd overlaps = b.vectors.leftCols(j + 1).adjoint() * w;
      w -= b.vectors.leftCols(j + 1) * overlaps;
    }
    b.beta(j) = w.norm();
    scale = std::max({scale, std::abs(b.alpha(j)), b.beta(j)});
    m = j + 1;
    if (b.beta(j) <= 1e-13 * std::max(scale, 1e-300) || scale == 0.0) {
      b.invariant = true;
      b.beta(j) = 0.0;
      break;
    }
    if (j + 1 < m_max) {
      if (j >= 2 && b.beta(j) * std::abs(small_expm_e1(b.alpha, b.beta, j + 1, tau)(j)) <= tol) break;
      b.vectors.col(j + 1) = w / b.beta(j);
    }
  }
  if (m == n) b.invariant = true;
  b.vectors.conservativeResize(n, m);
  b.alpha.conservativeResize(m);
  b.beta.conservativeResize(m);
  return b;
}

}  // namespace

KrylovResult krylov_expm_apply(const LinearMap& apply_h, const DenseTensor& v, cplx prefactor,
                               const KrylovOptions& options) {
  if (options.krylov_dim < 1) throw std::invalid_argument("krylov_expm_apply: krylov_dim must be >= 1");
  const double v_norm = v.norm();
  if (v.size() == 0 || v_norm == 0.0) throw std::invalid_argument("krylov_expm_apply: zero input vector");

  KrylovResult res;
  res.state = v;
  double remaining = 1.0;
  while (remaining > 0.0) {
    const double beta0 = res.state.norm();
    const LanczosBasis basis =
        build_basis(apply_h, res.state, options.krylov_dim, remaining * prefactor, options.tol * remaining, res.matvecs);
    const auto m = basis.alpha.size();

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      t(j, j) = basis.alpha(j);
      if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = basis.beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Eigen::MatrixXd& q = eig.eigenvectors();
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const Eigen::VectorXd q_first = q.row(0).transpose();

    const bool budget_left = res.substeps + 1 < options.max_substeps;
    double frac = remaining;
    Eigen::VectorXcd y;
    double err = 0.0;
    for (;;) {
      Eigen::VectorXcd d(m);
      for (Eigen::Index k = 0; k < m; ++k) d(k) = std::exp(frac * prefactor * lambda(k)) * q_first(k);
      y = q * d;
      err = basis.invariant ? 0.0 : basis.beta(m - 1) * std::abs(y(m - 1));
      if (err <= options.tol * frac || !budget_left || frac < 1e-12) break;
      // Re-evaluating y is O(m^2) and needs no matvecs, so a fine search keeps substeps long.
      frac *= 0.8;
    }
    if (err > options.tol * frac) res.converged = false;
    res.error_estimate += err;
    res.state.as_vector() = beta0 * (basis.vectors * y);
    remaining = (frac >= remaining) ? 0.0 : remaining - frac;
    ++res.substeps;
  }
  return res;
}

}  // namespace qelm
