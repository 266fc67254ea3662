#include "qelm/exact.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qelm {

namespace {

void check_size(std::size_t n) {
  if (n < 1 || n > kMaxDenseQubits) {
    throw std::invalid_argument("dense oracle supports 1.." + std::to_string(kMaxDenseQubits) + " qubits, got " +
                                std::to_string(n));
  }
}

Eigen::MatrixXcd embed(const Eigen::Matrix2cd& op, std::size_t site, std::size_t n) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Matrix2cd f = (i == site) ? op : Eigen::Matrix2cd::Identity();
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index c = 0; c < out.cols(); ++c) next.block(r * 2, c * 2, 2, 2) = out(r, c) * f;
    }
    out = std::move(next);
  }
  return out;
}

/// Z eigenvalue of `site` in basis index `idx`.
double z_sign(std::size_t idx, std::size_t site, std::size_t n) { return ((idx >> (n - 1 - site)) & 1U) ? -1.0 : 1.0; }

}  // namespace

DenseState DenseState::all_up(std::size_t n) {
  check_size(n);
  DenseState s{n, Eigen::VectorXcd::Zero(Eigen::Index{1} << n)};
  s.amplitudes(0) = 1.0;
  return s;
}

Eigen::MatrixXcd dense_hamiltonian(const ChainSpec& spec, const InteractionTable& table) {
  spec.validate();
  check_size(spec.n);
  const std::size_t n = spec.n;
  const cplx i{0.0, 1.0};
  Eigen::Matrix2cd x, y, z;
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  z << 1, 0, 0, -1;
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);

  std::vector<Eigen::MatrixXcd> zs;
  for (std::size_t j = 0; j < n; ++j) zs.push_back(embed(z, j, n));

  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t j = 0; j < n; ++j) {
    h += 0.5 * spec.omega * (std::cos(spec.phi) * embed(x, j, n) - std::sin(spec.phi) * embed(y, j, n));
    h -= 0.5 * spec.detunings[j] * (id + zs[j]);
  }
  for (const auto& p : table.pairs) {
    h += 0.25 * p.v * (id + zs[p.j] + zs[p.k] + zs[p.j] * zs[p.k]);
  }
  return h;
}

DensePropagator::DensePropagator(const Eigen::MatrixXcd& h) {
  if (!h.isApprox(h.adjoint(), 1e-12)) throw std::invalid_argument("DensePropagator: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  vectors_ = eig.eigenvectors();
  values_ = eig.eigenvalues();
}

Eigen::VectorXcd DensePropagator::apply(const Eigen::VectorXcd& psi, double t) const {
  Eigen::VectorXcd coeff = vectors_.adjoint() * psi;
  for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::exp(cplx{0.0, -values_(k) * t});
  return vectors_ * coeff;
}

DenseState dense_evolve(const DenseState& state, const Eigen::MatrixXcd& h, double t) {
  check_size(state.n);
  if (h.rows() != state.amplitudes.size()) throw std::invalid_argument("dense_evolve: dimension mismatch");
  return {state.n, DensePropagator(h).apply(state.amplitudes, t)};
}

double dense_bipartite_entropy(const Eigen::VectorXcd& psi, std::size_t n, std::size_t cut) {
  if (cut == 0 || cut >= n) return 0.0;
  const Eigen::Index left = Eigen::Index{1} << cut;
  const Eigen::Index right = Eigen::Index{1} << (n - cut);
  // Row-major reshape: index = l * right + r.
  const Eigen::Map<const MatrixXcdR> m(psi.data(), left, right);
  const Eigen::MatrixXcd rho = m * m.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho, Eigen::EigenvaluesOnly);
  const double norm = rho.trace().real();
  double s = 0.0;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    const double p = eig.eigenvalues()(k) / norm;
    if (p > 1e-300) s -= p * std::log(p);
  }
  return std::max(s, 0.0);
}

DenseObservables dense_observables(const DenseState& state) {
  check_size(state.n);
  const std::size_t n = state.n;
  const Eigen::VectorXcd& psi = state.amplitudes;
  const double norm = psi.squaredNorm();
  DenseObservables obs;
  obs.z.assign(n, 0.0);
  obs.zz.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t idx = 0; idx < static_cast<std::size_t>(psi.size()); ++idx) {
    const double p = std::norm(psi(static_cast<Eigen::Index>(idx))) / norm;
    if (p == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double zi = z_sign(idx, i, n);
      obs.z[i] += p * zi;
      for (std::size_t j = 0; j < n; ++j) obs.zz[i][j] += p * zi * z_sign(idx, j, n);
    }
  }
  obs.half_chain_entropy = dense_bipartite_entropy(psi, n, n / 2);
  return obs;
}

}  // namespace qelm
