#pragma once

#include <cstddef>
#include <vector>

#include "qelm/rydberg.hpp"

namespace qelm {

inline constexpr std::size_t kMaxDenseQubits = 12;

/// Statevector reference. Amplitude index bit (n-1-i) holds site i, so site 0
/// is the most significant bit; bit value 0 = up (Z = +1). This matches
/// `to_statevector` for MPS.
struct DenseState {
  std::size_t n = 0;
  Eigen::VectorXcd amplitudes;

  static DenseState all_up(std::size_t n);
};

/// Direct Kronecker-product sum of the Pauli strings, identity terms included.
Eigen::MatrixXcd dense_hamiltonian(const ChainSpec& spec, const InteractionTable& table);

/// Eigendecomposition of a Hermitian matrix, reusable across many times.
class DensePropagator {
 public:
  explicit DensePropagator(const Eigen::MatrixXcd& h);
  /// exp(-i H t) psi
  Eigen::VectorXcd apply(const Eigen::VectorXcd& psi, double t) const;

 private:
  Eigen::MatrixXcd vectors_;
  Eigen::VectorXd values_;
};

DenseState dense_evolve(const DenseState& state, const Eigen::MatrixXcd& h, double t);

struct DenseObservables {
  std::vector<double> z;                 // <Z_i>
  std::vector<std::vector<double>> zz;   // symmetric, diagonal = 1
  double half_chain_entropy = 0.0;       // cut after site n/2 - 1, natural log
};

DenseObservables dense_observables(const DenseState& state);

/// Von Neumann entropy of sites [0, cut) against the rest.
double dense_bipartite_entropy(const Eigen::VectorXcd& psi, std::size_t n, std::size_t cut);

}  // namespace qelm
