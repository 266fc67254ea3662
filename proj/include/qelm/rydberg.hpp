#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

#include "qelm/tensor.hpp"

namespace qelm {

/// Van der Waals coefficient in rad/us * um^6.
inline constexpr double kRydbergC6 = 862690.0 * 2.0 * std::numbers::pi;

/// A 1D equally spaced Rydberg chain. Frequencies are angular (rad/us),
/// times are in us, distances in um.
struct ChainSpec {
  std::size_t n = 1;
  double omega = 2.0 * std::numbers::pi;
  double phi = 0.0;
  double spacing_um = 11.0;
  std::vector<double> detunings = std::vector<double>(1, 0.0);
  double c6 = kRydbergC6;
  double v_threshold = 1e-4;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  /// Homogeneous chain with zero detunings.
  static ChainSpec uniform(std::size_t n, double omega, double spacing_um);
};

struct Interaction {
  std::size_t j;
  std::size_t k;  // j < k, 0-based
  double v;       // rad/us
};

/// Pairs with V_jk = C / (d |j-k|)^6 >= v_threshold, ordered by j then k.
struct InteractionTable {
  std::vector<Interaction> pairs;

  std::size_t max_separation() const;
  std::vector<std::pair<std::size_t, std::size_t>> index_pairs() const;
};

/// Rank-4 site tensors (left bond, physical out, physical in, right bond).
class MpoOperator {
 public:
  MpoOperator() = default;
  explicit MpoOperator(std::vector<DenseTensor> sites);

  std::size_t size() const { return sites_.size(); }
  const DenseTensor& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<DenseTensor>& sites() const { return sites_; }
  std::vector<std::size_t> bond_dims() const;

 private:
  std::vector<DenseTensor> sites_;
};

double interaction_strength(const ChainSpec& spec, std::size_t separation);

InteractionTable build_interactions(const ChainSpec& spec);

/// H = sum_j (omega/2)(cos(phi) X_j - sin(phi) Y_j) - sum_j delta_j n_j + sum_{(j,k)} V_jk n_j n_k
/// with n = (1 + Z)/2, i.e. the Pauli form including its identity terms.
///
/// Built as a finite-state automaton with bond dimension 2 + max separation:
/// state 0 = nothing placed, states 1..R = an n placed that many sites to the
/// left, state R+1 = Hamiltonian term complete.
MpoOperator build_mpo(const ChainSpec& spec, const InteractionTable& table);

/// The zero operator on n sites with bond dimension 1.
MpoOperator zero_mpo(std::size_t n);

/// Dense 2^n x 2^n expansion (site 0 = most significant bit); n <= 12.
Eigen::MatrixXcd mpo_to_dense(const MpoOperator& mpo);

/// R_b = (C / omega)^(1/6) in um.
double blockade_radius(const ChainSpec& spec);

/// Copy of `spec` with detuning_j = features_j.
ChainSpec encode_detunings(const ChainSpec& spec, const std::vector<double>& features);

}  // namespace qelm
