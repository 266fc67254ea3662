#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "qelm/tensor.hpp"

namespace qelm {

/// Physical basis of every site: index 0 = "up" = Z eigenvalue +1 (the
/// Rydberg level), index 1 = "down" (the ground level).
inline constexpr std::size_t kPhysDim = 2;

using LocalState = std::array<cplx, 2>;

/// Finite open-boundary MPS. Site tensors have axes (left bond, physical, right bond).
///
/// The canonical-form tag records the orthogonality center and the bond
/// Schmidt values produced by the last `canonicalize`. Any mutable access to
/// the site tensors clears the tag.
class MpsState {
 public:
  MpsState() = default;
  explicit MpsState(std::vector<DenseTensor> sites);

  std::size_t size() const { return sites_.size(); }
  const DenseTensor& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<DenseTensor>& sites() const { return sites_; }

  /// Mutable access; invalidates the canonical-form tag.
  DenseTensor& mutable_site(std::size_t i);
  std::vector<DenseTensor>& mutable_sites();

  /// Bond extents between site i and i+1, i = 0..n-2.
  std::vector<std::size_t> bond_dims() const;
  std::size_t max_bond_dim() const;

  bool is_canonical() const { return schmidt_valid_; }
  std::optional<std::size_t> center() const { return center_; }
  /// Schmidt values per bond; empty unless canonical.
  const std::vector<std::vector<double>>& bond_singular_values() const { return schmidt_; }

  /// Set by algorithms that maintain a known center without recomputing Schmidt values.
  void mark_center(std::size_t center);
  void set_canonical(std::size_t center, std::vector<std::vector<double>> schmidt);

 private:
  void check_bonds() const;

  std::vector<DenseTensor> sites_;
  std::optional<std::size_t> center_;
  std::vector<std::vector<double>> schmidt_;
  bool schmidt_valid_ = false;
};

struct EntropyProfile {
  /// S_b = -sum sigma^2 ln sigma^2 for bonds b = 0..n-2 (natural log).
  std::vector<double> bond_entropy;
  double half_chain() const;
  double max() const;
};

MpsState product_state(std::size_t n, const LocalState& local);
MpsState product_state(const std::vector<LocalState>& locals);
/// All sites in the Z = +1 state.
MpsState all_up_state(std::size_t n);

/// Mixed-canonical form centered at `center`, normalized, with Schmidt
/// values recorded on every bond. No truncation.
MpsState canonicalize(const MpsState& state, std::size_t center);

double norm_squared(const MpsState& state);

/// <Z_site>, normalized by <psi|psi>. Sites are 0-based.
double expect_z(const MpsState& state, std::size_t site);
/// <Z_i Z_j> for i != j.
double expect_zz(const MpsState& state, std::size_t i, std::size_t j);
/// <X_site>, used for single-qubit sanity checks.
double expect_x(const MpsState& state, std::size_t site);

struct ZCorrelators {
  std::vector<double> z;   // one per site
  std::vector<double> zz;  // one per requested pair, same order
};

/// All <Z_i> plus <Z_i Z_j> for the given pairs (i < j), in one pass over
/// cached left/right environments.
ZCorrelators measure_z_correlators(const MpsState& state,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

/// Requires a canonical state (Schmidt values current).
EntropyProfile entanglement_entropy(const MpsState& state);

/// Full amplitude vector; site 0 is the most significant bit, up = bit 0.
Eigen::VectorXcd to_statevector(const MpsState& state);

/// Exact MPS of an arbitrary state vector by successive SVDs (for tests).
MpsState from_statevector(const Eigen::VectorXcd& psi, std::size_t n);

}  // namespace qelm
