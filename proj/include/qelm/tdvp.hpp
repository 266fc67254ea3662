#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qelm/krylov.hpp"
#include "qelm/mps.hpp"
#include "qelm/rydberg.hpp"

namespace qelm {

enum class TdvpMethod { OneSite, TwoSite };

std::string to_string(TdvpMethod m);
TdvpMethod parse_method(const std::string& s);

struct EvolutionConfig {
  double dt = 0.5;          // snapshot interval, us
  double total_time = 4.0;  // us
  int inner_substeps = 1;
  TdvpMethod method = TdvpMethod::OneSite;
  std::size_t chi_max = 100;
  double svd_cutoff = 1e-12;
  KrylovOptions krylov{};
  /// Per-step discarded weight above this raises the truncation alarm (two-site only).
  double discard_alarm = 1e-6;
  /// Record t = 0 as the first snapshot.
  bool include_initial = false;
  /// Canonicalize a copy at each snapshot and record bond entropies.
  bool record_entropy = false;
  bool record_energy = true;
  bool keep_states = false;

  void validate() const;
  std::size_t snapshot_count() const;
};

struct StepStats {
  bool krylov_converged = true;
  int matvecs = 0;
  double discarded_weight = 0.0;
  bool truncation_alarm = false;
};

struct StepResult {
  MpsState state;
  StepStats stats;
};

/// One symmetric projector-splitting sweep of one-site TDVP (left-to-right
/// half step then right-to-left half step). Bond dimensions are unchanged.
StepResult tdvp_step_one_site(const MpsState& state, const MpoOperator& h, double dt,
                              const KrylovOptions& krylov = {});

/// One symmetric sweep of two-site TDVP. Bonds may grow up to chi_max;
/// `stats.discarded_weight` is the sum over all splits in the sweep.
StepResult tdvp_step_two_site(const MpsState& state, const MpoOperator& h, double dt, std::size_t chi_max,
                              double cutoff, const KrylovOptions& krylov = {}, double discard_alarm = 1e-6);

/// <psi|H|psi> / <psi|psi>.
double mpo_expectation(const MpsState& state, const MpoOperator& h);

struct Snapshot {
  double time = 0.0;
  double norm = 1.0;
  double energy = 0.0;
  std::size_t max_chi = 1;
  double discarded_weight = 0.0;  // accumulated since t = 0
  bool krylov_converged = true;   // every local solve since the previous snapshot
  bool truncation_alarm = false;
  std::vector<double> bond_entropy;  // when record_entropy
  std::optional<MpsState> state;     // when keep_states
};

struct EvolutionTrace {
  std::vector<Snapshot> snapshots;
  /// Set when a step failed; snapshots hold everything up to the failure.
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
  bool all_krylov_converged() const;
};

/// Called at each snapshot with the (normalized) state.
using SnapshotObserver = std::function<void(const Snapshot&, const MpsState&)>;

EvolutionTrace evolve(const MpsState& initial, const MpoOperator& h, const EvolutionConfig& cfg,
                      const SnapshotObserver& observer = {});

/// Grows every bond of a product state to min(chi, the largest rank allowed
/// at that bond) with zero padding, so one-site TDVP has room to entangle.
MpsState pad_bonds(const MpsState& state, std::size_t chi);

}  // namespace qelm
