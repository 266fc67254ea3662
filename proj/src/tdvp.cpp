#include "qelm/tdvp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qelm {

std::string to_string(TdvpMethod m) { return m == TdvpMethod::OneSite ? "one-site" : "two-site"; }

TdvpMethod parse_method(const std::string& s) {
  if (s == "one-site") return TdvpMethod::OneSite;
  if (s == "two-site") return TdvpMethod::TwoSite;
  throw std::invalid_argument("unknown TDVP method '" + s + "' (expected one-site or two-site)");
}

void EvolutionConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("EvolutionConfig: dt must be positive");
  if (!(total_time > 0.0)) throw std::invalid_argument("EvolutionConfig: total_time must be positive");
  const double ratio = total_time / dt;
  if (std::abs(ratio - std::round(ratio)) * dt > 1e-9) {
    throw std::invalid_argument("EvolutionConfig: total_time must be an integer multiple of dt");
  }
  if (inner_substeps < 1) throw std::invalid_argument("EvolutionConfig: inner_substeps must be >= 1");
  if (chi_max < 1) throw std::invalid_argument("EvolutionConfig: chi_max must be >= 1");
  if (svd_cutoff < 0.0) throw std::invalid_argument("EvolutionConfig: svd_cutoff must be >= 0");
}

std::size_t EvolutionConfig::snapshot_count() const {
  return static_cast<std::size_t>(std::llround(total_time / dt)) + (include_initial ? 1 : 0);
}

bool EvolutionTrace::all_krylov_converged() const {
  return std::all_of(snapshots.begin(), snapshots.end(), [](const Snapshot& s) { return s.krylov_converged; });
}

namespace {

// Environment layout: (bra bond, MPO bond, ket bond).
DenseTensor trivial_env() { return DenseTensor({1, 1, 1}, {cplx{1.0, 0.0}}); }

DenseTensor update_left(const DenseTensor& l, const DenseTensor& a, const DenseTensor& w) {
  DenseTensor t1 = contract(l, {2}, a, {0});           // (x, a, t, z)
  DenseTensor t2 = contract(t1, {1, 2}, w, {0, 2});    // (x, z, s, b)
  DenseTensor out = contract(a.conj(), {0, 1}, t2, {0, 2});  // (x', z, b)
  return out.permuted({0, 2, 1});
}

DenseTensor update_right(const DenseTensor& r, const DenseTensor& a, const DenseTensor& w) {
  DenseTensor t1 = contract(a, {2}, r, {2});           // (z, t, x', b)
  DenseTensor t2 = contract(t1, {1, 3}, w, {2, 3});    // (z, x', a, s)
  DenseTensor out = contract(a.conj(), {1, 2}, t2, {3, 1});  // (x, z, a)
  return out.permuted({0, 2, 1});
}

DenseTensor apply_h1(const DenseTensor& l, const DenseTensor& w, const DenseTensor& r, const DenseTensor& a) {
  DenseTensor t1 = contract(l, {2}, a, {0});         // (x, a, t, z)
  DenseTensor t2 = contract(t1, {1, 2}, w, {0, 2});  // (x, z, s, b)
  return contract(t2, {1, 3}, r, {2, 1});            // (x, s, w)
}

DenseTensor apply_h2(const DenseTensor& l, const DenseTensor& w1, const DenseTensor& w2, const DenseTensor& r,
                     const DenseTensor& theta) {
  DenseTensor t1 = contract(l, {2}, theta, {0});      // (x, a, t1, t2, z)
  DenseTensor t2 = contract(t1, {1, 2}, w1, {0, 2});  // (x, t2, z, s1, b)
  DenseTensor t3 = contract(t2, {1, 4}, w2, {2, 0});  // (x, z, s1, s2, c)
  return contract(t3, {1, 4}, r, {2, 1});             // (x, s1, s2, w)
}

DenseTensor apply_h0(const DenseTensor& l, const DenseTensor& r, const DenseTensor& c) {
  DenseTensor t1 = contract(l, {2}, c, {0});  // (x, a, z)
  return contract(t1, {1, 2}, r, {1, 2});     // (x, w)
}

/// exp(-i tau H) v with bookkeeping; tau < 0 evolves backwards.
DenseTensor evolve_local(const LinearMap& h, const DenseTensor& v, double tau, const KrylovOptions& opts,
                         StepStats& stats) {
  KrylovResult res = krylov_expm_apply(h, v, cplx{0.0, -tau}, opts);
  stats.matvecs += res.matvecs;
  stats.krylov_converged = stats.krylov_converged && res.converged;
  if (!res.state.all_finite()) throw std::runtime_error("TDVP: non-finite tensor after local evolution");
  return std::move(res.state);
}

/// Moves the orthogonality center to site 0 (all other sites right-isometric) and normalizes.
std::vector<DenseTensor> right_canonical_sites(const MpsState& state) {
  std::vector<DenseTensor> sites = state.sites();
  if (state.center() != std::optional<std::size_t>{0}) {
    for (std::size_t i = sites.size(); i-- > 1;) {
      LqResult f = lq(sites[i], 1);
      sites[i] = std::move(f.q);
      sites[i - 1] = contract(sites[i - 1], {2}, f.l, {0});
    }
  }
  const double nrm = sites[0].norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw std::invalid_argument("TDVP: state has zero or non-finite norm");
  sites[0] *= cplx{1.0 / nrm, 0.0};
  return sites;
}

void check_compatible(const MpsState& state, const MpoOperator& h) {
  if (state.size() != h.size()) {
    throw std::invalid_argument("TDVP: MPS has " + std::to_string(state.size()) + " sites but MPO has " +
                                std::to_string(h.size()));
  }
}

std::vector<DenseTensor> build_right_envs(const std::vector<DenseTensor>& sites, const MpoOperator& h) {
  const std::size_t n = sites.size();
  std::vector<DenseTensor> right(n + 1);
  right[n] = trivial_env();
  for (std::size_t i = n; i-- > 1;) right[i] = update_right(right[i + 1], sites[i], h.site(i));
  return right;
}

}  // namespace

StepResult tdvp_step_one_site(const MpsState& state, const MpoOperator& h, double dt, const KrylovOptions& krylov) {
  check_compatible(state, h);
  const std::size_t n = state.size();
  const double half = 0.5 * dt;
  StepStats stats;
  std::vector<DenseTensor> a = right_canonical_sites(state);
  std::vector<DenseTensor> right = build_right_envs(a, h);
  std::vector<DenseTensor> left(n + 1);
  left[0] = trivial_env();

  for (std::size_t i = 0; i < n; ++i) {
    const LinearMap h1 = [&, i](const DenseTensor& v) { return apply_h1(left[i], h.site(i), right[i + 1], v); };
    a[i] = evolve_local(h1, a[i], half, krylov, stats);
    if (i + 1 == n) break;
    QrResult f = qr(a[i], 2);
    a[i] = std::move(f.q);
    left[i + 1] = update_left(left[i], a[i], h.site(i));
    const LinearMap h0 = [&, i](const DenseTensor& v) { return apply_h0(left[i + 1], right[i + 1], v); };
    DenseTensor c = evolve_local(h0, f.r, -half, krylov, stats);
    a[i + 1] = contract(c, {1}, a[i + 1], {0});
  }
  for (std::size_t i = n; i-- > 0;) {
    const LinearMap h1 = [&, i](const DenseTensor& v) { return apply_h1(left[i], h.site(i), right[i + 1], v); };
    a[i] = evolve_local(h1, a[i], half, krylov, stats);
    if (i == 0) break;
    LqResult f = lq(a[i], 1);
    a[i] = std::move(f.q);
    right[i] = update_right(right[i + 1], a[i], h.site(i));
    const LinearMap h0 = [&, i](const DenseTensor& v) { return apply_h0(left[i], right[i], v); };
    DenseTensor c = evolve_local(h0, f.l, -half, krylov, stats);
    a[i - 1] = contract(a[i - 1], {2}, c, {0});
  }

  StepResult out{MpsState(std::move(a)), stats};
  out.state.mark_center(0);
  return out;
}

StepResult tdvp_step_two_site(const MpsState& state, const MpoOperator& h, double dt, std::size_t chi_max,
                              double cutoff, const KrylovOptions& krylov, double discard_alarm) {
  check_compatible(state, h);
  const std::size_t n = state.size();
  if (n < 2) return tdvp_step_one_site(state, h, dt, krylov);
  const double half = 0.5 * dt;
  const TruncationParams trunc{chi_max, cutoff};
  StepStats stats;
  std::vector<DenseTensor> a = right_canonical_sites(state);
  std::vector<DenseTensor> right = build_right_envs(a, h);
  std::vector<DenseTensor> left(n + 1);
  left[0] = trivial_env();

  auto split = [&](DenseTensor theta) {
    SvdResult f = truncated_svd(theta, 2, trunc);
    double s2 = 0.0;
    for (double s : f.singular_values) s2 += s * s;
    const double scale = s2 > 0.0 ? 1.0 / std::sqrt(s2) : 1.0;
    for (double& s : f.singular_values) s *= scale;
    stats.discarded_weight += f.discarded_weight;
    if (f.discarded_weight > discard_alarm) stats.truncation_alarm = true;
    return f;
  };
  auto scale_rows = [](DenseTensor& t, const std::vector<double>& s) {
    auto m = t.as_matrix(1);
    for (Eigen::Index k = 0; k < m.rows(); ++k) m.row(k) *= s[static_cast<std::size_t>(k)];
  };
  auto scale_cols = [](DenseTensor& t, const std::vector<double>& s) {
    auto m = t.as_matrix(t.rank() - 1);
    for (Eigen::Index k = 0; k < m.cols(); ++k) m.col(k) *= s[static_cast<std::size_t>(k)];
  };

  for (std::size_t i = 0; i + 1 < n; ++i) {
    DenseTensor theta = contract(a[i], {2}, a[i + 1], {0});
    const LinearMap h2 = [&, i](const DenseTensor& v) {
      return apply_h2(left[i], h.site(i), h.site(i + 1), right[i + 2], v);
    };
    theta = evolve_local(h2, theta, half, krylov, stats);
    SvdResult f = split(std::move(theta));
    a[i] = std::move(f.u);
    left[i + 1] = update_left(left[i], a[i], h.site(i));
    scale_rows(f.vh, f.singular_values);
    a[i + 1] = std::move(f.vh);
    if (i + 2 < n) {
      const LinearMap h1 = [&, i](const DenseTensor& v) {
        return apply_h1(left[i + 1], h.site(i + 1), right[i + 2], v);
      };
      a[i + 1] = evolve_local(h1, a[i + 1], -half, krylov, stats);
    }
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    DenseTensor theta = contract(a[i], {2}, a[i + 1], {0});
    const LinearMap h2 = [&, i](const DenseTensor& v) {
      return apply_h2(left[i], h.site(i), h.site(i + 1), right[i + 2], v);
    };
    theta = evolve_local(h2, theta, half, krylov, stats);
    SvdResult f = split(std::move(theta));
    a[i + 1] = std::move(f.vh);
    right[i + 1] = update_right(right[i + 2], a[i + 1], h.site(i + 1));
    scale_cols(f.u, f.singular_values);
    a[i] = std::move(f.u);
    if (i > 0) {
      const LinearMap h1 = [&, i](const DenseTensor& v) { return apply_h1(left[i], h.site(i), right[i + 1], v); };
      a[i] = evolve_local(h1, a[i], -half, krylov, stats);
    }
  }

  StepResult out{MpsState(std::move(a)), stats};
  out.state.mark_center(0);
  return out;
}

double mpo_expectation(const MpsState& state, const MpoOperator& h) {
  check_compatible(state, h);
  DenseTensor env = trivial_env();
  for (std::size_t i = 0; i < state.size(); ++i) env = update_left(env, state.site(i), h.site(i));
  const double nrm2 = norm_squared(state);
  if (!(nrm2 > 0.0)) throw std::invalid_argument("mpo_expectation: zero norm");
  return env.storage()[0].real() / nrm2;
}

MpsState pad_bonds(const MpsState& state, std::size_t chi) {
  const std::size_t n = state.size();
  std::vector<std::size_t> target(n + 1, 1);
  for (std::size_t b = 1; b < n; ++b) {
    const std::size_t left_cap = b < 20 ? (std::size_t{1} << b) : chi;
    const std::size_t right_cap = (n - b) < 20 ? (std::size_t{1} << (n - b)) : chi;
    target[b] = std::max(state.site(b).extent(0), std::min({chi, left_cap, right_cap}));
  }
  std::vector<DenseTensor> sites;
  for (std::size_t i = 0; i < n; ++i) {
    const DenseTensor& old = state.site(i);
    DenseTensor t({target[i], 2, target[i + 1]});
    for (std::size_t l = 0; l < old.extent(0); ++l) {
      for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t r = 0; r < old.extent(2); ++r) t({l, s, r}) = old({l, s, r});
      }
    }
    sites.push_back(std::move(t));
  }
  return MpsState(std::move(sites));
}

EvolutionTrace evolve(const MpsState& initial, const MpoOperator& h, const EvolutionConfig& cfg,
                      const SnapshotObserver& observer) {
  cfg.validate();
  check_compatible(initial, h);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.total_time / cfg.dt));
  const double inner_dt = cfg.dt / cfg.inner_substeps;

  EvolutionTrace trace;
  MpsState state = initial;
  double accumulated_discard = 0.0;

  auto record = [&](double t, const StepStats& since_last) {
    Snapshot snap;
    snap.time = t;
    snap.norm = std::sqrt(norm_squared(state));
    if (cfg.record_energy) snap.energy = mpo_expectation(state, h);
    snap.max_chi = state.max_bond_dim();
    snap.discarded_weight = accumulated_discard;
    snap.krylov_converged = since_last.krylov_converged;
    snap.truncation_alarm = since_last.truncation_alarm;
    if (cfg.record_entropy) snap.bond_entropy = entanglement_entropy(canonicalize(state, 0)).bond_entropy;
    if (cfg.keep_states) snap.state = state;
    if (observer) observer(snap, state);
    trace.snapshots.push_back(std::move(snap));
  };

  try {
    if (cfg.include_initial) record(0.0, StepStats{});
    for (std::size_t k = 1; k <= steps; ++k) {
      StepStats since_last;
      for (int sub = 0; sub < cfg.inner_substeps; ++sub) {
        StepResult r = cfg.method == TdvpMethod::OneSite
                           ? tdvp_step_one_site(state, h, inner_dt, cfg.krylov)
                           : tdvp_step_two_site(state, h, inner_dt, cfg.chi_max, cfg.svd_cutoff, cfg.krylov,
                                                cfg.discard_alarm);
        state = std::move(r.state);
        since_last.krylov_converged = since_last.krylov_converged && r.stats.krylov_converged;
        since_last.truncation_alarm = since_last.truncation_alarm || r.stats.truncation_alarm;
        since_last.matvecs += r.stats.matvecs;
        accumulated_discard += r.stats.discarded_weight;
      }
      record(static_cast<double>(k) * cfg.dt, since_last);
    }
  } catch (const std::exception& e) {
    trace.error = e.what();
  }
  return trace;
}

}  // namespace qelm
