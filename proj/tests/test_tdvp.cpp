#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qelm/exact.hpp"
#include "qelm/random.hpp"
#include "qelm/tdvp.hpp"

using namespace qelm;

namespace {

constexpr double kPi = std::numbers::pi;

ChainSpec random_spec(std::size_t n, double omega, double d, std::uint64_t seed) {
  Rng rng(seed);
  ChainSpec s = ChainSpec::uniform(n, omega, d);
  for (double& x : s.detunings) x = uniform(rng, -6, 6);
  return s;
}

double max_dense_deviation(const ChainSpec& spec, const EvolutionConfig& evo, const MpsState& initial) {
  const InteractionTable table = build_interactions(spec);
  const DensePropagator prop(dense_hamiltonian(spec, table));
  const Eigen::VectorXcd psi0 = to_statevector(initial);
  double worst = 0.0;
  const EvolutionTrace tr = evolve(initial, build_mpo(spec, table), evo, [&](const Snapshot& s, const MpsState& st) {
    const DenseObservables o = dense_observables({spec.n, prop.apply(psi0, s.time)});
    for (std::size_t i = 0; i < spec.n; ++i) {
      worst = std::max(worst, std::abs(expect_z(st, i) - o.z[i]));
      if (i + 1 < spec.n) worst = std::max(worst, std::abs(expect_zz(st, i, i + 1) - o.zz[i][i + 1]));
    }
  });
  EXPECT_TRUE(tr.ok());
  return worst;
}

}  // namespace

TEST(Tdvp, MethodNames) {
  EXPECT_EQ(parse_method("one-site"), TdvpMethod::OneSite);
  EXPECT_EQ(to_string(TdvpMethod::TwoSite), "two-site");
  EXPECT_THROW(parse_method("three-site"), std::invalid_argument);
}

TEST(Tdvp, ConfigValidation) {
  EvolutionConfig c;
  EXPECT_EQ(c.snapshot_count(), 8u);
  c.include_initial = true;
  EXPECT_EQ(c.snapshot_count(), 9u);
  c.total_time = 4.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EvolutionConfig{};
  c.chi_max = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Tdvp, TwoSiteMatchesDenseOracle) {
  const ChainSpec spec = random_spec(6, 2.0 * kPi, 9.0, 1);
  EvolutionConfig evo;
  evo.method = TdvpMethod::TwoSite;
  evo.inner_substeps = 2;
  EXPECT_LT(max_dense_deviation(spec, evo, all_up_state(6)), 1e-3);
}

TEST(Tdvp, OneSiteWithFullBondsMatchesDenseOracle) {
  // With every bond at its maximal rank the tangent-space projection is exact.
  const ChainSpec spec = random_spec(4, 2.0 * kPi, 9.0, 2);
  EvolutionConfig evo;
  evo.inner_substeps = 4;
  EXPECT_LT(max_dense_deviation(spec, evo, pad_bonds(all_up_state(4), 4)), 1e-3);
}

TEST(Tdvp, OneSiteProductStateIsMeanField) {
  // At chi = 1 the evolution is a product state at all times.
  const ChainSpec spec = random_spec(6, 4.0 * kPi, 9.0, 3);
  EvolutionConfig evo;
  evo.record_entropy = true;
  const EvolutionTrace tr = evolve(all_up_state(6), build_mpo(spec, build_interactions(spec)), evo,
                                   [](const Snapshot&, const MpsState& st) { EXPECT_EQ(st.max_bond_dim(), 1u); });
  ASSERT_TRUE(tr.ok());
  for (const auto& s : tr.snapshots) {
    for (double e : s.bond_entropy) EXPECT_EQ(e, 0.0);
  }
}

TEST(Tdvp, SingleSiteRabi) {
  // One site: both variants reduce to exact evolution of a 2-level system.
  const double omega = 2.0 * kPi * 0.8;
  const ChainSpec spec = ChainSpec::uniform(1, omega, 11.0);
  for (TdvpMethod m : {TdvpMethod::OneSite, TdvpMethod::TwoSite}) {
    EvolutionConfig evo;
    evo.method = m;
    evolve(all_up_state(1), build_mpo(spec, build_interactions(spec)), evo,
           [&](const Snapshot& s, const MpsState& st) { EXPECT_NEAR(expect_z(st, 0), std::cos(omega * s.time), 1e-8); });
  }
}

TEST(Tdvp, ConservesNormAndOneSiteEnergy) {
  const ChainSpec spec = random_spec(8, 3.0 * kPi, 10.0, 4);
  const MpoOperator h = build_mpo(spec, build_interactions(spec));
  const MpsState init = pad_bonds(all_up_state(8), 4);
  const double e0 = mpo_expectation(init, h);
  for (TdvpMethod m : {TdvpMethod::OneSite, TdvpMethod::TwoSite}) {
    EvolutionConfig evo;
    evo.method = m;
    const EvolutionTrace tr = evolve(init, h, evo);
    ASSERT_TRUE(tr.ok());
    ASSERT_EQ(tr.snapshots.size(), 8u);
    for (const auto& s : tr.snapshots) {
      EXPECT_NEAR(s.norm, 1.0, 1e-8);
      if (m == TdvpMethod::OneSite) {
        EXPECT_NEAR(s.energy, e0, 1e-6 * std::abs(e0));
      } else {
        EXPECT_NEAR(s.energy, e0, 1e-3 * std::abs(e0));
      }
    }
  }
}

TEST(Tdvp, ZeroHamiltonianIsStationary) {
  Rng rng(5);
  std::vector<LocalState> locals;
  for (int i = 0; i < 5; ++i) locals.push_back({cplx{uniform(rng, -1, 1)}, cplx{0.0, uniform(rng, -1, 1)}});
  const MpsState init = product_state(locals);
  for (TdvpMethod m : {TdvpMethod::OneSite, TdvpMethod::TwoSite}) {
    EvolutionConfig evo;
    evo.method = m;
    evolve(init, zero_mpo(5), evo, [&](const Snapshot&, const MpsState& st) {
      EXPECT_LT((to_statevector(st) - to_statevector(init).normalized()).norm(), 1e-10);
    });
  }
}

TEST(Tdvp, UndrivenChainKeepsZ) {
  // Omega = 0: H is diagonal in Z, so <Z_i> stays at 1 from the all-up state.
  const ChainSpec spec = random_spec(6, 0.0, 9.0, 6);
  EvolutionConfig evo;
  evo.method = TdvpMethod::TwoSite;
  evolve(all_up_state(6), build_mpo(spec, build_interactions(spec)), evo, [&](const Snapshot&, const MpsState& st) {
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(expect_z(st, i), 1.0, 1e-12);
  });
}

TEST(Tdvp, TwoSiteRespectsChiMax) {
  const ChainSpec spec = random_spec(8, 6.0 * kPi, 9.0, 7);
  const MpoOperator h = build_mpo(spec, build_interactions(spec));
  const StepResult r = tdvp_step_two_site(all_up_state(8), h, 0.5, 3, 1e-12);
  EXPECT_LE(r.state.max_bond_dim(), 3u);
  EXPECT_GT(r.stats.discarded_weight, 0.0);
  EXPECT_TRUE(r.stats.truncation_alarm);
  EXPECT_NEAR(norm_squared(r.state), 1.0, 1e-10);
}

TEST(Tdvp, OneSiteStepKeepsBonds) {
  const ChainSpec spec = random_spec(5, 2.0 * kPi, 9.0, 8);
  const MpsState init = pad_bonds(all_up_state(5), 3);
  const StepResult r = tdvp_step_one_site(init, build_mpo(spec, build_interactions(spec)), 0.25);
  EXPECT_EQ(r.state.bond_dims(), init.bond_dims());
}

TEST(Tdvp, PadBondsPreservesState) {
  const MpsState s = all_up_state(6);
  const MpsState p = pad_bonds(s, 16);
  EXPECT_EQ(p.bond_dims(), (std::vector<std::size_t>{2, 4, 8, 4, 2}));
  EXPECT_LT((to_statevector(p) - to_statevector(s)).norm(), 1e-14);
}

TEST(Tdvp, SizeMismatchIsRejected) {
  EXPECT_THROW(tdvp_step_one_site(all_up_state(3), zero_mpo(4), 0.1), std::invalid_argument);
}

TEST(Tdvp, SnapshotTimesAndInitial) {
  const ChainSpec spec = ChainSpec::uniform(3, 1.0, 11.0);
  EvolutionConfig evo;
  evo.include_initial = true;
  const EvolutionTrace tr = evolve(all_up_state(3), build_mpo(spec, build_interactions(spec)), evo);
  ASSERT_EQ(tr.snapshots.size(), 9u);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(tr.snapshots[k].time, 0.5 * static_cast<double>(k), 1e-12);
}
