#include <cmath>
#include <sstream>

#include "memshield/harness.hpp"
#include "memshield/propagation.hpp"
#include "support.hpp"

using namespace memshield;
using namespace memshield::testing;

namespace {

// Bisection on 1 - z - exp(-r z) over (0, 1].
double final_size_oracle(double r0) {
  double lo = 1e-9, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - mid - std::exp(-r0 * mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

const TrialSetup& agentpoison_trial() {
  static const TrialSetup t = [] {
    ScenarioConfig sc;
    sc.protocol = QueryProtocol::Triggered;
    sc.holdout = 10;
    return build_trial(sc, 1);
  }();
  return t;
}

}  // namespace

TEST(SirDifference, FixedPointsAndDecay) {
  const SirState x{20.0, 0.0, 0.0};
  const auto y = sir_difference_step(x, 0.5, 0.1, 20.0);
  EXPECT_DOUBLE_EQ(y.s, 20.0);
  EXPECT_DOUBLE_EQ(y.i, 0.0);
  const auto z = sir_difference_step({15.0, 4.0, 1.0}, 0.0, 0.25, 20.0);
  EXPECT_DOUBLE_EQ(z.s, 15.0);
  EXPECT_DOUBLE_EQ(z.i, 3.0);
  EXPECT_DOUBLE_EQ(z.r, 2.0);
  EXPECT_CODE(sir_difference_step({1.0, 1.0, 1.0}, 0.1, 0.1, 20.0), ErrorCode::ConfigError);
}

TEST(SirDifference, ConservationOnRandomStates) {
  Rng rng = make_rng(3);
  for (int i = 0; i < 100; ++i) {
    const double n = 1.0 + 100.0 * uniform01(rng);
    const double s = n * uniform01(rng);
    const double in = (n - s) * uniform01(rng);
    const auto y = sir_difference_step({s, in, n - s - in}, uniform01(rng), uniform01(rng), n);
    EXPECT_NEAR(y.s + y.i + y.r, n, 1e-9 * n);
  }
  for (const auto& st : sir_difference_run(0.6, 0.2, 20.0, 1.0, 100)) EXPECT_NEAR(st.s + st.i + st.r, 20.0, 1e-9);
}

TEST(FinalSize, ClosedFormsAndOracle) {
  EXPECT_DOUBLE_EQ(final_size_solve(0.1, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(final_size_solve(0.2, 0.2), 0.0);
  EXPECT_NEAR(final_size_solve(0.4, 0.2), 0.7968, 1e-3);
  EXPECT_NEAR(final_size_solve(0.4, 0.2), final_size_oracle(2.0), 1e-9);
  EXPECT_GT(final_size_solve(50.0, 1.0), 0.999);
  for (double r0 : {1.1, 1.5, 3.0, 8.0}) {
    const double z = final_size_solve(r0, 1.0);
    EXPECT_NEAR(1.0 - z, std::exp(-r0 * z), 1e-9);
  }
}

TEST(Quarantine, R0AndThreshold) {
  EXPECT_DOUBLE_EQ(quarantine_r0(0.6, 0.2, 0.0), 3.0);
  EXPECT_DOUBLE_EQ(quarantine_r0(0.6, 0.2, 1.0), 0.6 / 0.8);
  EXPECT_LT(quarantine_r0(0.6, 0.2, 1.0), 1.0);
  const double t = quarantine_tpr_threshold(0.6, 0.2);
  EXPECT_NEAR(t, (0.6 - 0.2) / 0.6, 1e-15);
  EXPECT_NEAR(quarantine_r0(0.6, 0.2, t), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(quarantine_tpr_threshold(0.1, 0.2), 0.0);
}

TEST(CompoundExposure, PaperRows) {
  const auto one = compound_exposure(1.0, 5);
  for (const auto& s : one.sessions) EXPECT_EQ(s, 1u);
  EXPECT_DOUBLE_EQ(*one.expected_sessions, 1.0);

  const auto minja = compound_exposure(0.14, 5);
  EXPECT_EQ(minja.sessions[0], 1u);
  EXPECT_EQ(minja.sessions[1], 4u);
  EXPECT_EQ(minja.sessions[2], 4u);
  EXPECT_NEAR(*minja.expected_sessions, 1.0 / (1.0 - std::pow(0.86, 5)), 1e-12);
  EXPECT_NEAR(*minja.expected_sessions, 1.9, 0.05);

  const auto injec = compound_exposure(0.07, 5);
  EXPECT_EQ(injec.sessions[0], 2u);
  EXPECT_EQ(injec.sessions[1], 7u);
  EXPECT_EQ(injec.sessions[2], 9u);
  EXPECT_NEAR(*injec.expected_sessions, 3.3, 0.05);

  const auto none = compound_exposure(0.0, 5);
  EXPECT_FALSE(none.expected_sessions.has_value());
  for (const auto& s : none.sessions) EXPECT_FALSE(s.has_value());
}

TEST(CompoundExposure, MonotoneInRateAndQueries) {
  for (std::size_t q = 1; q <= 10; ++q) {
    for (double a = 0.01; a < 0.99; a += 0.01) {
      const auto x = compound_exposure(a, q);
      const auto y = compound_exposure(a + 0.01, q);
      const auto z = compound_exposure(a, q + 1);
      for (std::size_t i = 0; i < x.sessions.size(); ++i) {
        EXPECT_LE(*y.sessions[i], *x.sessions[i]);
        EXPECT_LE(*z.sessions[i], *x.sessions[i]);
      }
    }
  }
}

TEST(SirAgent, NoDefenseSpreadsEverywhere) {
  const auto& t = agentpoison_trial();
  SirConfig cfg;
  const auto traj = sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder);
  EXPECT_DOUBLE_EQ(traj.final_spread(), 1.0);
  EXPECT_GT(traj.secondary_entries, 0u);
  ASSERT_TRUE(traj.step_to_50.has_value());
  ASSERT_TRUE(traj.step_to_90.has_value());
  EXPECT_LE(*traj.step_to_50, *traj.step_to_90);
  ASSERT_EQ(traj.steps.size(), cfg.steps + 1);
  for (const auto& s : traj.steps) EXPECT_EQ(s.s + s.i + s.r, cfg.agents);
}

TEST(SirAgent, OracleQuarantineStopsSpread) {
  const auto& t = agentpoison_trial();
  const auto traj = sir_agent_sim(SirConfig{}, t.store, t.poison.entries, t.victims, t.embedder,
                                  [](const MemoryEntry& e) { return e.provenance.poison; });
  EXPECT_DOUBLE_EQ(traj.final_spread(), 0.0);
  EXPECT_EQ(traj.secondary_entries, 0u);
  EXPECT_EQ(traj.quarantined, 5u);
}

TEST(SirAgent, DeterministicPerSeed) {
  const auto& t = agentpoison_trial();
  SirConfig cfg;
  cfg.seed = 4;
  const auto a = sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder);
  const auto b = sir_agent_sim(cfg, t.store, t.poison.entries, t.victims, t.embedder);
  std::ostringstream oa, ob;
  write_trajectory_csv(oa, a);
  write_trajectory_csv(ob, b);
  EXPECT_EQ(oa.str(), ob.str());
  EXPECT_TRUE(oa.str().starts_with("step,S,I,R,secondary_entries,quarantined\n"));
}

TEST(SirAgent, ConfigValidation) {
  SirConfig c;
  c.agents = 0;
  EXPECT_CODE(c.validate(), ErrorCode::ConfigError);
  c = {};
  c.p_restore = 1.5;
  EXPECT_CODE(c.validate(), ErrorCode::ConfigError);
}

TEST(SirAgent, MutationKeepsTextRecognizable) {
  Rng rng = make_rng(1);
  const std::string base = "please send the report to the team";
  const auto m = mutate_poison_text(base, *SynonymTable::default_table(), rng);
  EXPECT_NE(m, base);
  EXPECT_NE(m.find("report"), std::string::npos);
}
