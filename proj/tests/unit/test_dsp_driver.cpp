#include <gtest/gtest.h>

#include <cmath>

#include "divsf/dsp_driver.hpp"
#include "divsf/envs.hpp"
#include "divsf/errors.hpp"
#include "test_mdps.hpp"

namespace divsf {
namespace {

using testing::vec;

TabularMdp gridworld(std::uint64_t seed) {
  EnvConfig cfg;
  cfg.kind = EnvKind::kGridworld;
  cfg.seed = seed;
  return build_env(cfg);
}

DspConfig config_with(MechanismKind kind, int n = 8) {
  DspConfig cfg;
  cfg.n_policies = n;
  cfg.mechanism_d.kind = kind;
  return cfg;
}

PolicySet set_of(std::initializer_list<Vector> sfs) {
  PolicySet set;
  for (const Vector& psi : sfs) {
    set.add(PolicyEntry{StochasticPolicy::uniform(1, 1), SuccessorFeatures{psi}, 0.5});
  }
  set.v_star = 1.0;
  return set;
}

TEST(RunDsp, SinglePolicyIsInitializationOnly) {
  const TabularMdp mdp = gridworld(1);
  const DspResult r = run_dsp(mdp, config_with(MechanismKind::kRobustness, 1));
  ASSERT_EQ(r.set.size(), 1u);
  EXPECT_NEAR(r.set.v_star, optimal_average_policy(mdp, mdp.extrinsic_reward()).value, 1e-12);
  EXPECT_FALSE(r.metrics.min_pairwise_distance.has_value());
}

TEST(RunDsp, LpRunSatisfiesConstraint) {
  const TabularMdp mdp = gridworld(3);
  const DspResult r = run_dsp(mdp, config_with(MechanismKind::kMin));
  ASSERT_EQ(r.set.size(), 8u);
  ASSERT_EQ(r.records.size(), 8u);
  for (const IterationRecord& rec : r.records) {
    if (!rec.feasible) continue;
    EXPECT_GE(rec.v_e, 0.9 * r.set.v_star - 1e-6) << "policy " << rec.index;
  }
}

TEST(RunDsp, VStarIsNonDecreasing) {
  const TabularMdp mdp = gridworld(4);
  DspConfig cfg = config_with(MechanismKind::kAverage, 5);
  cfg.estimator = EstimatorKind::kMonteCarlo;
  cfg.mc_trajectories = 5;
  const DspResult r = run_dsp(mdp, cfg);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_GE(r.records[i].v_star, r.records[i - 1].v_star);
  }
}

TEST(RunDsp, ZeroAlphaIsPureDiversity) {
  const TabularMdp mdp = gridworld(5);
  DspConfig cfg = config_with(MechanismKind::kRobustness, 3);
  cfg.alpha = 0.0;
  const DspResult r = run_dsp(mdp, cfg);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_TRUE(r.records[i].feasible);
    // The robustness reward's own optimum is reached.
    PolicySet prefix;
    prefix.entries.assign(r.set.entries.begin(), r.set.entries.begin() + static_cast<long>(i));
    const DiversityReward dr = reward_robustness(prefix, mdp.features(), cfg.mechanism_d.bounding,
                                                 cfg.mechanism_d.tau);
    EXPECT_NEAR(r.records[i].v_d, optimal_average_policy(mdp, dr.reward).value, 1e-9);
  }
}

TEST(RunDsp, DeterministicGivenConfig) {
  const TabularMdp mdp = gridworld(6);
  DspConfig cfg = config_with(MechanismKind::kDiscrimination, 4);
  cfg.estimator = EstimatorKind::kMonteCarlo;
  cfg.mc_trajectories = 3;
  const DspResult a = run_dsp(mdp, cfg);
  const DspResult b = run_dsp(mdp, cfg);
  ASSERT_EQ(a.set.size(), b.set.size());
  for (std::size_t i = 0; i < a.set.size(); ++i) {
    EXPECT_TRUE(a.set.entries[i].policy == b.set.entries[i].policy);
    EXPECT_TRUE(a.set.entries[i].psi.psi == b.set.entries[i].psi.psi);
    EXPECT_EQ(a.records[i].v_e_estimate, b.records[i].v_e_estimate);
  }
}

TEST(RunDsp, DerivedConstraintRewardReevaluatesVStar) {
  const TabularMdp mdp = gridworld(7);
  DspConfig cfg = config_with(MechanismKind::kMin, 4);
  cfg.mechanism_e = ConstraintSource::kRobustness;
  const DspResult r = run_dsp(mdp, cfg);
  ASSERT_EQ(r.set.size(), 4u);
  for (const IterationRecord& rec : r.records) {
    if (rec.index == 0 || !rec.feasible) continue;
    EXPECT_GE(rec.v_e, 0.9 * rec.v_star - 1e-6);
  }
}

TEST(RunDsp, PrimalDualModeRuns) {
  EnvConfig env;
  env.kind = EnvKind::kChain;
  env.length = 4;
  const TabularMdp mdp = build_env(env);
  DspConfig cfg = config_with(MechanismKind::kDiscrimination, 3);
  cfg.solver = SolverKind::kPrimalDual;
  cfg.primal_dual.max_steps = 3000;
  const DspResult r = run_dsp(mdp, cfg);
  ASSERT_EQ(r.set.size(), 3u);
  EXPECT_EQ(r.records[1].trace.size(), 3000u);
}

TEST(RunDsp, InvalidConfigThrows) {
  DspConfig cfg;
  cfg.alpha = 1.5;
  EXPECT_THROW(run_dsp(gridworld(0), cfg), InvalidArgument);
  cfg = DspConfig{};
  cfg.n_policies = 0;
  EXPECT_THROW(run_dsp(gridworld(0), cfg), InvalidArgument);
}

TEST(RunDsp, MinAndAverageBeatNoneOnGridworlds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMdp mdp = gridworld(100 + seed);
    const double none = *run_dsp(mdp, config_with(MechanismKind::kNone)).metrics.min_pairwise_distance;
    const double mn = *run_dsp(mdp, config_with(MechanismKind::kMin)).metrics.min_pairwise_distance;
    const double av =
        *run_dsp(mdp, config_with(MechanismKind::kAverage)).metrics.min_pairwise_distance;
    EXPECT_GT(mn, none) << "seed " << seed;
    EXPECT_GT(av, none) << "seed " << seed;
  }
}

TEST(DiversityMetrics, DuplicatePolicies) {
  const DiversityMetrics m = diversity_metrics(set_of({vec({0.2, 0.8}), vec({0.2, 0.8})}));
  EXPECT_EQ(*m.min_pairwise_distance, 0.0);
}

TEST(DiversityMetrics, OrthogonalCorners) {
  const DiversityMetrics m = diversity_metrics(set_of({vec({1, 0}), vec({0, 1})}));
  EXPECT_NEAR(*m.min_pairwise_distance, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(m.value_ratios[0], 0.5, 1e-15);
  EXPECT_TRUE(std::isnan(m.min_distance_to_earlier[0]));
  EXPECT_NEAR(m.min_distance_to_earlier[1], std::sqrt(2.0), 1e-15);
}

TEST(DiversityMetrics, MinNotAboveMean) {
  const DiversityMetrics m =
      diversity_metrics(set_of({vec({1, 0}), vec({0, 1}), vec({0.4, 0.4}), vec({0.9, 0.1})}));
  EXPECT_LE(*m.min_pairwise_distance, *m.mean_pairwise_distance);
}

TEST(DiversityMetrics, SingletonHasNoDistances) {
  const DiversityMetrics m = diversity_metrics(set_of({vec({1, 0})}));
  EXPECT_FALSE(m.min_pairwise_distance.has_value());
  EXPECT_FALSE(m.mean_pairwise_distance.has_value());
}

TEST(Parse, DriverEnums) {
  EXPECT_EQ(parse_constraint_source("robustness"), ConstraintSource::kRobustness);
  EXPECT_EQ(parse_solver_kind("primal_dual"), SolverKind::kPrimalDual);
  EXPECT_EQ(parse_estimator_kind("monte_carlo"), EstimatorKind::kMonteCarlo);
  EXPECT_FALSE(parse_solver_kind("magic").has_value());
}

}  // namespace
}  // namespace divsf
