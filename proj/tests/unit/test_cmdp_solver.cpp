#include <gtest/gtest.h>

#include <cmath>

#include "divsf/cmdp_solver.hpp"
#include "divsf/errors.hpp"
#include "divsf/oracle.hpp"
#include "divsf/random.hpp"
#include "test_mdps.hpp"

namespace divsf {
namespace {

using testing::mat2;
using testing::two_state_gadget;

RewardTable indicator(int n_states, int n_actions, int state) {
  RewardTable r = RewardTable::Zero(n_states, n_actions);
  r.row(state).setOnes();
  return r;
}

RewardTable random_table(int S, int A, std::uint64_t seed) {
  Rng rng(seed);
  RewardTable r(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) r(s, a) = uniform01(rng);
  }
  return r;
}

CmdpSpec gadget_spec() {
  // r_e = 1{s=0}, r_d = 1{s=1}, alpha * v_star = 0.5.
  return CmdpSpec{indicator(2, 2, 1), indicator(2, 2, 0), 0.5, 1.0, {}};
}

TEST(CombinedReward, ZeroMultiplierAveragesRewards) {
  const RewardTable re = random_table(3, 2, 1);
  const RewardTable rd = random_table(3, 2, 2);
  EXPECT_LE((combined_reward(0.0, re, rd) - 0.5 * (re + rd)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CombinedReward, SaturatedMultiplier) {
  const RewardTable re = random_table(3, 2, 1);
  const RewardTable rd = random_table(3, 2, 2);
  EXPECT_LE((combined_reward(50.0, re, rd) - re).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CombinedReward, PreservesUnitBounds) {
  for (double lambda : {-30.0, -2.0, 0.0, 0.7, 30.0}) {
    const RewardTable r = combined_reward(lambda, random_table(4, 3, 5), random_table(4, 3, 6));
    EXPECT_GE(r.minCoeff(), 0.0);
    EXPECT_LE(r.maxCoeff(), 1.0);
  }
}

TEST(CombinedReward, ShapeMismatchThrows) {
  EXPECT_THROW(combined_reward(0.0, RewardTable::Zero(2, 2), RewardTable::Zero(3, 2)),
               DimensionError);
}

TEST(LagrangeObjective, FairCoinEntropy) {
  LagrangeState st;
  EXPECT_NEAR(lagrange_objective(st, 0.9 * 0.8, 0.9, 0.8), -0.01 * std::log(2.0), 1e-15);
  EXPECT_NEAR(lagrange_objective(st, 0.9 * 0.8, 0.9, 0.8), -0.006931, 5e-7);
}

TEST(LagrangeObjective, NoRegularization) {
  LagrangeState st;
  st.entropy_weight = 0.0;
  st.lambda = 1.3;
  EXPECT_NEAR(lagrange_objective(st, 0.5, 1.0, 0.3), sigmoid(1.3) * 0.2, 1e-15);
  st.lambda = 0.0;
  EXPECT_NEAR(lagrange_objective(st, 0.4, 0.0, 1.0), 0.2, 1e-15);
}

TEST(LagrangeObjective, GradientMatchesFiniteDifference) {
  for (double lambda : {-3.0, -0.5, 0.0, 0.4, 2.5}) {
    LagrangeState st;
    st.lambda = lambda;
    st.v_hat.value = 0.37;
    const double h = 1e-6;
    LagrangeState lo = st;
    LagrangeState hi = st;
    lo.lambda -= h;
    hi.lambda += h;
    const double fd = (lagrange_objective(hi, 0.37, 0.9, 0.5) -
                       lagrange_objective(lo, 0.37, 0.9, 0.5)) /
                      (2 * h);
    EXPECT_NEAR(lagrange_gradient(st, 0.9, 0.5), fd, 1e-8);
  }
}

TEST(LagrangeStep, HandValue) {
  LagrangeState st;
  st.entropy_weight = 0.0;
  st.v_hat.value = 0.4;
  const LagrangeState next = lagrange_step(st, 0.0, 1.0);
  EXPECT_NEAR(next.lambda, -0.01, 1e-15);
  EXPECT_EQ(next.learning_rate, st.learning_rate);
  EXPECT_EQ(next.v_hat.value, st.v_hat.value);
}

TEST(LagrangeStep, DirectionFollowsConstraintSlack) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    LagrangeState st;
    st.entropy_weight = 0.0;
    st.lambda = 6.0 * uniform01(rng) - 3.0;
    st.v_hat.value = uniform01(rng);
    const double alpha = 0.9;
    const double v_star = uniform01(rng);
    const double slack = st.v_hat.value - alpha * v_star;
    const LagrangeState next = lagrange_step(st, alpha, v_star);
    if (slack > 0) EXPECT_LT(next.lambda, st.lambda);
    if (slack < 0) EXPECT_GT(next.lambda, st.lambda);
  }
}

TEST(LagrangeStep, EntropyFixedPointIsHalf) {
  LagrangeState st;
  st.v_hat.value = 0.9 * 0.6;
  st.lambda = 0.0;
  EXPECT_EQ(lagrange_step(st, 0.9, 0.6).lambda, 0.0);
  // Away from 0.5 the regularizer pulls sigma back.
  for (double lambda : {-2.0, 1.5}) {
    st.lambda = lambda;
    for (int k = 0; k < 100000; ++k) st = lagrange_step(st, 0.9, 0.6);
    EXPECT_NEAR(st.sigma(), 0.5, 1e-3);
  }
}

TEST(PolicyGradient, MatchesCentralFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int S = 2 + static_cast<int>(seed % 4);
    const int A = 2 + static_cast<int>(seed % 2);
    const TabularMdp mdp = testing::random_mdp(S, A, 2, 60 + seed);
    const RewardTable r = random_table(S, A, 70 + seed);
    Rng rng(seed);
    SoftmaxPolicyParams params = SoftmaxPolicyParams::zeros(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) params.theta(s, a) = 2.0 * standard_normal(rng);
    }
    const Matrix grad = softmax_policy_gradient(mdp, params, r);
    const double h = 1e-5;
    Matrix fd(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        SoftmaxPolicyParams hi = params;
        SoftmaxPolicyParams lo = params;
        hi.theta(s, a) += h;
        lo.theta(s, a) -= h;
        fd(s, a) = (policy_value(mdp, hi.policy(), r) - policy_value(mdp, lo.policy(), r)) / (2 * h);
      }
    }
    EXPECT_LE((grad - fd).norm(), 1e-5 * std::max(fd.norm(), 1e-3)) << "seed " << seed;
  }
}

TEST(SolveCmdpLp, GadgetHandSolution) {
  const TabularMdp mdp = two_state_gadget();
  const CmdpSolution sol = solve_cmdp_lp(mdp, gadget_spec());
  EXPECT_NEAR(sol.v_d, 0.5, 1e-12);
  EXPECT_NEAR(sol.v_e, 0.5, 1e-12);
  // Balance: d0 = 1 / (1 + p) with p = pi(swap|0) and pi(swap|1) = 1.
  const Vector d = stationary_distribution(mdp, sol.policy).d;
  EXPECT_NEAR(d(0), 0.5, 1e-12);
  EXPECT_NEAR(sol.policy(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(sol.policy(1, 1), 1.0, 1e-12);
}

TEST(SolveCmdpLp, VacuousConstraintIsUnconstrainedOptimum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularMdp mdp = testing::random_mdp(4, 3, 2, 80 + seed);
    const RewardTable rd = random_table(4, 3, 90 + seed);
    const CmdpSpec spec{rd, mdp.extrinsic_reward(), 0.0, 0.7, {}};
    const double opt = optimal_average_policy(mdp, rd).value;
    EXPECT_NEAR(solve_cmdp_lp(mdp, spec).v_d, opt, 1e-10);
  }
}

TEST(SolveCmdpLp, AlignedObjectives) {
  const TabularMdp mdp = testing::random_mdp(5, 2, 2, 11);
  const RewardTable re = mdp.extrinsic_reward();
  const double opt = optimal_average_policy(mdp, re).value;
  const CmdpSolution sol = solve_cmdp_lp(mdp, CmdpSpec{re, re, 0.9, opt, {}});
  EXPECT_NEAR(sol.v_d, opt, 1e-10);
  EXPECT_GE(sol.v_e, 0.9 * opt - 1e-10);
}

TEST(SolveCmdpLp, MatchesMixtureOracle) {
  // With one binding constraint the optimum mixes at most two deterministic
  // policies; scan all pairs of enumerated policies on a fine grid.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TabularMdp mdp = testing::random_mdp(3, 2, 2, 120 + seed);
    const RewardTable rd = random_table(3, 2, 130 + seed);
    const RewardTable re = mdp.extrinsic_reward();
    const auto en_e = oracle::enumerate_policies(mdp, re);
    const auto en_d = oracle::enumerate_policies(mdp, rd);
    const double v_star = en_e.best_value();
    const CmdpSolution sol = solve_cmdp_lp(mdp, CmdpSpec{rd, re, 0.9, v_star, {}});
    double best = -1e300;
    for (std::size_t i = 0; i < en_e.values.size(); ++i) {
      for (std::size_t j = 0; j < en_e.values.size(); ++j) {
        // Mixing occupancy measures mixes values linearly.
        for (int k = 0; k <= 1000; ++k) {
          const double t = k / 1000.0;
          const double ve = (1 - t) * en_e.values[i] + t * en_e.values[j];
          const double vd = (1 - t) * en_d.values[i] + t * en_d.values[j];
          if (ve >= 0.9 * v_star - 1e-12) best = std::max(best, vd);
        }
      }
    }
    EXPECT_GE(sol.v_d, best - 1e-10);
    EXPECT_LE(sol.v_d, best + 2e-3);
    EXPECT_GE(sol.v_e, 0.9 * v_star - 1e-10);
  }
}

TEST(SolveCmdpLp, InfeasibleReportsBestConstraintValue) {
  const TabularMdp mdp = two_state_gadget();
  CmdpSpec spec = gadget_spec();
  spec.alpha = 1.0;
  spec.v_star = 1.5;
  try {
    solve_cmdp_lp(mdp, spec);
    FAIL() << "expected ConstraintInfeasible";
  } catch (const ConstraintInfeasible& e) {
    EXPECT_NEAR(e.best_constraint_value(), 1.0, 1e-12);
  }
}

TEST(SolveCmdpLp, InvalidAlphaThrows) {
  CmdpSpec spec = gadget_spec();
  spec.alpha = 1.5;
  EXPECT_THROW(solve_cmdp_lp(two_state_gadget(), spec), InvalidArgument);
}

TEST(PrimalDual, GadgetMatchesLp) {
  const PrimalDualResult pd =
      solve_cmdp_primal_dual(two_state_gadget(), gadget_spec(), LagrangeState{},
                             PrimalDualConfig{}, 1);
  EXPECT_GE(pd.v_e, 0.5 - 0.01);
  EXPECT_NEAR(pd.v_d, 0.5, 0.05 * 0.5);
  EXPECT_TRUE(pd.feasible);
}

TEST(PrimalDual, NoDiversityRewardRecoversOptimum) {
  const TabularMdp mdp = testing::random_mdp(5, 3, 2, 17);
  const RewardTable re = mdp.extrinsic_reward();
  const double v_star = optimal_average_policy(mdp, re).value;
  const CmdpSpec spec{RewardTable::Zero(5, 3), re, 0.9, v_star, {}};
  const PrimalDualResult pd = solve_cmdp_primal_dual(mdp, spec, LagrangeState{},
                                                     PrimalDualConfig{}, 2);
  EXPECT_NEAR(pd.v_e, v_star, 0.01 * v_star);
}

TEST(PrimalDual, SeededRunsAreBitIdentical) {
  const TabularMdp mdp = testing::random_mdp(4, 2, 2, 5);
  const CmdpSpec spec{random_table(4, 2, 6), mdp.extrinsic_reward(), 0.9,
                      optimal_average_policy(mdp, mdp.extrinsic_reward()).value, {}};
  PrimalDualConfig cfg;
  cfg.max_steps = 3000;
  const PrimalDualResult a = solve_cmdp_primal_dual(mdp, spec, LagrangeState{}, cfg, 9);
  const PrimalDualResult b = solve_cmdp_primal_dual(mdp, spec, LagrangeState{}, cfg, 9);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].v_e, b.trace[i].v_e);
    EXPECT_EQ(a.trace[i].v_d, b.trace[i].v_d);
    EXPECT_EQ(a.trace[i].sigma_lambda, b.trace[i].sigma_lambda);
  }
  EXPECT_TRUE(a.policy == b.policy);
}

TEST(PrimalDual, SampledModeIsSeedReproducible) {
  const TabularMdp mdp = testing::random_mdp(4, 2, 2, 5);
  const CmdpSpec spec{random_table(4, 2, 6), mdp.extrinsic_reward(), 0.9,
                      optimal_average_policy(mdp, mdp.extrinsic_reward()).value, {}};
  PrimalDualConfig cfg;
  cfg.max_steps = 300;
  cfg.sampled = true;
  cfg.rollout_horizon = 200;
  const PrimalDualResult a = solve_cmdp_primal_dual(mdp, spec, LagrangeState{}, cfg, 4);
  const PrimalDualResult b = solve_cmdp_primal_dual(mdp, spec, LagrangeState{}, cfg, 4);
  EXPECT_EQ(a.trace.back().sigma_lambda, b.trace.back().sigma_lambda);
}

TEST(PrimalDual, InfeasibleSpecIsFlaggedNotMasked) {
  CmdpSpec spec = gadget_spec();
  spec.alpha = 1.0;
  spec.v_star = 1.5;
  PrimalDualConfig cfg;
  cfg.max_steps = 2000;
  const PrimalDualResult pd =
      solve_cmdp_primal_dual(two_state_gadget(), spec, LagrangeState{}, cfg, 0);
  EXPECT_FALSE(pd.feasible);
  EXPECT_FALSE(pd.converged);
  EXPECT_EQ(pd.source, PrimalDualSource::kBestConstraint);
  for (const auto& row : pd.trace) EXPECT_FALSE(row.feasible);
}

TEST(PrimalDual, ProviderIsCalledWithRunningAverage) {
  const TabularMdp mdp = testing::random_mdp(3, 2, 2, 8);
  int calls = 0;
  CmdpSpec spec{RewardTable::Zero(3, 2), mdp.extrinsic_reward(), 0.5,
                optimal_average_policy(mdp, mdp.extrinsic_reward()).value, {}};
  spec.diversity_provider = [&](const SuccessorFeatures& psi) {
    ++calls;
    EXPECT_EQ(psi.psi.size(), 2);
    return RewardTable::Zero(3, 2);
  };
  PrimalDualConfig cfg;
  cfg.max_steps = 50;
  solve_cmdp_primal_dual(mdp, spec, LagrangeState{}, cfg, 0);
  EXPECT_EQ(calls, 50);
}

}  // namespace
}  // namespace divsf
