#include <gtest/gtest.h>

#include <cmath>

#include "divsf/diversity.hpp"
#include "divsf/envs.hpp"
#include "divsf/errors.hpp"
#include "divsf/oracle.hpp"
#include "test_mdps.hpp"

namespace divsf {
namespace {

using testing::vec;

TEST(Enumerate, TwoByTwoHasFourPolicies) {
  const TabularMdp mdp = testing::random_mdp(2, 2, 2, 5);
  const auto en = oracle::enumerate_policies(mdp, mdp.extrinsic_reward());
  ASSERT_EQ(en.policies.size(), 4u);
  EXPECT_EQ(en.policies.front(), (std::vector<int>{0, 0}));
  EXPECT_EQ(en.policies.back(), (std::vector<int>{1, 1}));
  EXPECT_EQ(en.values.size(), 4u);
  EXPECT_EQ(en.sfs.size(), 4u);
}

TEST(Enumerate, OneHotSfsAreDistributions) {
  EnvConfig cfg;
  cfg.kind = EnvKind::kChain;
  cfg.length = 4;
  const TabularMdp mdp = build_env(cfg);
  const auto en = oracle::enumerate_policies(mdp, mdp.extrinsic_reward());
  for (const Vector& psi : en.sfs) {
    EXPECT_NEAR(psi.sum(), 1.0, 1e-12);
    EXPECT_GE(psi.minCoeff(), -1e-15);
  }
}

TEST(Enumerate, BestIndexIsArgmax) {
  const TabularMdp mdp = testing::random_mdp(3, 2, 2, 9);
  const auto en = oracle::enumerate_policies(mdp, mdp.extrinsic_reward());
  for (double v : en.values) EXPECT_LE(v, en.best_value());
}

TEST(ConvexityProbe, DiaynTermIsConvexInOwnDistribution) {
  const Vector other = oracle::random_positive_distribution(4, 77);
  const Vector prior = vec({0.5, 0.5});
  const auto f = [&](const Vector& d) {
    const std::vector<Vector> dists{d, other};
    return diayn_term(0, dists, prior);
  };
  const oracle::ConvexityReport r = oracle::convexity_probe(f, 4, 1000, 3);
  EXPECT_EQ(r.n_pairs, 1000);
  EXPECT_TRUE(r.passed());
}

TEST(ConvexityProbe, DiaynObjectiveIsConvexInOneDistribution) {
  const Vector b = oracle::random_positive_distribution(5, 11);
  const Vector c = oracle::random_positive_distribution(5, 12);
  const Vector prior = vec({0.2, 0.3, 0.5});
  const auto f = [&](const Vector& d) {
    const std::vector<Vector> dists{b, d, c};
    return diayn_objective(dists, prior);
  };
  EXPECT_TRUE(oracle::convexity_probe(f, 5, 1000, 6).passed());
}

TEST(ConvexityProbe, NegativeSquaredNormFails) {
  const auto f = [](const Vector& d) { return -d.squaredNorm(); };
  EXPECT_FALSE(oracle::convexity_probe(f, 3, 100, 4).passed());
}

TEST(ConvexityProbe, LinearFunctionUsesNoSlack) {
  const Vector w = vec({1.0, -2.0, 0.5});
  const auto f = [&](const Vector& d) { return w.dot(d); };
  const oracle::ConvexityReport r = oracle::convexity_probe(f, 3, 200, 5);
  EXPECT_TRUE(r.passed());
  EXPECT_LE(r.max_slack_used, 1e-15);
  EXPECT_NEAR(r.worst_gap, 0.0, 1e-15);
}

TEST(DiaynKlForm, MatchesDirectForm) {
  const std::vector<Vector> dists{oracle::random_positive_distribution(3, 1),
                                  oracle::random_positive_distribution(3, 2),
                                  oracle::random_positive_distribution(3, 3)};
  const Vector prior = vec({0.2, 0.3, 0.5});
  for (std::size_t z = 0; z < 3; ++z) {
    EXPECT_NEAR(oracle::diayn_term_kl_form(z, dists, prior), diayn_term(z, dists, prior), 1e-12);
  }
}

TEST(HullGrid, Examples) {
  const std::vector<Vector> pair{vec({1, 0}), vec({0, 1})};
  EXPECT_NEAR(oracle::hull_min_norm_check(pair, 0.001).min_norm, std::sqrt(2.0) / 2, 1e-3);
  const std::vector<Vector> single{vec({0.6, 0.8})};
  EXPECT_NEAR(oracle::hull_min_norm_check(single, 0.01).min_norm, 1.0, 1e-15);
  const std::vector<Vector> opposite{vec({1, 0}), vec({-1, 0})};
  EXPECT_NEAR(oracle::hull_min_norm_check(opposite, 0.01).min_norm, 0.0, 1e-12);
}

TEST(HullGrid, RejectsOversizedInputs) {
  const std::vector<Vector> five(5, vec({1, 0}));
  EXPECT_THROW(oracle::hull_min_norm_check(five, 0.1), InvalidArgument);
  const std::vector<Vector> four(4, vec({1, 0}));
  EXPECT_THROW(oracle::hull_min_norm_check(four, 1e-4), InvalidArgument);
  EXPECT_TRUE(oracle::hull_min_norm_check(four, 0.1).coarse);
}

TEST(MixPolicies, OccupancyIsConvexCombination) {
  const TabularMdp mdp = testing::random_mdp(3, 2, 3, 21);
  const auto en = oracle::enumerate_policies(mdp, mdp.extrinsic_reward());
  const std::vector<std::vector<int>> two{en.policies[1], en.policies[6]};
  const StochasticPolicy mixed = oracle::mix_policies(mdp, two, vec({0.3, 0.7}));
  const Vector expect = 0.3 * en.sfs[1] + 0.7 * en.sfs[6];
  EXPECT_LE((successor_features(mdp, mixed).psi - expect).norm(), 1e-10);
}

TEST(BiasReport, SymmetricChain) {
  TabularMdp mdp = testing::chain_mdp(testing::mat2(0.9, 0.1, 0.1, 0.9));
  RewardTable reward = RewardTable::Zero(2, 1);
  reward(0, 0) = 1.0;
  const StochasticPolicy pi = StochasticPolicy::uniform(2, 1);
  const std::vector<long> horizons{1, 100, 10000, 100000};
  const auto rows = oracle::estimator_bias_report(mdp, pi, reward, horizons, 20);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_GE(rows[0].mean_abs_error, 0.4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].mean_abs_error, rows[i - 1].mean_abs_error);
  }
  EXPECT_LT(rows.back().mean_abs_error, 0.005);
  EXPECT_EQ(rows.back().fraction_within, 1.0);
}

TEST(UnbiasedHorizon, HasFloor) {
  const TabularMdp mdp = testing::chain_mdp(testing::mat2(0.5, 0.5, 0.5, 0.5));
  EXPECT_EQ(oracle::unbiased_horizon(mdp, StochasticPolicy::uniform(2, 1)),
            oracle::kMinRolloutHorizon);
  const TabularMdp slow = testing::chain_mdp(testing::mat2(0.999, 0.001, 0.001, 0.999));
  EXPECT_GT(oracle::unbiased_horizon(slow, StochasticPolicy::uniform(2, 1)),
            oracle::kMinRolloutHorizon);
}

TEST(RolloutVariance, IidChainIsRewardVariance) {
  // Rows equal to the stationary law: consecutive states are independent.
  const TabularMdp mdp = testing::chain_mdp(testing::mat2(0.25, 0.75, 0.25, 0.75));
  RewardTable reward = RewardTable::Zero(2, 1);
  reward(0, 0) = 1.0;
  EXPECT_NEAR(oracle::rollout_asymptotic_variance(mdp, StochasticPolicy::uniform(2, 1), reward),
              0.25 * 0.75, 1e-12);
}

TEST(RolloutVariance, TwoStateClosedForm) {
  // Symmetric flip with stay probability p: sigma^2 = 1/4 * p / (1 - p).
  const TabularMdp mdp = testing::chain_mdp(testing::mat2(0.9, 0.1, 0.1, 0.9));
  RewardTable reward = RewardTable::Zero(2, 1);
  reward(0, 0) = 1.0;
  EXPECT_NEAR(oracle::rollout_asymptotic_variance(mdp, StochasticPolicy::uniform(2, 1), reward),
              0.25 * 0.9 / 0.1, 1e-10);
}

TEST(RolloutVariance, MatchesEmpiricalSpreadOfRollouts) {
  // Monte-Carlo oracle: T * Var(v_hat_T) over 400 independent rollouts.
  const TabularMdp mdp = testing::random_mdp(3, 2, 2, 31);
  const StochasticPolicy pi = StochasticPolicy::uniform(3, 2);
  const long T = 5000;
  double sum = 0.0, sum_sq = 0.0;
  const int n = 400;
  for (int k = 0; k < n; ++k) {
    const double v = monte_carlo_estimate(mdp, pi, mdp.extrinsic_reward(), T, 50 + k).v_hat;
    sum += v;
    sum_sq += v * v;
  }
  const double empirical = T * (sum_sq - sum * sum / n) / (n - 1);
  const double exact = oracle::rollout_asymptotic_variance(mdp, pi, mdp.extrinsic_reward());
  EXPECT_NEAR(empirical / exact, 1.0, 0.2);
}

TEST(ReliableHorizon, CoversSlowChainThatTwentyMixingTimesMisses) {
  EnvConfig cfg;
  cfg.kind = EnvKind::kChain;
  cfg.length = 6;
  const TabularMdp mdp = build_env(cfg);
  const StochasticPolicy pi = StochasticPolicy::uniform(mdp.n_states(), mdp.n_actions());
  const long base = oracle::unbiased_horizon(mdp, pi);
  const long T = oracle::reliable_horizon(mdp, pi, mdp.extrinsic_reward());
  EXPECT_GT(T, base);
  const std::vector<long> horizons{T};
  const auto rows = oracle::estimator_bias_report(mdp, pi, mdp.extrinsic_reward(), horizons, 200);
  EXPECT_GE(rows[0].fraction_within, 0.95);
}

TEST(ReliableHorizon, NeverBelowMixingRule) {
  const TabularMdp mdp = testing::random_mdp(4, 2, 2, 77);
  const StochasticPolicy pi = StochasticPolicy::uniform(4, 2);
  EXPECT_GE(oracle::reliable_horizon(mdp, pi, mdp.extrinsic_reward()),
            oracle::unbiased_horizon(mdp, pi));
  EXPECT_EQ(oracle::reliable_horizon(mdp, pi, RewardTable::Zero(4, 2)),
            oracle::unbiased_horizon(mdp, pi));
  EXPECT_THROW(oracle::reliable_horizon(mdp, pi, mdp.extrinsic_reward(), 0.0), InvalidArgument);
}

}  // namespace
}  // namespace divsf
