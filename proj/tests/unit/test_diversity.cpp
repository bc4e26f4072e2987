#include <gtest/gtest.h>

#include <cmath>

#include "divsf/diversity.hpp"
#include "divsf/errors.hpp"
#include "divsf/oracle.hpp"
#include "divsf/random.hpp"
#include "divsf/robustness_fw.hpp"
#include "test_mdps.hpp"

namespace divsf {
namespace {

using testing::vec;

PolicySet set_of(std::initializer_list<Vector> sfs) {
  PolicySet set;
  for (const Vector& psi : sfs) {
    set.add(PolicyEntry{StochasticPolicy::uniform(1, 1), SuccessorFeatures{psi}, 0.0});
  }
  return set;
}

/// Single-state, single-action feature table holding phi.
FeatureTensor single(const Vector& phi) {
  return FeatureTensor(1, 1, phi.transpose());
}

/// Three states with features (1,0), (0,1), (0.5,0.5) for one action.
FeatureTensor three_states() {
  Matrix rows(3, 2);
  rows << 1, 0, 0, 1, 0.5, 0.5;
  return FeatureTensor(3, 1, rows);
}

TEST(RewardNone, AlwaysZero) {
  EXPECT_TRUE(reward_none(three_states()).isZero());
  const DiversityReward r =
      compute_diversity_reward(DiversityMechanism{MechanismKind::kNone}, PolicySet{}, three_states());
  EXPECT_TRUE(r.reward.isZero());
}

TEST(RewardAverage, SingleEntry) {
  EXPECT_EQ(reward_average(set_of({vec({1, 0})}), single(vec({1, 0})))(0, 0), -1.0);
}

TEST(RewardAverage, OppositeEntriesCancel) {
  // Features are in [0,1]; the cancellation is a property of the weight.
  EXPECT_TRUE(reward_average(set_of({vec({1, 0}), vec({-1, 0})}), three_states()).isZero());
}

TEST(RewardAverage, MatchesDirectMean) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    PolicySet set;
    Vector sum = Vector::Zero(2);
    for (int k = 0; k < 3; ++k) {
      const Vector psi = vec({uniform01(rng), uniform01(rng)});
      sum += psi;
      set.add(PolicyEntry{StochasticPolicy::uniform(1, 1), SuccessorFeatures{psi}, 0.0});
    }
    const RewardTable r = reward_average(set, three_states());
    const FeatureTensor phi = three_states();
    for (int s = 0; s < 3; ++s) {
      EXPECT_NEAR(r(s, 0), -(sum / 3.0).dot(phi.at(s, 0)), 1e-15);
    }
  }
}

TEST(RewardAverage, EmptySetThrows) {
  EXPECT_THROW(reward_average(PolicySet{}, three_states()), MechanismPrecondition);
}

TEST(RewardMin, BasisEvaluation) {
  EXPECT_EQ(reward_min(set_of({vec({1, 0}), vec({0, 1})}), single(vec({1, 0})))(0, 0), -1.0);
}

TEST(RewardMin, SingleEntryEqualsAverage) {
  const PolicySet set = set_of({vec({0.3, 0.6})});
  EXPECT_TRUE(reward_min(set, three_states()) == reward_average(set, three_states()));
}

TEST(RewardMin, DuplicateEntryIsIdempotent) {
  EXPECT_TRUE(reward_min(set_of({vec({0.3, 0.6}), vec({0.3, 0.6})}), three_states()) ==
              reward_min(set_of({vec({0.3, 0.6})}), three_states()));
}

TEST(RewardMin, EmptySetThrows) {
  EXPECT_THROW(reward_min(PolicySet{}, three_states()), MechanismPrecondition);
}

TEST(RewardMin, NeverAboveAverage) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    PolicySet set;
    for (int k = 0; k < 1 + trial % 5; ++k) {
      set.add(PolicyEntry{StochasticPolicy::uniform(1, 1),
                          SuccessorFeatures{vec({uniform01(rng), uniform01(rng)})}, 0.0});
    }
    const RewardTable mn = reward_min(set, three_states());
    const RewardTable av = reward_average(set, three_states());
    EXPECT_TRUE(((mn - av).array() <= 1e-15).all());
  }
}

TEST(RewardDiscrimination, IdenticalSfsGiveLogHalf) {
  const RewardTable r = reward_discrimination(set_of({vec({0.4, 0.2})}),
                                              SuccessorFeatures{vec({0.4, 0.2})}, Vector{},
                                              three_states());
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(r(s, 0), std::log(0.5), 1e-15);
}

TEST(RewardDiscrimination, SubtractLogPriorGivesZero) {
  const RewardTable r = reward_discrimination(set_of({vec({0.4, 0.2})}),
                                              SuccessorFeatures{vec({0.4, 0.2})}, Vector{},
                                              three_states(), true);
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RewardDiscrimination, HandEvaluatedGibbsPosterior) {
  const RewardTable r = reward_discrimination(set_of({vec({0, 1})}),
                                              SuccessorFeatures{vec({1, 0})}, Vector{},
                                              single(vec({1, 0})));
  EXPECT_NEAR(r(0, 0), -std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(r(0, 0), -0.3133, 5e-5);
}

TEST(RewardDiscrimination, EmptySetGivesZero) {
  const RewardTable r = reward_discrimination(PolicySet{}, SuccessorFeatures{vec({1, 0})},
                                              Vector{}, three_states());
  EXPECT_TRUE(r.isZero());
}

TEST(RewardDiscrimination, BadPriorThrows) {
  EXPECT_THROW(reward_discrimination(set_of({vec({0, 1})}), SuccessorFeatures{vec({1, 0})},
                                     vec({0.7, 0.7}), three_states()),
               InvalidArgument);
}

TEST(RewardDiscrimination, CommonOffsetInvariance) {
  // Adding c to every phi . psi^j leaves a log-softmax unchanged. With
  // phi = (1, 0) a common shift in the first SF coordinate does that.
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector a = vec({uniform01(rng), uniform01(rng)});
    const Vector b = vec({uniform01(rng), uniform01(rng)});
    const Vector shift = vec({uniform01(rng), 0});
    const RewardTable r1 = reward_discrimination(set_of({a}), SuccessorFeatures{b}, Vector{},
                                                 single(vec({1, 0})));
    const RewardTable r2 = reward_discrimination(set_of({Vector(a + shift)}),
                                                 SuccessorFeatures{Vector(b + shift)}, Vector{},
                                                 single(vec({1, 0})));
    EXPECT_NEAR(r1(0, 0), r2(0, 0), 1e-14);
  }
}

TEST(RewardDiscrimination, OneHotMatchesBayesPosterior) {
  // With one-hot features exp(phi . psi) is not d itself, but with the
  // prior folded in both models must yield valid log-probabilities.
  const std::vector<Vector> ds{vec({0.7, 0.3}), vec({0.2, 0.8})};
  const Matrix post = bayes_posterior(ds, vec({0.5, 0.5}));
  for (int s = 0; s < 2; ++s) EXPECT_NEAR(post.col(s).sum(), 1.0, 1e-15);
  EXPECT_NEAR(post(0, 0), 0.7 / 0.9, 1e-15);
}

TEST(RewardRobustness, SingletonWorstCase) {
  const DiversityReward r = reward_robustness(set_of({vec({0.6, 0.8})}), three_states());
  ASSERT_TRUE(r.w.has_value());
  EXPECT_NEAR((*r.w - vec({-0.6, -0.8})).norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.reward(0, 0), -0.6, 1e-12);
  EXPECT_FALSE(r.degenerate);
}

TEST(RewardRobustness, SymmetricPair) {
  const DiversityReward r = reward_robustness(set_of({vec({1, 0}), vec({0, 1})}), three_states());
  const double h = std::sqrt(0.5);
  EXPECT_NEAR((*r.w - vec({-h, -h})).norm(), 0.0, 1e-12);
}

TEST(RewardRobustness, OriginInHullIsDegenerate) {
  const DiversityReward r =
      reward_robustness(set_of({vec({1, 0}), vec({-1, 0}), vec({0, 1})}), three_states());
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.reward.isZero());
}

TEST(RewardRobustness, SeparatesTheWholeSet) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    PolicySet set;
    for (int k = 0; k < 1 + trial % 6; ++k) {
      set.add(PolicyEntry{StochasticPolicy::uniform(1, 1),
                          SuccessorFeatures{vec({uniform01(rng), uniform01(rng), uniform01(rng)})},
                          0.0});
    }
    Matrix rows = Matrix::Identity(3, 3);
    const DiversityReward r = reward_robustness(set, FeatureTensor(3, 1, rows));
    const double bound = smp_value(set.sfs());
    for (const Vector& psi : set.sfs()) EXPECT_LE(r.w->dot(psi), bound + 1e-9);
  }
}

TEST(RewardRobustness, EmptySetThrows) {
  EXPECT_THROW(reward_robustness(PolicySet{}, three_states()), MechanismPrecondition);
}

TEST(BoundTransform, NormalizedEndpoints) {
  const Vector w = vec({0.6, 0.8});
  RewardTable raw(2, 1);
  raw << 0.0, -1.0;  // w . phi = 0 and w . phi = -||w||^2
  const RewardTable r = bound_transform(raw, w, 3.0);
  EXPECT_NEAR(r(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(r(1, 0), 0.0, 1e-15);
}

TEST(BoundTransform, AsWrittenHandValue) {
  const RewardTable r =
      bound_transform(RewardTable::Zero(1, 1), vec({1, 0}), 3.0, BoundVariant::kAsWritten);
  EXPECT_NEAR(r(0, 0), (1 - std::exp(-3.0)) / (1 - std::exp(3.0)), 1e-15);
  EXPECT_NEAR(r(0, 0), -0.04979, 5e-6);
}

TEST(BoundTransform, ZeroWeightThrows) {
  EXPECT_THROW(bound_transform(RewardTable::Zero(1, 1), vec({0, 0}), 3.0), DegenerateWeight);
}

TEST(BoundTransform, NormalizedIsMonotoneIntoUnitInterval) {
  const Vector w = vec({0.3, 0.4});  // ||w||^2 = 0.25
  RewardTable raw(101, 1);
  for (int i = 0; i <= 100; ++i) raw(i, 0) = -0.25 + 0.25 * i / 100.0;
  const RewardTable r = bound_transform(raw, w, 3.0);
  for (int i = 0; i <= 100; ++i) {
    EXPECT_GE(r(i, 0), -1e-15);
    EXPECT_LE(r(i, 0), 1.0 + 1e-15);
    if (i > 0) EXPECT_GT(r(i, 0), r(i - 1, 0));
  }
}

TEST(BoundTransform, MinBoundsBeforeTakingMin) {
  // Bounded min is the min of bounded terms, and lies in [0,1].
  const PolicySet set = set_of({vec({1, 0}), vec({0, 1})});
  const RewardTable bounded = reward_min(set, three_states(), Bounding{}, 3.0);
  EXPECT_GE(bounded.minCoeff(), 0.0);
  EXPECT_LE(bounded.maxCoeff(), 1.0);
  const RewardTable t1 = bound_transform(-three_states().project(vec({1, 0})), vec({-1, 0}), 3.0);
  const RewardTable t2 = bound_transform(-three_states().project(vec({0, 1})), vec({0, -1}), 3.0);
  EXPECT_TRUE(bounded.isApprox(t1.cwiseMin(t2)));
}

TEST(MechanismConfig, ValidateRejectsBadTemperature) {
  DiversityMechanism m;
  m.tau = 0.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m.tau = 3.0;
  m.prior = vec({0.2, 0.2});
  EXPECT_THROW(m.validate(), InvalidArgument);
}

TEST(DiaynObjective, EqualDistributionsGiveMinusLogN) {
  const std::vector<Vector> ds{vec({0.3, 0.7}), vec({0.3, 0.7})};
  EXPECT_NEAR(diayn_objective(ds, vec({0.5, 0.5})), -std::log(2.0), 1e-15);
}

TEST(DiaynObjective, SingleSkillIsZero) {
  const std::vector<Vector> ds{vec({0.3, 0.7})};
  EXPECT_NEAR(diayn_objective(ds, vec({1.0})), 0.0, 1e-15);
}

TEST(DiaynObjective, MatchesKlForm) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<Vector> ds{oracle::random_positive_distribution(3, 2 * seed),
                                 oracle::random_positive_distribution(3, 2 * seed + 1)};
    const Vector prior = vec({0.5, 0.5});
    const double kl = 0.5 * oracle::diayn_term_kl_form(0, ds, prior) +
                      0.5 * oracle::diayn_term_kl_form(1, ds, prior);
    EXPECT_NEAR(diayn_objective(ds, prior), kl, 1e-14);
  }
}

TEST(DiaynObjective, ZeroEntryThrows) {
  const std::vector<Vector> ds{vec({0.0, 1.0}), vec({0.5, 0.5})};
  EXPECT_THROW(diayn_objective(ds, vec({0.5, 0.5})), StrictPositivityError);
}

TEST(DiaynObjective, MidpointConvexInOneSkill) {
  for (int trial = 0; trial < 10; ++trial) {
    const Vector other = oracle::random_positive_distribution(4, 1000 + trial);
    const Vector prior = vec({0.3, 0.7});
    auto f = [&](const Vector& d) {
      const std::vector<Vector> ds{d, other};
      return diayn_objective(ds, prior);
    };
    const auto rep = oracle::convexity_probe(f, 4, 200, 77 * trial);
    EXPECT_TRUE(rep.passed()) << "worst gap " << rep.worst_gap;
  }
}

TEST(Parse, MechanismNames) {
  for (auto k : {MechanismKind::kNone, MechanismKind::kAverage, MechanismKind::kMin,
                 MechanismKind::kDiscrimination, MechanismKind::kRobustness}) {
    EXPECT_EQ(parse_mechanism_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_bound_variant("as_written"), BoundVariant::kAsWritten);
  EXPECT_EQ(parse_bound_variant("normalized"), BoundVariant::kNormalized);
  EXPECT_FALSE(parse_mechanism_kind("vibes").has_value());
}

}  // namespace
}  // namespace divsf
