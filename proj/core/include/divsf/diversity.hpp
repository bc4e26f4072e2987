#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "divsf/mdp_core.hpp"
#include "divsf/policy_set.hpp"

namespace divsf {

enum class MechanismKind { kNone, kAverage, kMin, kDiscrimination, kRobustness };

/// Denominator choice for the exponential bounding transform.
///  - kAsWritten:   (1 - exp(-tau r~)) / (1 - exp(tau))
///  - kNormalized:  (1 - exp(-tau r~)) / (1 - exp(-tau)), maps r~ in [0,1]
///                  onto [0,1].
enum class BoundVariant { kAsWritten, kNormalized };

struct Bounding {
  bool enabled = true;
  BoundVariant variant = BoundVariant::kNormalized;
};

struct DiversityMechanism {
  MechanismKind kind = MechanismKind::kMin;
  /// Prior p(z) over the set plus the current policy (discrimination only).
  /// Empty means uniform.
  Vector prior;
  double tau = 3.0;
  Bounding bounding;
  /// Discrimination: use log p(z|s) - log p(z) instead of log p(z|s).
  bool subtract_log_prior = false;

  /// Throws InvalidArgument on tau <= 0 or a prior that is not a
  /// probability vector.
  void validate() const;
};

struct DiversityReward {
  RewardTable reward;
  /// Robustness only: the hull of the set contains the origin, reward is 0.
  bool degenerate = false;
  /// Linear weight behind the reward, when there is a single one.
  std::optional<Vector> w;
};

RewardTable reward_none(const FeatureTensor& phi);

/// w . phi with w the negated mean of the set's SFs.
RewardTable reward_average(const PolicySet& set, const FeatureTensor& phi,
                           const Bounding& bounding = {false}, double tau = 3.0);

/// min_k (-psi^k . phi); with bounding, each term is bounded before the min.
RewardTable reward_min(const PolicySet& set, const FeatureTensor& phi,
                       const Bounding& bounding = {false}, double tau = 3.0);

/// Log-posterior of the current policy under the Gibbs model
/// p(z|s) proportional to p(z) exp(phi(s) . psi^z), where the current policy
/// occupies the last index. `prior` has set.size() + 1 entries or is empty
/// (uniform).
RewardTable reward_discrimination(const PolicySet& set,
                                  const SuccessorFeatures& current,
                                  const Vector& prior, const FeatureTensor& phi,
                                  bool subtract_log_prior = false);

/// w . phi with w the worst-case unit reward against the set.
DiversityReward reward_robustness(const PolicySet& set, const FeatureTensor& phi,
                                  const Bounding& bounding = {false},
                                  double tau = 3.0);

/// Exponential squashing of a linear reward w . phi. Throws DegenerateWeight
/// when ||w|| = 0.
RewardTable bound_transform(const RewardTable& raw, const Vector& w, double tau,
                            BoundVariant variant = BoundVariant::kNormalized);

/// Dispatch on mechanism.kind. `current` is required for discrimination.
DiversityReward compute_diversity_reward(const DiversityMechanism& mechanism,
                                         const PolicySet& set,
                                         const FeatureTensor& phi,
                                         const SuccessorFeatures* current = nullptr);

/// sum_z p(z) sum_s d_z(s) log(d_z(s) p(z) / sum_k d_k(s) p(k)).
/// Throws StrictPositivityError on a zero entry.
double diayn_objective(std::span<const Vector> distributions, const Vector& prior);

/// The single-skill term sum_s d_z(s) log(d_z(s) p(z) / sum_k d_k(s) p(k)).
double diayn_term(std::size_t z, std::span<const Vector> distributions,
                  const Vector& prior);

/// Tabular Bayes posterior p(z|s) = d_z(s) p(z) / sum_k d_k(s) p(k), as an
/// n_skills x n_states matrix.
Matrix bayes_posterior(std::span<const Vector> distributions, const Vector& prior);

std::string_view to_string(MechanismKind k);
std::optional<MechanismKind> parse_mechanism_kind(std::string_view s);
std::string_view to_string(BoundVariant v);
std::optional<BoundVariant> parse_bound_variant(std::string_view s);

}  // namespace divsf
