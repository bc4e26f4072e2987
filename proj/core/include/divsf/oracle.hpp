#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "divsf/mdp_core.hpp"

namespace divsf::oracle {

// Brute-force ground truth. Nothing here calls the LP, the min-norm solvers
// or the CMDP code it is used to check.

struct EnumerationResult {
  std::vector<std::vector<int>> policies;  // deterministic action tables
  std::vector<double> values;
  std::vector<Vector> sfs;

  std::size_t best_index() const;
  double best_value() const { return values[best_index()]; }
};

inline constexpr std::size_t kMaxEnumeratedPolicies = 1000000;

/// Every deterministic stationary policy, in lexicographic order of the
/// action table (state 0 most significant), with exact values and SFs.
EnumerationResult enumerate_policies(const TabularMdp& mdp, const RewardTable& reward);

struct ConvexityReport {
  int n_pairs = 0;
  int violations = 0;
  /// Largest f(mid) - (f(a) + f(b)) / 2 seen (may be negative).
  double worst_gap = 0.0;
  /// Largest positive part of that gap, i.e. how much slack was used.
  double max_slack_used = 0.0;

  bool passed() const { return violations == 0; }
};

/// Midpoint-convexity check of f on random strictly positive probability
/// vectors of length dim.
ConvexityReport convexity_probe(const std::function<double(const Vector&)>& f,
                                int dim, int n_pairs, std::uint64_t seed,
                                double slack = 1e-10);

/// Strictly positive random probability vector (Dirichlet(1) mixed with a
/// little uniform mass).
Vector random_positive_distribution(int dim, std::uint64_t seed);

/// The single-skill DIAYN term written as KL(d_z || sum_k p(k) d_k) + log p(z).
double diayn_term_kl_form(std::size_t z, std::span<const Vector> distributions,
                          const Vector& prior);

struct HullGridResult {
  double min_norm = 0.0;
  long grid_points = 0;
  /// Step above 0.05: the grid cannot resolve the hull well.
  bool coarse = false;
};

/// Minimum ||sum_i c_i v_i|| over the simplex grid {c : c_i in step * N}.
/// At most four vertices; throws InvalidArgument for more or for grids above
/// 5e7 points.
HullGridResult hull_min_norm_check(std::span<const Vector> vertices, double resolution);

/// Stochastic policy whose occupancy measure is the given convex combination
/// of the deterministic policies' occupancy measures; its SFs are the same
/// combination of their SFs.
StochasticPolicy mix_policies(const TabularMdp& mdp,
                              std::span<const std::vector<int>> policies,
                              const Vector& coefficients);

struct BiasRow {
  long horizon = 0;
  double mean_abs_error = 0.0;
  double max_abs_error = 0.0;
  /// Fraction of seeds with |error| <= tolerance_fraction * reward scale.
  double fraction_within = 0.0;
};

/// Monte-Carlo average-reward error against the exact value, per horizon.
std::vector<BiasRow> estimator_bias_report(const TabularMdp& mdp,
                                           const StochasticPolicy& pi,
                                           const RewardTable& reward,
                                           std::span<const long> horizons,
                                           int n_seeds,
                                           double tolerance_fraction = 0.05,
                                           std::uint64_t seed_base = 0);

inline constexpr long kMinRolloutHorizon = 1000;

/// max(20 * T_mix(0.05), kMinRolloutHorizon): the horizon at which rollout
/// error is expected to be below five percent of the reward scale.
long unbiased_horizon(const TabularMdp& mdp, const StochasticPolicy& pi);

/// Asymptotic variance sigma^2 of the running reward mean under pi, i.e.
/// T * Var(v_hat_T) as T grows: 2 <f, h>_mu - <f, f>_mu for the centred
/// reward f and its Poisson solution h on the state-action chain.
double rollout_asymptotic_variance(const TabularMdp& mdp, const StochasticPolicy& pi,
                                   const RewardTable& reward);

/// Normal quantile used to size rollouts: about 99% two-sided coverage.
inline constexpr double kRolloutCoverageQuantile = 2.576;

/// unbiased_horizon raised, where needed, until the central-limit error
/// z * sigma / sqrt(T) is within tolerance_fraction of the reward scale.
/// Slowly mixing chains with positively correlated rewards need this: there
/// the estimate is variance-limited well past twenty mixing times.
long reliable_horizon(const TabularMdp& mdp, const StochasticPolicy& pi,
                      const RewardTable& reward, double tolerance_fraction = 0.05);

}  // namespace divsf::oracle
