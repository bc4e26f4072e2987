#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "divsf/mdp_core.hpp"

namespace divsf {

/// maximize d_pi . r_d  subject to  d_pi . r_e >= alpha * v_star.
struct CmdpSpec {
  RewardTable diversity_reward;
  RewardTable constraint_reward;
  double alpha = 0.9;
  double v_star = 0.0;
  /// Optional policy-dependent diversity reward, called by the primal-dual
  /// loop with the running-average SFs of the current policy.
  std::function<RewardTable(const SuccessorFeatures&)> diversity_provider;

  double threshold() const { return alpha * v_star; }
  void validate(const TabularMdp& mdp) const;
};

/// Dual variable and its optimizer state. sigma(lambda) weights the
/// constraint reward, 1 - sigma(lambda) the diversity reward.
struct LagrangeState {
  double lambda = 0.0;
  double entropy_weight = 0.01;  // a_h
  double learning_rate = 0.1;    // eta
  int update_period = 30;        // N_lambda, in inner solver steps
  RunningAverage v_hat{0.0, 0.9};

  double sigma() const;
};

/// Tabular softmax actor: pi(a|s) proportional to exp(theta(s, a)).
struct SoftmaxPolicyParams {
  Matrix theta;

  static SoftmaxPolicyParams zeros(int n_states, int n_actions);
  StochasticPolicy policy() const;
};

double sigmoid(double x);

/// Natural-log binary entropy.
double binary_entropy(double p);

/// sigma(lambda) r_e + (1 - sigma(lambda)) r_d.
RewardTable combined_reward(double lambda, const RewardTable& r_e,
                            const RewardTable& r_d);

/// f(lambda) = sigma(lambda)(v_hat - alpha v_star) - a_h H(sigma(lambda)).
double lagrange_objective(const LagrangeState& state, double v_hat, double alpha,
                          double v_star);

/// df/dlambda at the state's lambda and running estimate.
double lagrange_gradient(const LagrangeState& state, double alpha, double v_star);

/// One gradient-descent step on f using state.v_hat.value.
LagrangeState lagrange_step(LagrangeState state, double alpha, double v_star);

/// Exact gradient of the average reward of softmax(theta) with respect to
/// theta, from the stationary distribution and the Poisson-equation bias.
Matrix softmax_policy_gradient(const TabularMdp& mdp,
                               const SoftmaxPolicyParams& params,
                               const RewardTable& reward);

struct CmdpSolution {
  StochasticPolicy policy;
  double v_d = 0.0;
  double v_e = 0.0;
};

/// Exact CMDP solution by the occupancy-measure LP with the extra value
/// constraint. Throws ConstraintInfeasible carrying the best achievable
/// constraint value.
CmdpSolution solve_cmdp_lp(const TabularMdp& mdp, const CmdpSpec& spec);

struct PrimalDualConfig {
  int max_steps = 100000;
  double policy_learning_rate = 0.5;
  /// Step along the natural gradient (the advantage table) instead of the
  /// plain gradient. The plain gradient of a near-deterministic softmax
  /// policy can keep reinforcing a suboptimal action for a very long time.
  bool natural_gradient = true;
  /// Estimate the constraint value and SFs from rollouts instead of exactly.
  bool sampled = false;
  long rollout_horizon = 1000;
  /// Iterates count as feasible when v_e >= alpha v_star - tol |v_star|.
  double feasibility_tolerance = 0.02;
  /// Per-state cap on max(theta) - theta(s, a); 0 disables it. Unbounded
  /// logits saturate while the multiplier favours one reward, and the actor
  /// then needs time exponential in the logit gap to follow a change of
  /// sigma(lambda).
  double logit_range = 5.0;
  /// Iterates after this fraction of max_steps enter the averaged solution.
  double average_from = 0.5;
};

struct PrimalDualTraceRow {
  int step = 0;
  double v_e = 0.0;
  double v_d = 0.0;
  double sigma_lambda = 0.0;
  bool feasible = false;
};

/// Which iterate a primal-dual run returned.
enum class PrimalDualSource {
  kAveraged,       // policy of the averaged occupancy measure of the tail
  kFinal,          // last iterate
  kBestFeasible,   // best feasible iterate (warning: not converged)
  kBestConstraint  // no feasible iterate; highest constraint value
};

std::string_view to_string(PrimalDualSource source);

struct PrimalDualResult {
  StochasticPolicy policy;
  double v_e = 0.0;
  double v_d = 0.0;
  double sigma_lambda = 0.0;
  bool feasible = false;
  PrimalDualSource source = PrimalDualSource::kAveraged;
  /// False when neither the averaged nor the final iterate was feasible and
  /// a fallback was returned.
  bool converged = true;
  std::vector<PrimalDualTraceRow> trace;
};

/// Sigmoid-Lagrangian primal-dual loop with an exact softmax policy-gradient
/// actor.
///
/// The last iterate of a Lagrangian game over deterministic-leaning policies
/// tends to cycle between the vertices adjacent to the constrained optimum,
/// so the returned policy is the one realizing the averaged occupancy
/// measure of the iterates after `average_from * max_steps`. If that policy
/// is infeasible the final iterate is tried, then the best feasible iterate
/// (converged = false), then the iterate with the highest constraint value
/// (feasible = false).
PrimalDualResult solve_cmdp_primal_dual(const TabularMdp& mdp,
                                        const CmdpSpec& spec,
                                        const LagrangeState& initial,
                                        const PrimalDualConfig& config,
                                        std::uint64_t seed);

}  // namespace divsf
