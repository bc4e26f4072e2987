#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "divsf/cmdp_solver.hpp"
#include "divsf/diversity.hpp"
#include "divsf/policy_set.hpp"

namespace divsf {

/// Where the constraint reward r_e comes from. kExtrinsic uses the MDP's own
/// reward; the other two recompute r_e from the current set every iteration.
enum class ConstraintSource { kExtrinsic, kRobustness, kDiscrimination };
enum class SolverKind { kLp, kPrimalDual };
enum class EstimatorKind { kExact, kMonteCarlo };

struct DspConfig {
  int n_policies = 8;
  double alpha = 0.9;
  DiversityMechanism mechanism_d;
  ConstraintSource mechanism_e = ConstraintSource::kExtrinsic;
  SolverKind solver = SolverKind::kLp;
  EstimatorKind estimator = EstimatorKind::kExact;
  std::uint64_t seed = 0;

  double entropy_weight = 0.01;  // a_h
  double lagrange_learning_rate = 0.1;
  int lagrange_period = 30;      // N_lambda
  double estimate_decay = 0.9;   // a_d
  PrimalDualConfig primal_dual;

  long mc_horizon = 1000;
  int mc_trajectories = 50;
  /// LP solver with a discrimination reward: number of solve/re-estimate
  /// rounds used to refresh the current policy's SFs.
  int discrimination_refresh_rounds = 3;

  void validate() const;
};

struct IterationRecord {
  int index = 0;
  /// Exact constraint value of the policy under the r_e of its iteration.
  double v_e = 0.0;
  /// The value the driver saw (exact or Monte-Carlo).
  double v_e_estimate = 0.0;
  double v_d = 0.0;
  /// v_e* in force when the policy was solved for.
  double v_star = 0.0;
  bool feasible = true;
  bool degenerate = false;
  std::vector<PrimalDualTraceRow> trace;
};

struct DiversityMetrics {
  std::optional<double> min_pairwise_distance;
  std::optional<double> mean_pairwise_distance;
  std::vector<double> value_ratios;  // v_e / v_e*
  /// Distance from each policy's SFs to the closest earlier one (NaN for 0).
  std::vector<double> min_distance_to_earlier;
};

struct DspResult {
  PolicySet set;
  std::vector<IterationRecord> records;
  DiversityMetrics metrics;
};

/// Diverse successive policies: start from the r_e-optimal policy and grow
/// the set by solving one constrained MDP per iteration.
DspResult run_dsp(const TabularMdp& mdp, const DspConfig& cfg);

DiversityMetrics diversity_metrics(const PolicySet& set);

std::string_view to_string(ConstraintSource k);
std::string_view to_string(SolverKind k);
std::string_view to_string(EstimatorKind k);
std::optional<ConstraintSource> parse_constraint_source(std::string_view s);
std::optional<SolverKind> parse_solver_kind(std::string_view s);
std::optional<EstimatorKind> parse_estimator_kind(std::string_view s);

}  // namespace divsf
