#include "divsf/dsp_driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "divsf/errors.hpp"
#include "divsf/robustness_fw.hpp"

namespace divsf {
namespace {

struct Estimate {
  SuccessorFeatures psi;
  double v_e = 0.0;
};

Estimate estimate(const TabularMdp& mdp, const StochasticPolicy& pi,
                  const RewardTable& r_e, const DspConfig& cfg, int iteration) {
  if (cfg.estimator == EstimatorKind::kExact) {
    const StationaryDistribution d = stationary_distribution(mdp, pi);
    return {successor_features(mdp, pi, d), average_value(d, pi, r_e)};
  }
  // Running averages over rollouts, started from zero for every policy.
  RunningAverage v{0.0, cfg.estimate_decay};
  Vector psi = Vector::Zero(mdp.feature_dim());
  for (int j = 0; j < cfg.mc_trajectories; ++j) {
    const std::uint64_t seed =
        cfg.seed * 1000003ULL + static_cast<std::uint64_t>(iteration) * 10007ULL +
        static_cast<std::uint64_t>(j);
    const TrajectoryEstimate est = monte_carlo_estimate(mdp, pi, r_e, cfg.mc_horizon, seed);
    v = update_running_average(v, est.v_hat);
    psi = cfg.estimate_decay * psi + (1.0 - cfg.estimate_decay) * est.psi_hat;
  }
  return {SuccessorFeatures{psi}, v.value};
}

// Constraint reward for iteration i (set = Psi^{i-1}).
RewardTable constraint_reward(const TabularMdp& mdp, const DspConfig& cfg,
                              const PolicySet& set) {
  const FeatureTensor& phi = mdp.features();
  switch (cfg.mechanism_e) {
    case ConstraintSource::kExtrinsic:
      return mdp.extrinsic_reward();
    case ConstraintSource::kRobustness:
      if (set.empty()) return mdp.extrinsic_reward();
      return reward_robustness(set, phi, cfg.mechanism_d.bounding, cfg.mechanism_d.tau).reward;
    case ConstraintSource::kDiscrimination: {
      if (set.empty()) return mdp.extrinsic_reward();
      PolicySet others = set;
      const SuccessorFeatures current = others.entries.back().psi;
      others.entries.pop_back();
      return reward_discrimination(others, current, Vector(), phi, false);
    }
  }
  return mdp.extrinsic_reward();
}

LagrangeState lagrange_from(const DspConfig& cfg) {
  LagrangeState st;
  st.entropy_weight = cfg.entropy_weight;
  st.learning_rate = cfg.lagrange_learning_rate;
  st.update_period = cfg.lagrange_period;
  st.v_hat = RunningAverage{0.0, cfg.estimate_decay};
  return st;
}

}  // namespace

void DspConfig::validate() const {
  if (n_policies < 1) throw InvalidArgument("n_policies must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  if (!(entropy_weight >= 0.0)) throw InvalidArgument("entropy_weight must be >= 0");
  if (!(lagrange_learning_rate > 0.0)) {
    throw InvalidArgument("lagrange_learning_rate must be positive");
  }
  if (lagrange_period < 1) throw InvalidArgument("lagrange_period must be positive");
  if (!(estimate_decay >= 0.0 && estimate_decay < 1.0)) {
    throw InvalidArgument("estimate_decay must lie in [0, 1)");
  }
  if (mc_horizon < 1 || mc_trajectories < 1) {
    throw InvalidArgument("Monte-Carlo horizon and trajectory count must be positive");
  }
  if (discrimination_refresh_rounds < 1) {
    throw InvalidArgument("discrimination_refresh_rounds must be positive");
  }
  mechanism_d.validate();
}

DspResult run_dsp(const TabularMdp& mdp, const DspConfig& cfg) {
  cfg.validate();
  const FeatureTensor& phi = mdp.features();
  DspResult result;
  PolicySet& set = result.set;

  // Initialization: the r_e-optimal policy defines v_e*.
  {
    const RewardTable r_e = constraint_reward(mdp, cfg, set);
    const OptimalPolicy opt = optimal_average_policy(mdp, r_e);
    const Estimate est = estimate(mdp, opt.policy, r_e, cfg, 0);
    set.add({opt.policy, est.psi, est.v_e});
    set.v_star = est.v_e;

    IterationRecord rec;
    rec.index = 0;
    rec.v_e = opt.value;
    rec.v_e_estimate = est.v_e;
    rec.v_star = est.v_e;
    result.records.push_back(std::move(rec));
  }

  for (int i = 1; i < cfg.n_policies; ++i) {
    const RewardTable r_e = constraint_reward(mdp, cfg, set);
    if (cfg.mechanism_e != ConstraintSource::kExtrinsic) {
      set.v_star = optimal_average_policy(mdp, r_e).value;
    }

    IterationRecord rec;
    rec.index = i;
    rec.v_star = set.v_star;

    CmdpSpec spec;
    spec.constraint_reward = r_e;
    spec.alpha = cfg.alpha;
    spec.v_star = set.v_star;

    const bool discrimination = cfg.mechanism_d.kind == MechanismKind::kDiscrimination;
    StochasticPolicy policy;
    RewardTable r_d;

    if (cfg.solver == SolverKind::kLp) {
      // An untrained skill: the discrimination reward of the new policy is
      // first evaluated at the uniform policy, then refreshed from each solve.
      // Starting from an existing entry's SFs makes the posterior flat over
      // that entry's states and the refresh never leaves the duplicate.
      SuccessorFeatures current = successor_features(
          mdp, StochasticPolicy::uniform(mdp.n_states(), mdp.n_actions()));
      const int rounds = discrimination ? cfg.discrimination_refresh_rounds : 1;
      for (int round = 0; round < rounds; ++round) {
        const DiversityReward dr =
            compute_diversity_reward(cfg.mechanism_d, set, phi, &current);
        r_d = dr.reward;
        rec.degenerate = dr.degenerate;
        spec.diversity_reward = r_d;
        try {
          policy = solve_cmdp_lp(mdp, spec).policy;
          rec.feasible = true;
        } catch (const ConstraintInfeasible&) {
          policy = optimal_average_policy(mdp, r_e).policy;
          rec.feasible = false;
        }
        current = successor_features(mdp, policy);
      }
    } else {
      const SuccessorFeatures zero{Vector::Zero(phi.dim())};
      const DiversityReward dr = compute_diversity_reward(cfg.mechanism_d, set, phi, &zero);
      rec.degenerate = dr.degenerate;
      spec.diversity_reward = dr.reward;
      if (discrimination) {
        const DiversityMechanism mech = cfg.mechanism_d;
        const PolicySet snapshot = set;
        spec.diversity_provider = [mech, snapshot, &phi](const SuccessorFeatures& psi_hat) {
          return compute_diversity_reward(mech, snapshot, phi, &psi_hat).reward;
        };
      }
      const PrimalDualResult pd = solve_cmdp_primal_dual(
          mdp, spec, lagrange_from(cfg), cfg.primal_dual,
          cfg.seed * 7919ULL + static_cast<std::uint64_t>(i));
      policy = pd.policy;
      rec.feasible = pd.feasible;
      rec.trace = pd.trace;
      r_d = spec.diversity_provider ? spec.diversity_provider(successor_features(mdp, policy))
                                    : spec.diversity_reward;
    }

    const StationaryDistribution d = stationary_distribution(mdp, policy);
    rec.v_e = average_value(d, policy, r_e);
    rec.v_d = average_value(d, policy, r_d);
    const Estimate est = estimate(mdp, policy, r_e, cfg, i);
    rec.v_e_estimate = est.v_e;

    set.add({policy, est.psi, est.v_e});
    set.v_star = std::max(set.v_star, est.v_e);
    result.records.push_back(std::move(rec));
  }

  result.metrics = diversity_metrics(set);
  return result;
}

DiversityMetrics diversity_metrics(const PolicySet& set) {
  DiversityMetrics m;
  const std::size_t n = set.size();
  m.min_distance_to_earlier.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (const PolicyEntry& e : set.entries) {
    m.value_ratios.push_back(set.v_star != 0.0 ? e.v_e / set.v_star
                                               : std::numeric_limits<double>::quiet_NaN());
  }
  if (n < 2) return m;
  double min_d = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t j = 1; j < n; ++j) {
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < j; ++i) {
      const double dist = (set.entries[i].psi.psi - set.entries[j].psi.psi).norm();
      closest = std::min(closest, dist);
      min_d = std::min(min_d, dist);
      sum += dist;
      ++pairs;
    }
    m.min_distance_to_earlier[j] = closest;
  }
  m.min_pairwise_distance = min_d;
  m.mean_pairwise_distance = sum / static_cast<double>(pairs);
  return m;
}

std::string_view to_string(ConstraintSource k) {
  switch (k) {
    case ConstraintSource::kExtrinsic: return "extrinsic";
    case ConstraintSource::kRobustness: return "robustness";
    case ConstraintSource::kDiscrimination: return "discrimination";
  }
  return "?";
}

std::string_view to_string(SolverKind k) {
  return k == SolverKind::kLp ? "lp" : "primal_dual";
}

std::string_view to_string(EstimatorKind k) {
  return k == EstimatorKind::kExact ? "exact" : "monte_carlo";
}

std::optional<ConstraintSource> parse_constraint_source(std::string_view s) {
  for (ConstraintSource k : {ConstraintSource::kExtrinsic, ConstraintSource::kRobustness,
                             ConstraintSource::kDiscrimination}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<SolverKind> parse_solver_kind(std::string_view s) {
  if (s == "lp") return SolverKind::kLp;
  if (s == "primal_dual") return SolverKind::kPrimalDual;
  return std::nullopt;
}

std::optional<EstimatorKind> parse_estimator_kind(std::string_view s) {
  if (s == "exact") return EstimatorKind::kExact;
  if (s == "monte_carlo") return EstimatorKind::kMonteCarlo;
  return std::nullopt;
}

}  // namespace divsf
