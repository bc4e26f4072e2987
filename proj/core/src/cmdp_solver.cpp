#include "divsf/cmdp_solver.hpp"

#include <cmath>
#include <limits>

#include "divsf/errors.hpp"
#include "divsf/linprog.hpp"

namespace divsf {
namespace {

void require_table(const TabularMdp& mdp, const RewardTable& r, const char* name) {
  if (r.rows() != mdp.n_states() || r.cols() != mdp.n_actions()) {
    throw DimensionError(std::string(name) + " does not match the MDP shape");
  }
  if (!r.allFinite()) throw InvalidArgument(std::string(name) + " is not finite");
}

struct Evaluation {
  Matrix chain;
  StationaryDistribution d;
  SuccessorFeatures psi;
  double v_e = 0.0;
  double v_d = 0.0;
};

Evaluation evaluate(const TabularMdp& mdp, const StochasticPolicy& pi,
                    const RewardTable& r_e, const RewardTable& r_d) {
  Evaluation ev;
  ev.chain = policy_transition(mdp, pi);
  ev.d = stationary_distribution(ev.chain);
  ev.psi = successor_features(mdp, pi, ev.d);
  ev.v_e = average_value(ev.d, pi, r_e);
  ev.v_d = average_value(ev.d, pi, r_d);
  return ev;
}

// Advantages Q(s,a) - h(s) of the policy under `reward`, from the Poisson
// equation.
Matrix advantages_at(const TabularMdp& mdp, const StochasticPolicy& pi,
                     const Matrix& chain, const StationaryDistribution& d,
                     const RewardTable& reward) {
  const DifferentialValues dv =
      differential_values(chain, policy_reward(pi, reward), d);
  const int A = mdp.n_actions();
  Matrix adv(mdp.n_states(), A);
  for (int a = 0; a < A; ++a) {
    adv.col(a) = (reward.col(a).array() - dv.gain +
                  (mdp.transition(a) * dv.bias).array() - dv.bias.array())
                     .matrix();
  }
  return adv;
}

// d(s) pi(a|s) A(s,a): the gradient of the average reward in theta.
Matrix gradient_at(const TabularMdp& mdp, const StochasticPolicy& pi,
                   const Matrix& chain, const StationaryDistribution& d,
                   const RewardTable& reward) {
  const Matrix adv = advantages_at(mdp, pi, chain, d, reward);
  return d.d.asDiagonal() * pi.probs().cwiseProduct(adv);
}

}  // namespace

void CmdpSpec::validate(const TabularMdp& mdp) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  if (!std::isfinite(v_star)) throw InvalidArgument("v_star must be finite");
  require_table(mdp, diversity_reward, "diversity reward");
  require_table(mdp, constraint_reward, "constraint reward");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double LagrangeState::sigma() const { return sigmoid(lambda); }

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

SoftmaxPolicyParams SoftmaxPolicyParams::zeros(int n_states, int n_actions) {
  return {Matrix::Zero(n_states, n_actions)};
}

StochasticPolicy SoftmaxPolicyParams::policy() const {
  Matrix probs(theta.rows(), theta.cols());
  for (Eigen::Index s = 0; s < theta.rows(); ++s) {
    const double m = theta.row(s).maxCoeff();
    probs.row(s) = (theta.row(s).array() - m).exp().matrix();
    probs.row(s) /= probs.row(s).sum();
  }
  return StochasticPolicy(std::move(probs));
}

RewardTable combined_reward(double lambda, const RewardTable& r_e,
                            const RewardTable& r_d) {
  if (r_e.rows() != r_d.rows() || r_e.cols() != r_d.cols()) {
    throw DimensionError("combined_reward: reward tables differ in shape");
  }
  const double s = sigmoid(lambda);
  return s * r_e + (1.0 - s) * r_d;
}

double lagrange_objective(const LagrangeState& state, double v_hat, double alpha,
                          double v_star) {
  const double s = state.sigma();
  return s * (v_hat - alpha * v_star) - state.entropy_weight * binary_entropy(s);
}

double lagrange_gradient(const LagrangeState& state, double alpha, double v_star) {
  const double s = state.sigma();
  const double slack = state.v_hat.value - alpha * v_star;
  // dH/dsigma = ln((1 - sigma) / sigma), written with logs of the sigmoid
  // so that it stays finite when sigma saturates.
  const double log_ratio = -state.lambda;
  return s * (1.0 - s) * (slack - state.entropy_weight * log_ratio);
}

LagrangeState lagrange_step(LagrangeState state, double alpha, double v_star) {
  state.lambda -= state.learning_rate * lagrange_gradient(state, alpha, v_star);
  return state;
}

Matrix softmax_policy_gradient(const TabularMdp& mdp,
                               const SoftmaxPolicyParams& params,
                               const RewardTable& reward) {
  const StochasticPolicy pi = params.policy();
  const Matrix chain = policy_transition(mdp, pi);
  return gradient_at(mdp, pi, chain, stationary_distribution(chain), reward);
}

CmdpSolution solve_cmdp_lp(const TabularMdp& mdp, const CmdpSpec& spec) {
  spec.validate(mdp);
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const OccupancyConstraints occ = occupancy_constraints(mdp);
  const int n = S * A;

  Matrix a_eq = Matrix::Zero(occ.A.rows() + 1, n + 1);
  a_eq.topLeftCorner(occ.A.rows(), n) = occ.A;
  Vector b_eq(occ.b.size() + 1);
  b_eq << occ.b, spec.threshold();
  Vector c = Vector::Zero(n + 1);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      a_eq(occ.A.rows(), s * A + a) = spec.constraint_reward(s, a);
      c(s * A + a) = spec.diversity_reward(s, a);
    }
  }
  a_eq(occ.A.rows(), n) = -1.0;

  const lp::Solution sol = lp::solve_lexicographic(a_eq, b_eq, c);
  if (sol.status == lp::Status::kInfeasible) {
    const double best = optimal_average_policy(mdp, spec.constraint_reward).value;
    throw ConstraintInfeasible(
        "constraint value " + std::to_string(spec.threshold()) +
            " is not achievable; best achievable is " + std::to_string(best),
        best);
  }
  if (sol.status != lp::Status::kOptimal) {
    throw InternalError("CMDP occupancy LP is unbounded");
  }
  Matrix x(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) x(s, a) = sol.x(s * A + a);
  }
  CmdpSolution out;
  out.policy = policy_from_occupancy(x);
  const Evaluation ev =
      evaluate(mdp, out.policy, spec.constraint_reward, spec.diversity_reward);
  out.v_d = ev.v_d;
  out.v_e = ev.v_e;
  return out;
}

std::string_view to_string(PrimalDualSource source) {
  switch (source) {
    case PrimalDualSource::kAveraged: return "averaged";
    case PrimalDualSource::kFinal: return "final";
    case PrimalDualSource::kBestFeasible: return "best_feasible";
    case PrimalDualSource::kBestConstraint: return "best_constraint";
  }
  return "unknown";
}

PrimalDualResult solve_cmdp_primal_dual(const TabularMdp& mdp,
                                        const CmdpSpec& spec,
                                        const LagrangeState& initial,
                                        const PrimalDualConfig& config,
                                        std::uint64_t seed) {
  spec.validate(mdp);
  if (config.max_steps < 1) throw InvalidArgument("max_steps must be positive");
  if (initial.update_period < 1) throw InvalidArgument("update_period must be positive");
  if (!(config.logit_range >= 0.0)) throw InvalidArgument("logit_range must be >= 0");
  if (!(config.average_from >= 0.0 && config.average_from < 1.0)) {
    throw InvalidArgument("average_from must lie in [0, 1)");
  }

  const double tol = config.feasibility_tolerance * std::abs(spec.v_star) + 1e-12;
  auto is_feasible = [&](double v_e) { return v_e >= spec.threshold() - tol; };

  SoftmaxPolicyParams params =
      SoftmaxPolicyParams::zeros(mdp.n_states(), mdp.n_actions());
  LagrangeState lagrange = initial;
  lagrange.v_hat.value = 0.0;
  const double psi_decay = lagrange.v_hat.decay;
  Vector psi_hat = Vector::Zero(mdp.feature_dim());
  RewardTable r_d = spec.diversity_reward;

  const int average_start =
      static_cast<int>(std::floor(config.average_from * config.max_steps)) + 1;
  Matrix occupancy_sum = Matrix::Zero(mdp.n_states(), mdp.n_actions());
  double sigma_sum = 0.0;
  int averaged_steps = 0;

  PrimalDualResult result;
  result.trace.reserve(static_cast<std::size_t>(config.max_steps));

  struct Candidate {
    StochasticPolicy policy;
    double v_e = -std::numeric_limits<double>::infinity();
    double v_d = -std::numeric_limits<double>::infinity();
    double sigma = 0.0;
  };
  Candidate best_feasible;
  Candidate best_constraint;
  bool have_feasible = false;

  StochasticPolicy pi = params.policy();
  Evaluation ev = evaluate(mdp, pi, spec.constraint_reward, r_d);

  for (int step = 1; step <= config.max_steps; ++step) {
    Vector psi_sample = ev.psi.psi;
    double v_e_sample = ev.v_e;
    if (config.sampled) {
      const TrajectoryEstimate est = monte_carlo_estimate(
          mdp, pi, spec.constraint_reward, config.rollout_horizon,
          seed + static_cast<std::uint64_t>(step));
      psi_sample = est.psi_hat;
      v_e_sample = est.v_hat;
    }
    psi_hat = psi_decay * psi_hat + (1.0 - psi_decay) * psi_sample;
    if (spec.diversity_provider) {
      r_d = spec.diversity_provider(SuccessorFeatures{psi_hat});
    }

    const RewardTable reward = combined_reward(lagrange.lambda, spec.constraint_reward, r_d);
    // The natural gradient of a tabular softmax is the advantage table
    // itself (the Fisher preconditioner cancels the d(s) pi(a|s) weights).
    const Matrix direction =
        config.natural_gradient ? advantages_at(mdp, pi, ev.chain, ev.d, reward)
                                : gradient_at(mdp, pi, ev.chain, ev.d, reward);
    params.theta += config.policy_learning_rate * direction;
    if (config.logit_range > 0.0) {
      for (Eigen::Index s = 0; s < params.theta.rows(); ++s) {
        const double floor = params.theta.row(s).maxCoeff() - config.logit_range;
        params.theta.row(s) = params.theta.row(s).cwiseMax(floor);
      }
    }
    pi = params.policy();
    ev = evaluate(mdp, pi, spec.constraint_reward, r_d);

    lagrange.v_hat = update_running_average(lagrange.v_hat, v_e_sample);
    if (step % lagrange.update_period == 0) {
      lagrange = lagrange_step(lagrange, spec.alpha, spec.v_star);
    }

    if (step >= average_start) {
      occupancy_sum += ev.d.d.asDiagonal() * pi.probs();
      sigma_sum += lagrange.sigma();
      ++averaged_steps;
    }

    const bool feasible = is_feasible(ev.v_e);
    result.trace.push_back({step, ev.v_e, ev.v_d, lagrange.sigma(), feasible});
    if (feasible && (!have_feasible || ev.v_d > best_feasible.v_d)) {
      best_feasible = {pi, ev.v_e, ev.v_d, lagrange.sigma()};
      have_feasible = true;
    }
    if (ev.v_e > best_constraint.v_e) {
      best_constraint = {pi, ev.v_e, ev.v_d, lagrange.sigma()};
    }
  }

  auto take = [&](const Candidate& c, PrimalDualSource source, bool feasible) {
    result.policy = c.policy;
    result.v_e = c.v_e;
    result.v_d = c.v_d;
    result.sigma_lambda = c.sigma;
    result.source = source;
    result.feasible = feasible;
    result.converged =
        source == PrimalDualSource::kAveraged || source == PrimalDualSource::kFinal;
  };

  // The averaged occupancy measure is itself realized by a stationary policy,
  // whose values are the averages of the iterates' values.
  const StochasticPolicy averaged_pi =
      policy_from_occupancy(occupancy_sum / static_cast<double>(averaged_steps));
  const Evaluation averaged = evaluate(mdp, averaged_pi, spec.constraint_reward, r_d);
  const PrimalDualTraceRow& last = result.trace.back();

  if (is_feasible(averaged.v_e)) {
    take({averaged_pi, averaged.v_e, averaged.v_d, sigma_sum / averaged_steps},
         PrimalDualSource::kAveraged, true);
  } else if (last.feasible) {
    take({pi, ev.v_e, ev.v_d, last.sigma_lambda}, PrimalDualSource::kFinal, true);
  } else if (have_feasible) {
    take(best_feasible, PrimalDualSource::kBestFeasible, true);
  } else {
    take(best_constraint, PrimalDualSource::kBestConstraint, false);
  }
  return result;
}

}  // namespace divsf
