#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace divsf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Reward r(s, a) stored as an n_states x n_actions matrix.
using RewardTable = Eigen::MatrixXd;

/// Bounded feature map phi(s, a) in [0, 1]^dim, stored as one row per
/// state-action pair (row index s * n_actions + a).
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(int n_states, int n_actions, Matrix rows);

  /// Replicates per-state features (n_states x dim) across every action.
  static FeatureTensor from_state_features(const Matrix& per_state,
                                           int n_actions);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int dim() const { return static_cast<int>(rows_.cols()); }

  auto at(int s, int a) const { return rows_.row(s * n_actions_ + a); }
  const Matrix& rows() const { return rows_; }

  /// Table of w . phi(s, a).
  RewardTable project(const Vector& w) const;

 private:
  int n_states_ = 0;
  int n_actions_ = 0;
  Matrix rows_;
};

/// Finite average-reward MDP with per-action transition matrices, a bounded
/// feature map, an extrinsic reward and an initial state distribution.
class TabularMdp {
 public:
  /// Validates every invariant; throws InvalidArgument or DimensionError.
  TabularMdp(std::vector<Matrix> transitions, FeatureTensor features,
             RewardTable extrinsic_reward, Vector initial_distribution);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int feature_dim() const { return features_.dim(); }

  const Matrix& transition(int action) const { return transitions_[action]; }
  const std::vector<Matrix>& transitions() const { return transitions_; }
  const FeatureTensor& features() const { return features_; }
  const RewardTable& extrinsic_reward() const { return extrinsic_reward_; }
  const Vector& initial_distribution() const { return initial_; }

  /// Stable 64-bit digest of every number in the MDP.
  std::uint64_t fingerprint() const;

 private:
  int n_states_;
  int n_actions_;
  std::vector<Matrix> transitions_;
  FeatureTensor features_;
  RewardTable extrinsic_reward_;
  Vector initial_;
};

/// pi(a | s) as a row-stochastic n_states x n_actions table.
class StochasticPolicy {
 public:
  StochasticPolicy() = default;
  explicit StochasticPolicy(Matrix probs);

  static StochasticPolicy uniform(int n_states, int n_actions);
  static StochasticPolicy deterministic(std::span<const int> actions,
                                        int n_actions);

  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  const Matrix& probs() const { return probs_; }

  bool operator==(const StochasticPolicy& other) const {
    return probs_ == other.probs_;
  }

 private:
  Matrix probs_;
};

struct StationaryDistribution {
  Vector d;
};

struct SuccessorFeatures {
  Vector psi;
};

struct TrajectoryEstimate {
  double v_hat = 0.0;
  Vector psi_hat;
  long horizon = 0;
  std::uint64_t seed = 0;
};

/// Exponentially-decayed average: value <- decay * value + (1 - decay) * x.
struct RunningAverage {
  double value = 0.0;
  double decay = 0.9;
};

RunningAverage update_running_average(RunningAverage avg, double sample);

struct OptimalPolicy {
  StochasticPolicy policy;
  double value = 0.0;
};

/// Gain and bias (differential values) of a fixed policy.
struct DifferentialValues {
  double gain = 0.0;
  Vector bias;
};

/// Equality constraints of the occupancy-measure polytope: flow balance for
/// every state plus total mass one. Variables are x(s, a) at index
/// s * n_actions + a.
struct OccupancyConstraints {
  Matrix A;
  Vector b;
};

inline constexpr double kDefaultStationaryTol = 1e-10;
inline constexpr long kDefaultMixingHorizon = 100000;

/// P_pi[s][s'] = sum_a pi(a|s) P^a[s][s'].
Matrix policy_transition(const TabularMdp& mdp, const StochasticPolicy& pi);

/// r_pi(s) = sum_a pi(a|s) r(s, a).
Vector policy_reward(const StochasticPolicy& pi, const RewardTable& reward);

/// Unique stationary distribution of a row-stochastic matrix, by a direct
/// linear solve. Throws NonErgodicError when the fixed-point space has
/// dimension above one.
StationaryDistribution stationary_distribution(
    const Matrix& chain, double tol = kDefaultStationaryTol);
StationaryDistribution stationary_distribution(
    const TabularMdp& mdp, const StochasticPolicy& pi,
    double tol = kDefaultStationaryTol);

SuccessorFeatures successor_features(const TabularMdp& mdp,
                                     const StochasticPolicy& pi);
SuccessorFeatures successor_features(const TabularMdp& mdp,
                                     const StochasticPolicy& pi,
                                     const StationaryDistribution& d);

/// psi . w
double average_value(const SuccessorFeatures& sf, const Vector& w);
/// d . r_pi
double average_value(const StationaryDistribution& d,
                     const StochasticPolicy& pi, const RewardTable& reward);
/// Exact average reward of pi for an arbitrary reward table.
double policy_value(const TabularMdp& mdp, const StochasticPolicy& pi,
                    const RewardTable& reward);

/// Smallest t >= 1 with max_x TV(P^t(x, .), d) <= epsilon.
long mixing_time(const Matrix& chain, double epsilon,
                 long max_horizon = kDefaultMixingHorizon);
long mixing_time(const TabularMdp& mdp, const StochasticPolicy& pi,
                 double epsilon, long max_horizon = kDefaultMixingHorizon);

/// One rollout of length T from s0 ~ rho; returns the mean reward and mean
/// feature vector along it.
TrajectoryEstimate monte_carlo_estimate(const TabularMdp& mdp,
                                        const StochasticPolicy& pi,
                                        const RewardTable& reward, long T,
                                        std::uint64_t seed);

/// Solves the Poisson equation h = r_pi - g 1 + P_pi h with d . h = 0.
DifferentialValues differential_values(const Matrix& chain,
                                       const Vector& reward,
                                       const StationaryDistribution& d);

/// Stationary state-action frequencies x(s, a) = d(s) pi(a|s).
Matrix occupancy_measure(const TabularMdp& mdp, const StochasticPolicy& pi);

/// pi(a|s) = x(s,a) / sum_a x(s,a); uniform where the state has no mass.
StochasticPolicy policy_from_occupancy(const Matrix& occupancy);

OccupancyConstraints occupancy_constraints(const TabularMdp& mdp);

/// Average-reward optimal control by the occupancy-measure LP.
OptimalPolicy optimal_average_policy(const TabularMdp& mdp,
                                     const RewardTable& reward);

}  // namespace divsf
