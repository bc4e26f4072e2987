#include "divsf/mdp_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "divsf/errors.hpp"
#include "divsf/hash.hpp"
#include "divsf/linprog.hpp"
#include "divsf/random.hpp"

namespace divsf {
namespace {

constexpr double kStochasticTol = 1e-12;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_distribution(const Vector& p, const std::string& what) {
  if ((p.array() < 0.0).any()) {
    throw InvalidArgument(what + " has a negative entry");
  }
  if (std::abs(p.sum() - 1.0) > kStochasticTol) {
    std::ostringstream os;
    os.precision(17);
    os << what << " sums to " << p.sum() << ", expected 1";
    throw InvalidArgument(os.str());
  }
}

void require_row_stochastic(const Matrix& m, const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    require_distribution(m.row(r).transpose(),
                         what + " row " + std::to_string(r));
  }
}

void require_policy_shape(const TabularMdp& mdp, const StochasticPolicy& pi) {
  if (pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions()) {
    throw DimensionError("policy is " + shape(pi.probs()) + " but MDP has " +
                         std::to_string(mdp.n_states()) + " states and " +
                         std::to_string(mdp.n_actions()) + " actions");
  }
}

void require_reward_shape(const StochasticPolicy& pi,
                          const RewardTable& reward) {
  if (reward.rows() != pi.n_states() || reward.cols() != pi.n_actions()) {
    throw DimensionError("reward table is " + shape(reward) +
                         " but policy is " + shape(pi.probs()));
  }
}

std::string describe_chain(const Matrix& chain) {
  std::ostringstream os;
  os << "chain over " << chain.rows() << " states";
  if (chain.rows() <= 6) {
    os << " [";
    for (Eigen::Index r = 0; r < chain.rows(); ++r) {
      os << (r ? "; " : "");
      for (Eigen::Index c = 0; c < chain.cols(); ++c) {
        os << (c ? " " : "") << chain(r, c);
      }
    }
    os << "]";
  }
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureTensor

FeatureTensor::FeatureTensor(int n_states, int n_actions, Matrix rows)
    : n_states_(n_states), n_actions_(n_actions), rows_(std::move(rows)) {
  if (n_states <= 0 || n_actions <= 0) {
    throw InvalidArgument("feature tensor needs positive state/action counts");
  }
  if (rows_.rows() != static_cast<Eigen::Index>(n_states) * n_actions ||
      rows_.cols() == 0) {
    throw DimensionError("feature rows are " + shape(rows_) + ", expected " +
                         std::to_string(n_states * n_actions) + "xd");
  }
  if ((rows_.array() < 0.0).any() || (rows_.array() > 1.0).any() ||
      !rows_.allFinite()) {
    throw InvalidArgument("feature entries must lie in [0, 1]");
  }
}

FeatureTensor FeatureTensor::from_state_features(const Matrix& per_state,
                                                 int n_actions) {
  const int n_states = static_cast<int>(per_state.rows());
  Matrix rows(static_cast<Eigen::Index>(n_states) * n_actions,
              per_state.cols());
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) rows.row(s * n_actions + a) = per_state.row(s);
  }
  return FeatureTensor(n_states, n_actions, std::move(rows));
}

RewardTable FeatureTensor::project(const Vector& w) const {
  if (w.size() != dim()) {
    throw DimensionError("weight has " + std::to_string(w.size()) +
                         " entries, features have " + std::to_string(dim()));
  }
  const Vector flat = rows_ * w;
  RewardTable out(n_states_, n_actions_);
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) out(s, a) = flat(s * n_actions_ + a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// TabularMdp

TabularMdp::TabularMdp(std::vector<Matrix> transitions, FeatureTensor features,
                       RewardTable extrinsic_reward,
                       Vector initial_distribution)
    : n_states_(static_cast<int>(initial_distribution.size())),
      n_actions_(static_cast<int>(transitions.size())),
      transitions_(std::move(transitions)),
      features_(std::move(features)),
      extrinsic_reward_(std::move(extrinsic_reward)),
      initial_(std::move(initial_distribution)) {
  if (n_states_ <= 0 || n_actions_ <= 0) {
    throw InvalidArgument("MDP needs at least one state and one action");
  }
  for (int a = 0; a < n_actions_; ++a) {
    const Matrix& p = transitions_[a];
    if (p.rows() != n_states_ || p.cols() != n_states_) {
      throw DimensionError("transition for action " + std::to_string(a) +
                           " is " + shape(p));
    }
    require_row_stochastic(p, "transition P^" + std::to_string(a));
  }
  if (features_.n_states() != n_states_ || features_.n_actions() != n_actions_) {
    throw DimensionError("feature tensor does not match the MDP shape");
  }
  if (extrinsic_reward_.rows() != n_states_ ||
      extrinsic_reward_.cols() != n_actions_) {
    throw DimensionError("extrinsic reward is " + shape(extrinsic_reward_));
  }
  if (!extrinsic_reward_.allFinite()) {
    throw InvalidArgument("extrinsic reward must be finite");
  }
  require_distribution(initial_, "initial distribution");
}

std::uint64_t TabularMdp::fingerprint() const {
  Fnv1a h;
  h.add_u64(static_cast<std::uint64_t>(n_states_));
  h.add_u64(static_cast<std::uint64_t>(n_actions_));
  h.add_u64(static_cast<std::uint64_t>(feature_dim()));
  for (const Matrix& p : transitions_) {
    for (Eigen::Index i = 0; i < p.size(); ++i) h.add_double(p.data()[i]);
  }
  const Matrix& f = features_.rows();
  for (Eigen::Index i = 0; i < f.size(); ++i) h.add_double(f.data()[i]);
  for (Eigen::Index i = 0; i < extrinsic_reward_.size(); ++i) {
    h.add_double(extrinsic_reward_.data()[i]);
  }
  for (Eigen::Index i = 0; i < initial_.size(); ++i) h.add_double(initial_(i));
  return h.digest();
}

// ---------------------------------------------------------------------------
// StochasticPolicy

StochasticPolicy::StochasticPolicy(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0) {
    throw InvalidArgument("policy table must be non-empty");
  }
  require_row_stochastic(probs_, "policy");
}

StochasticPolicy StochasticPolicy::uniform(int n_states, int n_actions) {
  return StochasticPolicy(
      Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

StochasticPolicy StochasticPolicy::deterministic(std::span<const int> actions,
                                                 int n_actions) {
  Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(actions.size()),
                              n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) {
      throw InvalidArgument("action " + std::to_string(actions[s]) +
                            " out of range in state " + std::to_string(s));
    }
    probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return StochasticPolicy(std::move(probs));
}

// ---------------------------------------------------------------------------
// Operations

RunningAverage update_running_average(RunningAverage avg, double sample) {
  avg.value = avg.decay * avg.value + (1.0 - avg.decay) * sample;
  return avg;
}

Matrix policy_transition(const TabularMdp& mdp, const StochasticPolicy& pi) {
  require_policy_shape(mdp, pi);
  Matrix out = Matrix::Zero(mdp.n_states(), mdp.n_states());
  for (int a = 0; a < mdp.n_actions(); ++a) {
    out += pi.probs().col(a).asDiagonal() * mdp.transition(a);
  }
  return out;
}

Vector policy_reward(const StochasticPolicy& pi, const RewardTable& reward) {
  require_reward_shape(pi, reward);
  return pi.probs().cwiseProduct(reward).rowwise().sum();
}

StationaryDistribution stationary_distribution(const Matrix& chain,
                                               double tol) {
  const Eigen::Index n = chain.rows();
  if (n == 0 || chain.cols() != n) {
    throw DimensionError("chain must be square, got " + shape(chain));
  }
  const Matrix balance = chain.transpose() - Matrix::Identity(n, n);

  // Singular values only; bidiagonal divide-and-conquer scales far better
  // than one-sided Jacobi for the larger chains.
  const Eigen::BDCSVD<Matrix> svd(balance);
  const Vector sv = svd.singularValues();
  const double threshold = 1e-9 * std::max(1.0, sv(0));
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= threshold) ++nullity;
  }
  if (nullity > 1) {
    throw NonErgodicError("non-ergodic " + describe_chain(chain) + ": " +
                              std::to_string(nullity) +
                              " independent stationary distributions",
                          nullity);
  }

  Matrix system(n + 1, n);
  system << balance, Matrix::Ones(1, n);
  Vector rhs = Vector::Zero(n + 1);
  rhs(n) = 1.0;
  Vector d = system.colPivHouseholderQr().solve(rhs);
  d = d.cwiseMax(0.0);
  d /= d.sum();

  const double residual = (d.transpose() * chain - d.transpose()).lpNorm<1>();
  if (!(residual <= tol)) {
    throw InternalError("stationary solve residual " +
                        std::to_string(residual) + " exceeds tolerance for " +
                        describe_chain(chain));
  }
  return {std::move(d)};
}

StationaryDistribution stationary_distribution(const TabularMdp& mdp,
                                               const StochasticPolicy& pi,
                                               double tol) {
  return stationary_distribution(policy_transition(mdp, pi), tol);
}

SuccessorFeatures successor_features(const TabularMdp& mdp,
                                     const StochasticPolicy& pi) {
  return successor_features(mdp, pi, stationary_distribution(mdp, pi));
}

SuccessorFeatures successor_features(const TabularMdp& mdp,
                                     const StochasticPolicy& pi,
                                     const StationaryDistribution& d) {
  require_policy_shape(mdp, pi);
  if (d.d.size() != mdp.n_states()) {
    throw DimensionError("stationary distribution length mismatch");
  }
  const FeatureTensor& phi = mdp.features();
  Vector psi = Vector::Zero(phi.dim());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double weight = d.d(s) * pi(s, a);
      if (weight != 0.0) psi += weight * phi.at(s, a).transpose();
    }
  }
  return {std::move(psi)};
}

double average_value(const SuccessorFeatures& sf, const Vector& w) {
  if (sf.psi.size() != w.size()) {
    throw DimensionError("successor features have " +
                         std::to_string(sf.psi.size()) +
                         " entries but weight has " + std::to_string(w.size()));
  }
  return sf.psi.dot(w);
}

double average_value(const StationaryDistribution& d,
                     const StochasticPolicy& pi, const RewardTable& reward) {
  const Vector r_pi = policy_reward(pi, reward);
  if (d.d.size() != r_pi.size()) {
    throw DimensionError("stationary distribution length mismatch");
  }
  return d.d.dot(r_pi);
}

double policy_value(const TabularMdp& mdp, const StochasticPolicy& pi,
                    const RewardTable& reward) {
  return average_value(stationary_distribution(mdp, pi), pi, reward);
}

long mixing_time(const Matrix& chain, double epsilon, long max_horizon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidArgument("mixing epsilon must lie in (0, 1)");
  }
  const Vector d = stationary_distribution(chain).d;
  const Eigen::RowVectorXd d_row = d.transpose();
  Matrix power = chain;
  double tv = 1.0;
  for (long t = 1; t <= max_horizon; ++t) {
    tv = 0.0;
    for (Eigen::Index x = 0; x < power.rows(); ++x) {
      tv = std::max(tv, 0.5 * (power.row(x) - d_row).lpNorm<1>());
    }
    if (tv <= epsilon) return t;
    power = power * chain;
  }
  throw MixingTimeoutError("chain did not mix within " +
                               std::to_string(max_horizon) +
                               " steps; last TV distance " + std::to_string(tv),
                           max_horizon, tv);
}

long mixing_time(const TabularMdp& mdp, const StochasticPolicy& pi,
                 double epsilon, long max_horizon) {
  return mixing_time(policy_transition(mdp, pi), epsilon, max_horizon);
}

TrajectoryEstimate monte_carlo_estimate(const TabularMdp& mdp,
                                        const StochasticPolicy& pi,
                                        const RewardTable& reward, long T,
                                        std::uint64_t seed) {
  require_policy_shape(mdp, pi);
  require_reward_shape(pi, reward);
  if (T < 1) throw InvalidArgument("trajectory length must be positive");

  Rng rng(seed);
  const FeatureTensor& phi = mdp.features();
  int s = sample_index(mdp.initial_distribution(), rng);
  double reward_sum = 0.0;
  Vector feature_sum = Vector::Zero(phi.dim());
  for (long t = 0; t < T; ++t) {
    const int a = sample_index(pi.probs().row(s), rng);
    reward_sum += reward(s, a);
    feature_sum += phi.at(s, a).transpose();
    s = sample_index(mdp.transition(a).row(s), rng);
  }
  TrajectoryEstimate out;
  out.v_hat = reward_sum / static_cast<double>(T);
  out.psi_hat = feature_sum / static_cast<double>(T);
  out.horizon = T;
  out.seed = seed;
  return out;
}

DifferentialValues differential_values(const Matrix& chain,
                                       const Vector& reward,
                                       const StationaryDistribution& d) {
  const Eigen::Index n = chain.rows();
  if (reward.size() != n || d.d.size() != n) {
    throw DimensionError("Poisson equation operands disagree in length");
  }
  DifferentialValues out;
  out.gain = d.d.dot(reward);
  Matrix system(n + 1, n);
  system << Matrix::Identity(n, n) - chain, d.d.transpose();
  Vector rhs(n + 1);
  rhs << reward.array() - out.gain, 0.0;
  out.bias = system.colPivHouseholderQr().solve(rhs);
  return out;
}

Matrix occupancy_measure(const TabularMdp& mdp, const StochasticPolicy& pi) {
  const Vector d = stationary_distribution(mdp, pi).d;
  return d.asDiagonal() * pi.probs();
}

StochasticPolicy policy_from_occupancy(const Matrix& occupancy) {
  Matrix probs(occupancy.rows(), occupancy.cols());
  for (Eigen::Index s = 0; s < occupancy.rows(); ++s) {
    const double mass = occupancy.row(s).sum();
    if (mass > 1e-14) {
      probs.row(s) = occupancy.row(s).cwiseMax(0.0) / occupancy.row(s).cwiseMax(0.0).sum();
    } else {
      probs.row(s).setConstant(1.0 / static_cast<double>(occupancy.cols()));
    }
  }
  return StochasticPolicy(std::move(probs));
}

OccupancyConstraints occupancy_constraints(const TabularMdp& mdp) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  OccupancyConstraints out;
  out.A = Matrix::Zero(S + 1, S * A);
  out.b = Vector::Zero(S + 1);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int col = s * A + a;
      out.A(s, col) += 1.0;
      out.A.col(col).head(S) -= mdp.transition(a).row(s).transpose();
      out.A(S, col) = 1.0;
    }
  }
  out.b(S) = 1.0;
  return out;
}

OptimalPolicy optimal_average_policy(const TabularMdp& mdp,
                                     const RewardTable& reward) {
  if (reward.rows() != mdp.n_states() || reward.cols() != mdp.n_actions()) {
    throw DimensionError("reward table is " + shape(reward));
  }
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const OccupancyConstraints cons = occupancy_constraints(mdp);
  Vector c(S * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) c(s * A + a) = reward(s, a);
  }
  const lp::Solution sol = lp::solve_lexicographic(cons.A, cons.b, c);
  if (sol.status != lp::Status::kOptimal) {
    throw InternalError("occupancy LP is not solvable for a valid MDP");
  }
  Matrix x(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) x(s, a) = sol.x(s * A + a);
  }
  return {policy_from_occupancy(x), sol.objective};
}

}  // namespace divsf
