#include "divsf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "divsf/errors.hpp"
#include "divsf/random.hpp"

namespace divsf::oracle {

std::size_t EnumerationResult::best_index() const {
  // First maximizer; values are exact so ties are genuine.
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

EnumerationResult enumerate_policies(const TabularMdp& mdp, const RewardTable& reward) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  double count = std::pow(static_cast<double>(A), S);
  if (count > static_cast<double>(kMaxEnumeratedPolicies)) {
    throw InvalidArgument("enumeration of " + std::to_string(count) +
                          " policies exceeds the cap");
  }
  EnumerationResult out;
  std::vector<int> actions(S, 0);
  while (true) {
    const StochasticPolicy pi = StochasticPolicy::deterministic(actions, A);
    const StationaryDistribution d = stationary_distribution(mdp, pi);
    out.policies.push_back(actions);
    out.values.push_back(average_value(d, pi, reward));
    out.sfs.push_back(successor_features(mdp, pi, d).psi);

    int s = S - 1;
    while (s >= 0 && actions[s] == A - 1) actions[s--] = 0;
    if (s < 0) break;
    ++actions[s];
  }
  return out;
}

Vector random_positive_distribution(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Vector d(dim);
  for (int i = 0; i < dim; ++i) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    d(i) = -std::log(u);
  }
  d /= d.sum();
  return 0.99 * d + Vector::Constant(dim, 0.01 / dim);
}

ConvexityReport convexity_probe(const std::function<double(const Vector&)>& f,
                                int dim, int n_pairs, std::uint64_t seed,
                                double slack) {
  ConvexityReport rep;
  rep.n_pairs = n_pairs;
  rep.worst_gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_pairs; ++i) {
    const Vector a = random_positive_distribution(dim, seed + 2ULL * i);
    const Vector b = random_positive_distribution(dim, seed + 2ULL * i + 1);
    const Vector mid = 0.5 * (a + b);
    const double gap = f(mid) - 0.5 * (f(a) + f(b));
    rep.worst_gap = std::max(rep.worst_gap, gap);
    rep.max_slack_used = std::max(rep.max_slack_used, gap);
    if (gap > slack) ++rep.violations;
  }
  return rep;
}

double diayn_term_kl_form(std::size_t z, std::span<const Vector> distributions,
                          const Vector& prior) {
  const Vector& dz = distributions[z];
  Vector mixture = Vector::Zero(dz.size());
  for (std::size_t k = 0; k < distributions.size(); ++k) {
    mixture += prior(static_cast<Eigen::Index>(k)) * distributions[k];
  }
  double kl = 0.0;
  for (Eigen::Index s = 0; s < dz.size(); ++s) kl += dz(s) * (std::log(dz(s)) - std::log(mixture(s)));
  return kl + std::log(prior(static_cast<Eigen::Index>(z)));
}

HullGridResult hull_min_norm_check(std::span<const Vector> vertices, double resolution) {
  const int n = static_cast<int>(vertices.size());
  if (n < 1 || n > 4) throw InvalidArgument("grid hull check supports 1 to 4 vertices");
  if (!(resolution > 0.0 && resolution <= 1.0)) {
    throw InvalidArgument("resolution must lie in (0, 1]");
  }
  const long steps = std::lround(1.0 / resolution);
  double points = 1.0;
  for (int k = 1; k < n; ++k) points *= static_cast<double>(steps + k) / k;
  if (points > 5e7) throw InvalidArgument("grid too fine for brute force");

  HullGridResult out;
  out.coarse = resolution > 0.05;
  out.min_norm = std::numeric_limits<double>::infinity();
  std::vector<long> c(n, 0);
  // Enumerate compositions c_0 + ... + c_{n-1} = steps.
  auto visit = [&](auto&& self, int idx, long remaining) -> void {
    if (idx == n - 1) {
      c[idx] = remaining;
      Vector p = Vector::Zero(vertices.front().size());
      for (int i = 0; i < n; ++i) p += (static_cast<double>(c[i]) / steps) * vertices[i];
      out.min_norm = std::min(out.min_norm, p.norm());
      ++out.grid_points;
      return;
    }
    for (long k = 0; k <= remaining; ++k) {
      c[idx] = k;
      self(self, idx + 1, remaining - k);
    }
  };
  visit(visit, 0, steps);
  return out;
}

StochasticPolicy mix_policies(const TabularMdp& mdp,
                              std::span<const std::vector<int>> policies,
                              const Vector& coefficients) {
  if (static_cast<Eigen::Index>(policies.size()) != coefficients.size()) {
    throw DimensionError("one coefficient per policy expected");
  }
  Matrix occupancy = Matrix::Zero(mdp.n_states(), mdp.n_actions());
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const double c = coefficients(static_cast<Eigen::Index>(k));
    if (c == 0.0) continue;
    const StochasticPolicy pi = StochasticPolicy::deterministic(policies[k], mdp.n_actions());
    occupancy += c * occupancy_measure(mdp, pi);
  }
  return policy_from_occupancy(occupancy);
}

std::vector<BiasRow> estimator_bias_report(const TabularMdp& mdp,
                                           const StochasticPolicy& pi,
                                           const RewardTable& reward,
                                           std::span<const long> horizons,
                                           int n_seeds, double tolerance_fraction,
                                           std::uint64_t seed_base) {
  const double exact = policy_value(mdp, pi, reward);
  const double scale = reward.cwiseAbs().maxCoeff();
  std::vector<BiasRow> rows;
  for (long T : horizons) {
    BiasRow row;
    row.horizon = T;
    int within = 0;
    for (int k = 0; k < n_seeds; ++k) {
      const double err = std::abs(
          monte_carlo_estimate(mdp, pi, reward, T, seed_base + static_cast<std::uint64_t>(k)).v_hat -
          exact);
      row.mean_abs_error += err;
      row.max_abs_error = std::max(row.max_abs_error, err);
      if (err <= tolerance_fraction * scale) ++within;
    }
    row.mean_abs_error /= n_seeds;
    row.fraction_within = static_cast<double>(within) / n_seeds;
    rows.push_back(row);
  }
  return rows;
}

long unbiased_horizon(const TabularMdp& mdp, const StochasticPolicy& pi) {
  // Fast-mixing chains still need enough samples for the variance of the
  // running mean, not just its bias, to fall below the tolerance.
  return std::max(20L * mixing_time(mdp, pi, 0.05), kMinRolloutHorizon);
}

double rollout_asymptotic_variance(const TabularMdp& mdp, const StochasticPolicy& pi,
                                   const RewardTable& reward) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  if (reward.rows() != S || reward.cols() != A || pi.n_states() != S || pi.n_actions() != A) {
    throw DimensionError("reward or policy shape does not match the MDP");
  }
  // Chain over (s, a) pairs, index s * A + a: the rollout reward is a
  // function of this chain's state, so its CLT variance is exact here.
  const int n = S * A;
  Matrix pair_chain(n, n);
  Vector f(n);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int i = s * A + a;
      f(i) = reward(s, a);
      for (int s2 = 0; s2 < S; ++s2) {
        for (int a2 = 0; a2 < A; ++a2) {
          pair_chain(i, s2 * A + a2) = mdp.transition(a)(s, s2) * pi(s2, a2);
        }
      }
    }
  }
  const StationaryDistribution mu = stationary_distribution(pair_chain);
  const DifferentialValues dv = differential_values(pair_chain, f, mu);
  const Vector centred = f.array() - dv.gain;
  const double variance =
      2.0 * mu.d.dot(centred.cwiseProduct(dv.bias)) - mu.d.dot(centred.cwiseAbs2());
  return std::max(variance, 0.0);
}

long reliable_horizon(const TabularMdp& mdp, const StochasticPolicy& pi,
                      const RewardTable& reward, double tolerance_fraction) {
  if (!(tolerance_fraction > 0.0)) throw InvalidArgument("tolerance_fraction must be positive");
  const long base = unbiased_horizon(mdp, pi);
  const double scale = reward.cwiseAbs().maxCoeff();
  if (scale == 0.0) return base;
  const double half_width = tolerance_fraction * scale / kRolloutCoverageQuantile;
  const double needed =
      std::ceil(rollout_asymptotic_variance(mdp, pi, reward) / (half_width * half_width));
  return std::max(base, static_cast<long>(needed));
}

}  // namespace divsf::oracle
