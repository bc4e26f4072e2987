#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "divsf/mdp_core.hpp"
#include "divsf/policy_set.hpp"

namespace divsf {

/// Minimizer of 0.5 ||psi||^2 over the convex hull of a finite vertex set.
struct MinNormResult {
  Vector point;
  /// Convex weights over the input vertices (zero outside the support).
  Vector coefficients;
};

/// Exact minimum-norm point of Co(vertices).
///
/// Up to kEnumerationLimit vertices the answer comes from support
/// enumeration (smallest support first, then lexicographic), which makes the
/// reported coefficients canonical; larger sets use Wolfe's active-set method.
MinNormResult min_norm_point(std::span<const Vector> vertices);
MinNormResult min_norm_point_enumerate(std::span<const Vector> vertices);
MinNormResult min_norm_point_wolfe(std::span<const Vector> vertices);

inline constexpr std::size_t kEnumerationLimit = 12;
inline constexpr double kDegenerateNorm = 1e-9;

struct WorstCaseReward {
  /// -psi_hat / ||psi_hat||, or zero when the hull contains the origin.
  Vector w;
  bool degenerate = false;
};

WorstCaseReward worst_case_reward(std::span<const Vector> vertices);

/// Game value min_{||w|| <= 1} max_k psi^k . w = -||min-norm point||.
double smp_value(std::span<const Vector> vertices);

/// Dictionary state of the fully corrective Frank-Wolfe iteration.
struct FwState {
  std::vector<Vector> vertices;
  Vector coefficients;
  Vector min_norm_point;
  double h = 0.0;          // 0.5 ||min_norm_point||^2
  double smp_value = 0.0;  // -||min_norm_point||

  static FwState from_vertices(std::vector<Vector> vertices);
};

struct GameOptions {
  std::uint64_t seed = 0;
  int max_iters = 50;
  /// Fully corrective FW stops once h <= epsilon.
  double epsilon = 0.5 * kDegenerateNorm * kDegenerateNorm;
  /// A new policy must beat the current game value by more than this.
  double improvement_tol = 1e-10;
};

struct GameRun {
  PolicySet set;
  /// Worst-case policy iteration: SMP value after each addition.
  /// Fully corrective FW: h after each addition.
  std::vector<double> trace;
  /// True when a stop rule fired before max_iters.
  bool converged = false;
};

/// argmax_pi psi(pi) . w, solved exactly by the occupancy LP on the reward
/// w . phi. Deterministic for a given direction of w.
PolicyEntry best_response(const TabularMdp& mdp, const Vector& w);

/// First policy shared by both game solvers: the best response to a
/// standard-normal weight vector drawn from `seed`.
PolicyEntry initial_game_policy(const TabularMdp& mdp, std::uint64_t seed);

/// Worst-case policy iteration: grow the set with best responses to the
/// current worst-case reward until no policy improves the SMP value.
GameRun run_wcpi(const TabularMdp& mdp, const GameOptions& opts);

/// Fully corrective Frank-Wolfe on h(psi) = 0.5 ||psi||^2 over the SF hull.
GameRun run_fcfw(const TabularMdp& mdp, const GameOptions& opts);

/// Least-squares slope of log(h_t - h_star) over the entries with a positive
/// gap, returned as the geometric contraction rate 1 - exp(slope). Returns
/// NaN when fewer than two entries qualify.
double fitted_contraction_rate(std::span<const double> h_trace, double h_star);

}  // namespace divsf
