#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "divsf/mdp_core.hpp"

namespace divsf {

enum class EnvKind { kChain, kGridworld, kTwoState, kRandom };
enum class FeatureKind { kOneHotState, kTileCoarse, kXyNormalized, kRandomUniform };
enum class RewardKind { kGoal, kStandStill, kDistance, kRandom };

/// Builder parameters for the benchmark MDPs.
///
/// Gridworld actions are {up, down, left, right, stay}; chain actions are
/// {left, right, stay}; the two-state gadget has {stay, swap}; random MDPs
/// draw `n_actions` transition rows uniformly from the simplex.
///
/// Every builder mixes each transition row with the uniform distribution,
/// (1 - noise) P + noise U, so that every policy is ergodic when noise > 0.
struct EnvConfig {
  EnvKind kind = EnvKind::kGridworld;
  int length = 5;     // chain
  int width = 4;      // gridworld
  int height = 4;     // gridworld
  int n_states = 5;   // random
  int n_actions = 3;  // random
  FeatureKind feature_map = FeatureKind::kOneHotState;
  int tile_size = 2;    // tile_coarse
  int feature_dim = 3;  // random_uniform
  double noise = 0.01;
  RewardKind reward = RewardKind::kGoal;
  /// Goal cell for goal/distance rewards; drawn from the seed when unset.
  std::optional<int> goal_state;
  std::uint64_t seed = 0;
};

/// Builds the MDP described by cfg. Deterministic given cfg.seed.
/// Throws InvalidArgument for bad dimensions or unsupported combinations.
TabularMdp build_env(const EnvConfig& cfg);

/// The feature tensor a builder would attach, exposed for tests and plots.
FeatureTensor feature_map(const EnvConfig& cfg);

/// Row-major (x, y) grid position of a state, or (s, 0) for chains.
struct GridPos {
  int x = 0;
  int y = 0;
};
GridPos grid_position(const EnvConfig& cfg, int state);
/// Number of grid columns / rows used to lay states out for plotting.
int layout_width(const EnvConfig& cfg);
int layout_height(const EnvConfig& cfg);
int state_count(const EnvConfig& cfg);
int action_count(const EnvConfig& cfg);

std::string_view to_string(EnvKind k);
std::string_view to_string(FeatureKind k);
std::string_view to_string(RewardKind k);
std::optional<EnvKind> parse_env_kind(std::string_view s);
std::optional<FeatureKind> parse_feature_kind(std::string_view s);
std::optional<RewardKind> parse_reward_kind(std::string_view s);

}  // namespace divsf
