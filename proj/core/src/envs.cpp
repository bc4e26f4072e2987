#include "divsf/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include "divsf/errors.hpp"
#include "divsf/random.hpp"

namespace divsf {
namespace {

enum Stream : std::uint64_t { kDynamics = 1, kGoal = 2, kFeatures = 3, kReward = 4 };

Rng stream_rng(std::uint64_t seed, Stream stream) {
  return Rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stream));
}

void validate(const EnvConfig& cfg) {
  if (!(cfg.noise >= 0.0 && cfg.noise < 1.0)) {
    throw InvalidArgument("noise must lie in [0, 1)");
  }
  switch (cfg.kind) {
    case EnvKind::kChain:
      if (cfg.length < 2) throw InvalidArgument("chain length must be >= 2");
      break;
    case EnvKind::kGridworld:
      if (cfg.width < 1 || cfg.height < 1 || cfg.width * cfg.height < 2) {
        throw InvalidArgument("gridworld needs width, height >= 1 and >= 2 cells");
      }
      break;
    case EnvKind::kTwoState:
      break;
    case EnvKind::kRandom:
      if (cfg.n_states < 1 || cfg.n_actions < 1) {
        throw InvalidArgument("random MDP needs positive state/action counts");
      }
      break;
  }
  if (cfg.feature_map == FeatureKind::kTileCoarse && cfg.tile_size < 1) {
    throw InvalidArgument("tile_size must be positive");
  }
  if (cfg.feature_map == FeatureKind::kRandomUniform && cfg.feature_dim < 1) {
    throw InvalidArgument("feature_dim must be positive");
  }
  if (cfg.goal_state && (*cfg.goal_state < 0 || *cfg.goal_state >= state_count(cfg))) {
    throw InvalidArgument("goal_state out of range");
  }
}

// Deterministic successor of (s, a) before noise, or -1 for random MDPs.
int next_state(const EnvConfig& cfg, int s, int a) {
  switch (cfg.kind) {
    case EnvKind::kChain: {
      const int moves[3] = {-1, +1, 0};
      return std::clamp(s + moves[a], 0, cfg.length - 1);
    }
    case EnvKind::kGridworld: {
      const int x = s % cfg.width;
      const int y = s / cfg.width;
      const int dx[5] = {0, 0, -1, +1, 0};
      const int dy[5] = {-1, +1, 0, 0, 0};
      const int nx = x + dx[a];
      const int ny = y + dy[a];
      if (nx < 0 || nx >= cfg.width || ny < 0 || ny >= cfg.height) return s;
      return ny * cfg.width + nx;
    }
    case EnvKind::kTwoState:
      return a == 0 ? s : 1 - s;
    case EnvKind::kRandom:
      return -1;
  }
  return -1;
}

int stay_action(const EnvConfig& cfg) {
  switch (cfg.kind) {
    case EnvKind::kChain: return 2;
    case EnvKind::kGridworld: return 4;
    default: return 0;
  }
}

int goal_of(const EnvConfig& cfg) {
  if (cfg.goal_state) return *cfg.goal_state;
  switch (cfg.kind) {
    case EnvKind::kTwoState: return 0;
    case EnvKind::kChain: return cfg.length - 1;
    default: {
      Rng rng = stream_rng(cfg.seed, kGoal);
      return static_cast<int>(uniform01(rng) * state_count(cfg));
    }
  }
}

int manhattan(const EnvConfig& cfg, int s, int t) {
  const GridPos a = grid_position(cfg, s);
  const GridPos b = grid_position(cfg, t);
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

}  // namespace

int state_count(const EnvConfig& cfg) {
  switch (cfg.kind) {
    case EnvKind::kChain: return cfg.length;
    case EnvKind::kGridworld: return cfg.width * cfg.height;
    case EnvKind::kTwoState: return 2;
    case EnvKind::kRandom: return cfg.n_states;
  }
  return 0;
}

int action_count(const EnvConfig& cfg) {
  switch (cfg.kind) {
    case EnvKind::kChain: return 3;
    case EnvKind::kGridworld: return 5;
    case EnvKind::kTwoState: return 2;
    case EnvKind::kRandom: return cfg.n_actions;
  }
  return 0;
}

int layout_width(const EnvConfig& cfg) {
  return cfg.kind == EnvKind::kGridworld ? cfg.width : state_count(cfg);
}

int layout_height(const EnvConfig& cfg) {
  return cfg.kind == EnvKind::kGridworld ? cfg.height : 1;
}

GridPos grid_position(const EnvConfig& cfg, int state) {
  const int w = layout_width(cfg);
  return {state % w, state / w};
}

FeatureTensor feature_map(const EnvConfig& cfg) {
  validate(cfg);
  const int S = state_count(cfg);
  const int A = action_count(cfg);
  switch (cfg.feature_map) {
    case FeatureKind::kOneHotState:
      return FeatureTensor::from_state_features(Matrix::Identity(S, S), A);
    case FeatureKind::kTileCoarse: {
      if (cfg.kind == EnvKind::kRandom) {
        throw InvalidArgument("tile_coarse features need a spatial environment");
      }
      const int w = layout_width(cfg);
      const int h = layout_height(cfg);
      const int tiles_x = (w + cfg.tile_size - 1) / cfg.tile_size;
      const int tiles_y = (h + cfg.tile_size - 1) / cfg.tile_size;
      Matrix per_state = Matrix::Zero(S, tiles_x * tiles_y);
      for (int s = 0; s < S; ++s) {
        const GridPos p = grid_position(cfg, s);
        per_state(s, (p.y / cfg.tile_size) * tiles_x + p.x / cfg.tile_size) = 1.0;
      }
      return FeatureTensor::from_state_features(per_state, A);
    }
    case FeatureKind::kXyNormalized: {
      if (cfg.kind == EnvKind::kRandom) {
        throw InvalidArgument("xy_normalized features need a spatial environment");
      }
      const int w = layout_width(cfg);
      const int h = layout_height(cfg);
      Matrix per_state(S, 2);
      for (int s = 0; s < S; ++s) {
        const GridPos p = grid_position(cfg, s);
        per_state(s, 0) = w > 1 ? static_cast<double>(p.x) / (w - 1) : 0.0;
        per_state(s, 1) = h > 1 ? static_cast<double>(p.y) / (h - 1) : 0.0;
      }
      return FeatureTensor::from_state_features(per_state, A);
    }
    case FeatureKind::kRandomUniform: {
      Rng rng = stream_rng(cfg.seed, kFeatures);
      Matrix rows(S * A, cfg.feature_dim);
      for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = uniform01(rng);
      return FeatureTensor(S, A, std::move(rows));
    }
  }
  throw InvalidArgument("unknown feature map");
}

TabularMdp build_env(const EnvConfig& cfg) {
  validate(cfg);
  const int S = state_count(cfg);
  const int A = action_count(cfg);

  std::vector<Matrix> transitions(A, Matrix::Zero(S, S));
  if (cfg.kind == EnvKind::kRandom) {
    Rng rng = stream_rng(cfg.seed, kDynamics);
    for (int a = 0; a < A; ++a) {
      for (int s = 0; s < S; ++s) {
        // Dirichlet(1, ..., 1) row via normalized exponentials.
        for (int t = 0; t < S; ++t) {
          double u = uniform01(rng);
          while (u <= 0.0) u = uniform01(rng);
          transitions[a](s, t) = -std::log(u);
        }
        transitions[a].row(s) /= transitions[a].row(s).sum();
      }
    }
  } else {
    for (int a = 0; a < A; ++a) {
      for (int s = 0; s < S; ++s) transitions[a](s, next_state(cfg, s, a)) = 1.0;
    }
  }
  if (cfg.noise > 0.0) {
    for (Matrix& p : transitions) {
      p = (1.0 - cfg.noise) * p +
          Matrix::Constant(S, S, cfg.noise / static_cast<double>(S));
    }
  }

  RewardTable reward = RewardTable::Zero(S, A);
  switch (cfg.reward) {
    case RewardKind::kGoal:
      reward.row(goal_of(cfg)).setOnes();
      break;
    case RewardKind::kDistance: {
      if (cfg.kind == EnvKind::kRandom) {
        throw InvalidArgument("distance reward needs a spatial environment");
      }
      const int goal = goal_of(cfg);
      int max_dist = 0;
      for (int s = 0; s < S; ++s) max_dist = std::max(max_dist, manhattan(cfg, s, goal));
      for (int s = 0; s < S; ++s) {
        reward.row(s).setConstant(
            1.0 - static_cast<double>(manhattan(cfg, s, goal)) / std::max(1, max_dist));
      }
      break;
    }
    case RewardKind::kStandStill:
      reward.col(stay_action(cfg)).setOnes();
      break;
    case RewardKind::kRandom: {
      Rng rng = stream_rng(cfg.seed, kReward);
      for (Eigen::Index i = 0; i < reward.size(); ++i) reward.data()[i] = uniform01(rng);
      break;
    }
  }

  Vector initial;
  if (cfg.kind == EnvKind::kRandom) {
    initial = Vector::Constant(S, 1.0 / S);
  } else {
    initial = Vector::Zero(S);
    initial(0) = 1.0;
  }
  return TabularMdp(std::move(transitions), feature_map(cfg), std::move(reward),
                    std::move(initial));
}

std::string_view to_string(EnvKind k) {
  switch (k) {
    case EnvKind::kChain: return "chain";
    case EnvKind::kGridworld: return "gridworld";
    case EnvKind::kTwoState: return "two_state";
    case EnvKind::kRandom: return "random";
  }
  return "?";
}

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::kOneHotState: return "one_hot_state";
    case FeatureKind::kTileCoarse: return "tile_coarse";
    case FeatureKind::kXyNormalized: return "xy_normalized";
    case FeatureKind::kRandomUniform: return "random_uniform";
  }
  return "?";
}

std::string_view to_string(RewardKind k) {
  switch (k) {
    case RewardKind::kGoal: return "goal";
    case RewardKind::kStandStill: return "stand_still";
    case RewardKind::kDistance: return "distance";
    case RewardKind::kRandom: return "random";
  }
  return "?";
}

std::optional<EnvKind> parse_env_kind(std::string_view s) {
  for (EnvKind k : {EnvKind::kChain, EnvKind::kGridworld, EnvKind::kTwoState,
                    EnvKind::kRandom}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<FeatureKind> parse_feature_kind(std::string_view s) {
  for (FeatureKind k : {FeatureKind::kOneHotState, FeatureKind::kTileCoarse,
                        FeatureKind::kXyNormalized, FeatureKind::kRandomUniform}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<RewardKind> parse_reward_kind(std::string_view s) {
  for (RewardKind k : {RewardKind::kGoal, RewardKind::kStandStill,
                       RewardKind::kDistance, RewardKind::kRandom}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

}  // namespace divsf
