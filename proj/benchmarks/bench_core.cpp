#include <benchmark/benchmark.h>

#include <vector>

#include "divsf/dsp_driver.hpp"
#include "divsf/envs.hpp"
#include "divsf/mdp_core.hpp"
#include "divsf/random.hpp"
#include "divsf/robustness_fw.hpp"

namespace divsf {
namespace {

TabularMdp random_mdp(int n_states, int n_actions, std::uint64_t seed) {
  EnvConfig cfg;
  cfg.kind = EnvKind::kRandom;
  cfg.n_states = n_states;
  cfg.n_actions = n_actions;
  cfg.feature_map = FeatureKind::kRandomUniform;
  cfg.feature_dim = 4;
  cfg.reward = RewardKind::kRandom;
  cfg.seed = seed;
  return build_env(cfg);
}

TabularMdp gridworld(int side) {
  EnvConfig cfg;
  cfg.kind = EnvKind::kGridworld;
  cfg.width = side;
  cfg.height = side;
  cfg.seed = 1;
  return build_env(cfg);
}

void BM_StationaryDistribution(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const TabularMdp mdp = random_mdp(n, 4, 1);
  const Matrix p = policy_transition(mdp, StochasticPolicy::uniform(n, 4));
  for (auto _ : state) benchmark::DoNotOptimize(stationary_distribution(p).d.data());
  state.SetComplexityN(n);
}
BENCHMARK(BM_StationaryDistribution)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_OptimalPolicyLp(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const TabularMdp mdp = gridworld(side);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_average_policy(mdp, mdp.extrinsic_reward()).value);
  }
  state.counters["states"] = side * side;
}
BENCHMARK(BM_OptimalPolicyLp)->DenseRange(3, 7, 2)->Unit(benchmark::kMillisecond);

void BM_MinNormPoint(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  std::vector<Vector> vertices;
  for (int i = 0; i < n; ++i) {
    Vector v(6);
    for (int k = 0; k < 6; ++k) v(k) = uniform01(rng) - 0.3;
    vertices.push_back(v);
  }
  for (auto _ : state) benchmark::DoNotOptimize(min_norm_point(vertices).point.data());
}
// Enumeration below 13 vertices, Wolfe's method above.
BENCHMARK(BM_MinNormPoint)->Arg(4)->Arg(8)->Arg(12)->Arg(32)->Arg(128);

void BM_DspMinMechanism(benchmark::State& state) {
  const TabularMdp mdp = gridworld(4);
  DspConfig cfg;
  cfg.n_policies = static_cast<int>(state.range(0));
  cfg.mechanism_d.kind = MechanismKind::kMin;
  for (auto _ : state) benchmark::DoNotOptimize(run_dsp(mdp, cfg).set.size());
}
BENCHMARK(BM_DspMinMechanism)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace divsf

BENCHMARK_MAIN();
