#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "divsf/dsp_driver.hpp"

namespace divsf::cli {

inline constexpr int kPolicySetSchemaVersion = 1;
/// Primal-dual traces are thinned to at most this many rows per policy.
inline constexpr int kMaxTraceRows = 500;

/// Shortest decimal text that reads back as the same double.
std::string format_double(double x);
std::string hex64(std::uint64_t v);
std::string fnv1a_hex(const std::string& bytes);

struct StoredPolicy {
  int index = 0;
  Matrix pi;                 // n_states x n_actions
  Vector psi;
  Vector state_distribution;
  double v_e = 0.0;
};

/// Versioned policy-set file contents.
struct StoredPolicySet {
  std::string mdp_fingerprint;
  int n_states = 0;
  int n_actions = 0;
  int feature_dim = 0;
  double v_star = 0.0;
  std::vector<StoredPolicy> policies;
};

StoredPolicySet make_stored_set(const TabularMdp& mdp, const DspResult& result);
nlohmann::json to_json(const StoredPolicySet& set);
/// Throws std::runtime_error naming the offending entry.
StoredPolicySet stored_set_from_json(const nlohmann::json& j);

/// index, v_e, v_e_ratio, v_d, feasible, degenerate, min_sf_distance_to_earlier, v_star
std::string metrics_csv(const DspResult& result);

struct TracePoint {
  int step = 0;
  double sigma_lambda = 0.0;  // NaN for policies not found by primal-dual
  double v_e = 0.0;
  double v_d = 0.0;
  bool feasible = false;
};

/// policy, step, sigma_lambda, v_e, v_d, feasible. Every policy has at least
/// one row; LP-solved policies get a single row at step 0.
std::string traces_csv(const DspResult& result);
std::map<int, std::vector<TracePoint>> parse_traces_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace divsf::cli
