#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "divsf_cli/config.hpp"

namespace divsf::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitMismatch = 3,
  kExitRuntimeFailure = 4,
};

/// Environment variable naming the default output root for `run`.
inline constexpr const char* kOutputRootEnv = "DIVSF_OUTPUT_ROOT";

/// $DIVSF_OUTPUT_ROOT when set and non-empty, else "results".
std::filesystem::path default_output_root();

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  int jobs = 1;
};

/// Each run lands in <out>/<run name>/ with manifest.json, policy_set.json,
/// metrics.csv, traces.csv and sf_scatter.svg.
int cmd_run(const RunOptions& options, std::ostream& log, std::ostream& err);

/// Recomputes the oracle quantities of every configured run and compares
/// them with <golden_dir>/<run>.json, or rewrites those files when regen.
int cmd_oracle(const std::filesystem::path& config, bool regen, std::ostream& log,
               std::ostream& err);

/// Renders <run>/plots/{sf_scatter,heatmap_<i>,trace_<i>}.svg for a run
/// directory or for every run directory directly below it.
int cmd_plot(const std::filesystem::path& result, std::ostream& log, std::ostream& err);

/// Named oracle quantities of one run, in a fixed order.
using GoldenValues = std::vector<std::pair<std::string, std::vector<double>>>;
GoldenValues compute_golden_values(const RunSpec& run);

/// The contents of a run's output files except the manifest.
std::map<std::string, std::string> render_run_outputs(const RunSpec& run);

}  // namespace divsf::cli
