#include "divsf_cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include "divsf/errors.hpp"
#include "divsf/oracle.hpp"
#include "divsf_cli/persistence.hpp"
#include "divsf_cli/plots.hpp"

#ifndef DIVSF_VERSION
#define DIVSF_VERSION "0.0.0"
#endif

namespace divsf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kPolicySetFile = "policy_set.json";
constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kTracesFile = "traces.csv";
constexpr const char* kScatterFile = "sf_scatter.svg";
constexpr int kGoldenSchemaVersion = 1;
constexpr double kGoldenTolerance = 1e-9;
/// Enumeration cross-check only below this many deterministic policies.
constexpr double kMaxCrossCheckPolicies = 1e5;

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const json& extra = json::object()) {
  json rec = {{"status", "error"}, {"kind", kind}, {"message", message}};
  rec.update(extra);
  err << rec.dump() << '\n';
}

void report_config_error(std::ostream& err, const ConfigError& e) {
  report_error(err, "config", e.what(),
               {{"file", e.file()}, {"field", e.field()}, {"line", e.line()}});
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json optional_number(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

struct RunOutcome {
  std::map<std::string, std::string> files;
  json summary;
};

RunOutcome execute_run(const RunSpec& run) {
  const TabularMdp mdp = build_env(run.env);
  const DspResult result = run_dsp(mdp, run.dsp);
  const StoredPolicySet stored = make_stored_set(mdp, result);

  RunOutcome out;
  out.files[kPolicySetFile] = to_json(stored).dump(1) + "\n";
  out.files[kMetricsFile] = metrics_csv(result);
  out.files[kTracesFile] = traces_csv(result);
  out.files[kScatterFile] = render_sf_scatter(stored, run.name + ": successor features");

  int infeasible = 0;
  for (const IterationRecord& r : result.records) infeasible += r.feasible ? 0 : 1;
  out.summary = {{"n_policies", result.set.size()},
                 {"infeasible_iterations", infeasible},
                 {"v_star", result.set.v_star},
                 {"min_pairwise_sf_distance", optional_number(result.metrics.min_pairwise_distance)},
                 {"mean_pairwise_sf_distance",
                  optional_number(result.metrics.mean_pairwise_distance)}};
  return out;
}

ExperimentConfig load_or_report(const fs::path& path, std::ostream& err, bool* ok) {
  try {
    ExperimentConfig cfg = load_config(path);
    *ok = true;
    return cfg;
  } catch (const ConfigError& e) {
    report_config_error(err, e);
    *ok = false;
    return {};
  }
}

// Re-reads the resolved run stored in a manifest.
RunSpec run_from_manifest(const json& manifest, const std::string& where) {
  const json wrapped = {{"schema_version", kConfigSchemaVersion},
                        {"runs", json::array({manifest.at("config")})}};
  return parse_config(wrapped.dump(1), where).runs.front();
}

}  // namespace

fs::path default_output_root() {
  const char* root = std::getenv(kOutputRootEnv);
  if (root != nullptr && *root != '\0') return root;
  return "results";
}

std::map<std::string, std::string> render_run_outputs(const RunSpec& run) {
  return execute_run(run).files;
}

int cmd_run(const RunOptions& options, std::ostream& log, std::ostream& err) {
  bool ok = false;
  const ExperimentConfig cfg = load_or_report(options.config, err, &ok);
  if (!ok) return kExitConfigError;
  const fs::path out_root = options.out.value_or(default_output_root());

  const std::size_t n = cfg.runs.size();
  std::vector<std::string> failures(n);
  std::vector<std::string> lines(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      const RunSpec& run = cfg.runs[i];
      try {
        const std::string started = utc_now();
        const RunOutcome outcome = execute_run(run);
        const fs::path dir = out_root / run.name;
        fs::create_directories(dir);
        json outputs = json::array();
        outputs.push_back({{"file", kManifestFile}});
        for (const auto& [name, bytes] : outcome.files) {
          write_file(dir / name, bytes);
          outputs.push_back({{"file", name}, {"fnv1a", fnv1a_hex(bytes)}});
        }
        const json manifest = {{"tool", "divsf"},
                               {"tool_version", DIVSF_VERSION},
                               {"run", run.name},
                               {"seed", run.seed},
                               {"config_hash", config_hash(run)},
                               {"config", to_json(run)},
                               {"started_at", started},
                               {"finished_at", utc_now()},
                               {"summary", outcome.summary},
                               {"outputs", outputs}};
        write_file(dir / kManifestFile, manifest.dump(1) + "\n");
        lines[i] = "run " + run.name + ": " + outcome.summary["n_policies"].dump() +
                   " policies, " + outcome.summary["infeasible_iterations"].dump() +
                   " infeasible, min SF distance " +
                   outcome.summary["min_pairwise_sf_distance"].dump() + " -> " + dir.string();
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  int status = kExitOk;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i].empty()) {
      log << lines[i] << '\n';
    } else {
      report_error(err, "runtime", failures[i], {{"run", cfg.runs[i].name}});
      status = kExitRuntimeFailure;
    }
  }
  return status;
}

GoldenValues compute_golden_values(const RunSpec& run) {
  const TabularMdp mdp = build_env(run.env);
  GoldenValues values;
  const auto scalar = [&](const std::string& key, double x) {
    values.emplace_back(key, std::vector<double>{x});
  };
  const auto vector = [&](const std::string& key, const Vector& v) {
    values.emplace_back(key, std::vector<double>(v.data(), v.data() + v.size()));
  };

  const StochasticPolicy uniform = StochasticPolicy::uniform(mdp.n_states(), mdp.n_actions());
  const StationaryDistribution d = stationary_distribution(mdp, uniform);
  vector("uniform.stationary_distribution", d.d);
  vector("uniform.successor_features", successor_features(mdp, uniform, d).psi);
  scalar("uniform.value", average_value(d, uniform, mdp.extrinsic_reward()));
  scalar("uniform.mixing_time_0.05", static_cast<double>(mixing_time(mdp, uniform, 0.05)));
  scalar("optimal.value", optimal_average_policy(mdp, mdp.extrinsic_reward()).value);
  if (std::pow(mdp.n_actions(), mdp.n_states()) <= kMaxCrossCheckPolicies) {
    scalar("enumerated.best_value",
           oracle::enumerate_policies(mdp, mdp.extrinsic_reward()).best_value());
  }

  const DspResult result = run_dsp(mdp, run.dsp);
  std::vector<double> v_e, v_d;
  for (const IterationRecord& r : result.records) {
    v_e.push_back(r.v_e);
    v_d.push_back(r.v_d);
  }
  values.emplace_back("dsp.v_e", v_e);
  values.emplace_back("dsp.v_d", v_d);
  if (result.metrics.min_pairwise_distance) {
    scalar("dsp.min_pairwise_sf_distance", *result.metrics.min_pairwise_distance);
  }
  return values;
}

int cmd_oracle(const fs::path& config, bool regen, std::ostream& log, std::ostream& err) {
  bool ok = false;
  const ExperimentConfig cfg = load_or_report(config, err, &ok);
  if (!ok) return kExitConfigError;
  if (cfg.golden_dir.empty()) {
    report_error(err, "config", "the oracle command needs golden_dir in the config",
                 {{"file", config.string()}, {"field", "golden_dir"}});
    return kExitConfigError;
  }

  int mismatches = 0;
  json manifest_files = json::array();
  try {
    if (regen) fs::create_directories(cfg.golden_dir);
    for (const RunSpec& run : cfg.runs) {
      const GoldenValues values = compute_golden_values(run);
      const std::string fingerprint = hex64(build_env(run.env).fingerprint());

      // Independent cross-check: the LP optimum against enumeration.
      std::map<std::string, double> first;
      for (const auto& [key, v] : values) first[key] = v.front();
      if (first.count("enumerated.best_value") &&
          std::abs(first["enumerated.best_value"] - first["optimal.value"]) > 1e-8) {
        report_error(err, "mismatch",
                     run.name + ": LP optimum " + format_double(first["optimal.value"]) +
                         " disagrees with enumeration " +
                         format_double(first["enumerated.best_value"]));
        ++mismatches;
      }

      const fs::path file = cfg.golden_dir / (run.name + ".json");
      if (regen) {
        json vals = json::object();
        for (const auto& [key, v] : values) vals[key] = v;
        const json golden = {{"schema_version", kGoldenSchemaVersion},
                             {"run", run.name},
                             {"config_hash", config_hash(run)},
                             {"mdp_fingerprint", fingerprint},
                             {"values", vals}};
        const std::string bytes = golden.dump(1) + "\n";
        write_file(file, bytes);
        manifest_files.push_back(
            {{"file", file.filename().string()}, {"run", run.name}, {"fnv1a", fnv1a_hex(bytes)}});
        log << "oracle " << run.name << ": wrote " << values.size() << " values to "
            << file.string() << '\n';
        continue;
      }

      if (!fs::exists(file)) {
        report_error(err, "mismatch", "missing golden file " + file.string(), {{"run", run.name}});
        ++mismatches;
        continue;
      }
      json golden;
      try {
        golden = json::parse(read_file(file));
      } catch (const json::parse_error& e) {
        report_error(err, "mismatch", "unreadable golden file " + file.string() + ": " + e.what());
        ++mismatches;
        continue;
      }
      int run_mismatches = 0;
      const auto mismatch = [&](const std::string& name, const std::string& detail) {
        report_error(err, "mismatch", file.string() + ": " + name + " " + detail,
                     {{"run", run.name}, {"value", name}});
        ++run_mismatches;
      };
      if (golden.value("mdp_fingerprint", "") != fingerprint) {
        mismatch("mdp_fingerprint", "expected " + golden.value("mdp_fingerprint", "<none>") +
                                        " got " + fingerprint);
      }
      const json& stored = golden.contains("values") ? golden["values"] : json::object();
      for (const auto& [key, v] : values) {
        if (!stored.contains(key) || !stored[key].is_array() || stored[key].size() != v.size()) {
          mismatch(key, "missing or wrong length in golden file");
          continue;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!stored[key][i].is_number()) {
            mismatch(key + "[" + std::to_string(i) + "]", "is not a number");
            continue;
          }
          const double want = stored[key][i].get<double>();
          if (!(std::abs(v[i] - want) <= kGoldenTolerance * (1.0 + std::abs(want)))) {
            mismatch(key + "[" + std::to_string(i) + "]",
                     "expected " + format_double(want) + " got " + format_double(v[i]));
          }
        }
      }
      for (const auto& [key, _] : stored.items()) {
        const bool known = std::any_of(values.begin(), values.end(),
                                       [&](const auto& kv) { return kv.first == key; });
        if (!known) mismatch(key, "is in the golden file but no longer computed");
      }
      mismatches += run_mismatches;
      log << "oracle " << run.name << ": " << values.size() << " values, "
          << (run_mismatches == 0 ? "match" : std::to_string(run_mismatches) + " mismatches")
          << '\n';
    }
    if (regen) {
      const json manifest = {{"schema_version", kGoldenSchemaVersion},
                             {"tool_version", DIVSF_VERSION},
                             {"files", manifest_files}};
      write_file(cfg.golden_dir / kManifestFile, manifest.dump(1) + "\n");
    }
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return kExitRuntimeFailure;
  }
  return mismatches == 0 ? kExitOk : kExitMismatch;
}

int cmd_plot(const fs::path& result, std::ostream& log, std::ostream& err) {
  std::vector<fs::path> runs;
  std::error_code ec;
  if (fs::exists(result / kManifestFile, ec)) {
    runs.push_back(result);
  } else if (fs::is_directory(result, ec)) {
    for (const fs::directory_entry& e : fs::directory_iterator(result, ec)) {
      if (e.is_directory() && fs::exists(e.path() / kManifestFile)) runs.push_back(e.path());
    }
    std::sort(runs.begin(), runs.end());
  }
  if (runs.empty()) {
    report_error(err, "input", "no run results (manifest.json) under " + result.string());
    return kExitConfigError;
  }

  // Render everything before writing anything, so a bad run leaves no
  // partial output behind.
  std::vector<std::pair<fs::path, std::string>> files;
  for (const fs::path& dir : runs) {
    try {
      const json manifest = json::parse(read_file(dir / kManifestFile));
      const RunSpec run = run_from_manifest(manifest, (dir / kManifestFile).string());
      const StoredPolicySet set =
          stored_set_from_json(json::parse(read_file(dir / kPolicySetFile)));
      const auto traces = parse_traces_csv(read_file(dir / kTracesFile));
      if (set.policies.empty()) throw std::runtime_error("policy set is empty");
      if (set.n_states != state_count(run.env)) {
        throw std::runtime_error("policy set does not match the run's environment");
      }
      const fs::path plots = dir / "plots";
      files.emplace_back(plots / kScatterFile,
                         render_sf_scatter(set, run.name + ": successor features"));
      for (const StoredPolicy& p : set.policies) {
        const std::string idx = std::to_string(p.index);
        files.emplace_back(plots / ("heatmap_" + idx + ".svg"),
                           render_heatmap(p, run.env,
                                          run.name + ": policy " + idx + " state distribution"));
        const auto it = traces.find(p.index);
        if (it == traces.end()) throw std::runtime_error("traces.csv has no rows for policy " + idx);
        files.emplace_back(plots / ("trace_" + idx + ".svg"),
                           render_trace(p.index, it->second, run.name + ": policy " + idx));
      }
    } catch (const ConfigError& e) {
      report_config_error(err, e);
      return kExitConfigError;
    } catch (const std::exception& e) {
      report_error(err, "input", dir.string() + ": " + e.what());
      return kExitConfigError;
    }
  }
  try {
    for (const auto& [path, bytes] : files) {
      fs::create_directories(path.parent_path());
      write_file(path, bytes);
    }
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return kExitRuntimeFailure;
  }
  for (const fs::path& dir : runs) log << "plot " << (dir / "plots").string() << '\n';
  return kExitOk;
}

}  // namespace divsf::cli
