#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "divsf/dsp_driver.hpp"
#include "divsf/envs.hpp"

namespace divsf::cli {

inline constexpr int kConfigSchemaVersion = 1;

/// A rejected configuration, located by field path and source line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string file, std::string field, int line, const std::string& message);

  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::string file_;
  std::string field_;
  int line_;
  std::string message_;
};

/// One entry of the experiment grid: an environment and a DSP configuration.
struct RunSpec {
  std::string name;
  std::uint64_t seed = 0;
  EnvConfig env;
  DspConfig dsp;
};

struct ExperimentConfig {
  std::filesystem::path source;  // the file it was read from
  std::vector<RunSpec> runs;
  /// Golden directory for the oracle command, resolved against the config
  /// file's directory. Empty when the config does not name one.
  std::filesystem::path golden_dir;
};

/// Parses a configuration. Unknown fields, wrong types and out-of-range
/// values raise ConfigError naming the field and its line.
ExperimentConfig parse_config(const std::string& text, const std::string& source_name);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved form of a run (every default made explicit). Dumping it
/// gives the canonical text the config hash is taken over.
nlohmann::json to_json(const RunSpec& run);
std::string config_hash(const RunSpec& run);

}  // namespace divsf::cli
