#include <iostream>

#include <CLI11.hpp>

#include "divsf_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace divsf::cli;

  CLI::App app{"Diverse successive policies: experiment runner"};
  app.require_subcommand(1);

  RunOptions run;
  std::string out;
  CLI::App* run_cmd = app.add_subcommand("run", "Run every entry of a config");
  run_cmd->add_option("--config", run.config, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", out, std::string("Output directory (default: $") +
                                        kOutputRootEnv + " or ./results)");
  run_cmd->add_option("--jobs", run.jobs, "Runs executed in parallel")
      ->check(CLI::PositiveNumber);

  std::filesystem::path oracle_config;
  bool regen = false;
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "Check oracle quantities against golden files");
  oracle_cmd->add_option("--config", oracle_config, "Experiment config (JSON)")->required();
  oracle_cmd->add_flag("--regen", regen, "Rewrite the golden files instead of checking them");

  std::filesystem::path result;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render SVG plots for run results");
  plot_cmd->add_option("--result", result, "A run directory or a directory of runs")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (*run_cmd) {
    if (!out.empty()) run.out = out;
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*oracle_cmd) return cmd_oracle(oracle_config, regen, std::cout, std::cerr);
  return cmd_plot(result, std::cout, std::cerr);
}
