#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nhdqpt/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dynamical quantum phase transitions in non-Hermitian two-band quenches"};
  app.set_version_flag("--version", std::string(nhdqpt::kToolVersion));
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for grid sweeps (0 = auto)")
      ->check(CLI::NonNegativeNumber);

  std::string run_config;
  std::string out_dir;
  CLI::App* run = app.add_subcommand("run", "Run a scenario and write CSV/JSON artifacts");
  run->add_option("config", run_config, "Scenario config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory, overrides output.directory");
  run->add_option("--threads", threads, "Worker threads for grid sweeps (0 = auto)")
      ->check(CLI::NonNegativeNumber);

  std::string validate_config;
  CLI::App* validate = app.add_subcommand("validate", "Check a config and its grids without running");
  validate->add_option("config", validate_config, "Scenario config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    std::optional<std::filesystem::path> out;
    if (!out_dir.empty()) out = out_dir;
    return nhdqpt::run_command(run_config, out, threads, std::cout, std::cerr);
  }
  return nhdqpt::validate_command(validate_config, std::cout, std::cerr);
}
