// Config-driven experiment runner for the branching-process library.
//
// Usage: cbisim --config PATH [--seed N] [--out DIR] [--threads N] [--quiet]
//
// Exit codes: 0 success, 1 validation error, 2 numeric error,
// 3 failed verification suite.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cbi/errors.hpp"
#include "cbi/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Branching-process simulation and cross-verification runner"};

  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  bool quiet = false;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;

  app.add_option("--config", config_path, "Experiment config file (JSON)")
      ->required();
  app.add_option("--out", out_dir, "Output directory root");
  app.add_option("--threads", threads, "Worker threads (wall time only)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress per-check output");
  auto* seed_opt =
      app.add_option("--seed", seed_override, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  has_seed_override = seed_opt->count() > 0;

  try {
    auto cfg = cbi::experiment::load_config(config_path);
    if (has_seed_override) cfg.seed = seed_override;
    return cbi::experiment::run(cfg, out_dir, threads, quiet);
  } catch (const cbi::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const cbi::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
