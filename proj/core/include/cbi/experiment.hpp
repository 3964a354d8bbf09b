#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbi/discrete.hpp"
#include "cbi/mechanism.hpp"
#include "cbi/verify.hpp"

namespace cbi::experiment {

/// Everything a single experiment run needs. Parsed from the JSON config;
/// seed is mandatory, all other run parameters have documented defaults.
struct ExperimentConfig {
  std::string name = "experiment";
  std::optional<mech::BranchingMechanism> mechanism;
  std::optional<mech::ImmigrationMechanism> immigration;
  std::optional<discrete::OffspringLaw> offspring;
  std::optional<discrete::OffspringLaw> immigrant_offspring;

  std::string kind;
  std::uint64_t seed = 0;
  double x0 = 1.0;
  double horizon = 1.0;
  double dt = 1e-3;
  double eps_jump = 1e-3;
  double resolution = 0.01;  // t0 for the reconstruction kinds
  double tol = 1e-9;
  std::int64_t n_paths = 10000;
  std::vector<double> lambdas = {1.0};
  std::vector<double> times = {1.0};
  std::vector<double> ks;
  std::vector<double> z_grid;
  std::int64_t x0_count = 1;
  int n_steps = 10;
};

/// Parse and validate a config file (JSON). Throws DomainError on any
/// validation failure.
ExperimentConfig load_config(const std::string& path);

/// Exit codes: 0 ok, 1 validation error, 2 numeric error, 3 failed
/// verification suite. Output files land in <out_dir>/<name>/.
int run(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
        bool quiet);

/// The cross-verification battery behind the verify_suite kind: Monte
/// Carlo runs of every stochastic component against the analytic engine.
/// Requires n_paths >= 1000.
std::vector<verify::CheckReport> default_battery(std::uint64_t seed,
                                                 std::int64_t n_paths,
                                                 int threads);

/// Deterministic parallel map: fn(i) for i in [0,n); the result must be
/// written into slot i of a caller-owned buffer, so the outcome does not
/// depend on the thread count.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace cbi::experiment
