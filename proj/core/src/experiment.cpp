#include "cbi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "cbi/csv.hpp"
#include "cbi/cumulant.hpp"
#include "cbi/errors.hpp"
#include "cbi/measures.hpp"
#include "cbi/paths.hpp"

namespace cbi::experiment {

namespace {

using nlohmann::json;

measures::LevyMeasure parse_measure(const json& j) {
  const std::string type = j.value("type", "");
  if (type == "null") return measures::LevyMeasure::null();
  if (type == "stable_branching") {
    return measures::LevyMeasure::stable_branching(j.at("sigma").get<double>(),
                                                   j.at("alpha").get<double>());
  }
  if (type == "stable_immigration") {
    return measures::LevyMeasure::stable_immigration(
        j.at("sigma").get<double>(), j.at("alpha").get<double>());
  }
  if (type == "exponential") {
    return measures::LevyMeasure::exponential_jump(j.at("a").get<double>(),
                                                   j.at("theta").get<double>());
  }
  if (type == "atoms") {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : j.at("points")) {
      pts.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    }
    return measures::LevyMeasure::atoms(std::move(pts));
  }
  throw DomainError("config: unknown measure type '" + type + "'");
}

discrete::OffspringLaw parse_offspring(
    const json& j, const std::optional<mech::BranchingMechanism>& mechanism) {
  const std::string type = j.value("type", "");
  if (type == "binary") return discrete::OffspringLaw::binary(j.at("p").get<double>());
  if (type == "poisson") {
    return discrete::OffspringLaw::poisson(j.at("mu").get<double>());
  }
  if (type == "geometric") {
    return discrete::OffspringLaw::geometric(j.at("p").get<double>());
  }
  if (type == "stable") {
    return discrete::OffspringLaw::stable(j.at("alpha").get<double>());
  }
  if (type == "from_mechanism") {
    if (!mechanism) {
      throw DomainError("config: from_mechanism offspring needs a mechanism");
    }
    return discrete::OffspringLaw::from_mechanism(*mechanism,
                                                  j.at("k").get<double>());
  }
  throw DomainError("config: unknown offspring type '" + type + "'");
}

const std::vector<std::string> kKinds = {
    "cumulant",   "extinction", "stationary",
    "gw",         "gwi",        "scaling",
    "sde",        "stable_sde", "feller",
    "levy",       "lamperti",   "excursion",
    "immigration_reconstruct",  "verify_suite"};

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: invalid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  try {
    cfg.name = j.value("name", std::string("experiment"));
    if (j.contains("mechanism")) {
      const auto& jm = j.at("mechanism");
      cfg.mechanism.emplace(jm.value("b", 0.0), jm.value("c", 0.0),
                            jm.contains("m") ? parse_measure(jm.at("m"))
                                             : measures::LevyMeasure::null());
    }
    if (j.contains("immigration")) {
      const auto& ji = j.at("immigration");
      cfg.immigration.emplace(ji.value("beta", 0.0),
                              ji.contains("n") ? parse_measure(ji.at("n"))
                                               : measures::LevyMeasure::null());
    }

    const auto& jr = j.at("run");
    cfg.kind = jr.at("kind").get<std::string>();
    if (std::find(kKinds.begin(), kKinds.end(), cfg.kind) == kKinds.end()) {
      throw DomainError("config: unknown kind '" + cfg.kind + "'");
    }
    if (!jr.contains("seed")) throw DomainError("config: seed is mandatory");
    cfg.seed = jr.at("seed").get<std::uint64_t>();
    cfg.x0 = jr.value("x0", cfg.x0);
    cfg.horizon = jr.value("T", cfg.horizon);
    cfg.dt = jr.value("dt", cfg.dt);
    cfg.eps_jump = jr.value("eps_jump", cfg.eps_jump);
    cfg.resolution = jr.value("t0", cfg.resolution);
    cfg.tol = jr.value("tol", cfg.tol);
    cfg.n_paths = jr.value("n_paths", cfg.n_paths);
    if (jr.contains("lambdas")) {
      cfg.lambdas = jr.at("lambdas").get<std::vector<double>>();
    }
    if (jr.contains("times")) {
      cfg.times = jr.at("times").get<std::vector<double>>();
    }
    if (jr.contains("ks")) cfg.ks = jr.at("ks").get<std::vector<double>>();
    if (jr.contains("z_grid")) {
      cfg.z_grid = jr.at("z_grid").get<std::vector<double>>();
    }
    cfg.x0_count = jr.value("x0_count", cfg.x0_count);
    cfg.n_steps = jr.value("n_steps", cfg.n_steps);
    if (jr.contains("offspring")) {
      cfg.offspring.emplace(parse_offspring(jr.at("offspring"), cfg.mechanism));
    }
    if (jr.contains("immigrant_offspring")) {
      cfg.immigrant_offspring.emplace(
          parse_offspring(jr.at("immigrant_offspring"), cfg.mechanism));
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }

  if (!(cfg.x0 >= 0.0) || !(cfg.dt > 0.0) || !(cfg.eps_jump > 0.0) ||
      !(cfg.horizon > 0.0) || !(cfg.tol > 0.0) || cfg.n_paths < 1 ||
      !(cfg.resolution > 0.0)) {
    throw DomainError("config: invalid run parameters");
  }
  return cfg;
}

void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2 * threads) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::int64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

struct OutputDir {
  std::filesystem::path dir;
  explicit OutputDir(const std::string& out_root, const std::string& name) {
    dir = std::filesystem::path(out_root) / name;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DomainError("cannot create output directory " + dir.string());
  }
  std::ofstream open(const std::string& file) const {
    std::ofstream os(dir / file);
    if (!os) throw DomainError("cannot open output file " + (dir / file).string());
    return os;
  }
};

const mech::BranchingMechanism& require_mechanism(const ExperimentConfig& cfg) {
  if (!cfg.mechanism) throw DomainError("config: kind needs a mechanism");
  return *cfg.mechanism;
}

mech::ImmigrationMechanism immigration_or_none(const ExperimentConfig& cfg) {
  return cfg.immigration ? *cfg.immigration : mech::ImmigrationMechanism::none();
}

std::vector<double> uniform_grid(double T, double dt) {
  std::vector<double> g;
  const auto n = static_cast<std::int64_t>(std::ceil(T / dt));
  g.reserve(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i) {
    g.push_back(std::min(T, static_cast<double>(i) * dt));
  }
  g.back() = T;
  return g;
}

// Laplace-vs-oracle rows for a batch of per-path terminal values.
void write_laplace_rows(std::ofstream& os, double t,
                        std::span<const double> lambdas,
                        const std::function<double(double)>& analytic,
                        const std::vector<double>& terminal) {
  for (double lambda : lambdas) {
    const auto est = measures::empirical_laplace(terminal, lambda);
    const double ref = analytic(lambda);
    const double z = (est.mean - ref) / std::max(est.stderr_, 1e-15);
    os << csv::num(t) << ',' << csv::num(lambda) << ',' << csv::num(ref) << ','
       << csv::num(est.mean) << ',' << csv::num(est.stderr_) << ','
       << csv::num(z) << '\n';
  }
}

constexpr const char* kLaplaceHeader = "t,lambda,analytic,estimate,stderr,z\n";

int run_cumulant(const ExperimentConfig& cfg, const OutputDir& out) {
  const auto& phi = require_mechanism(cfg);
  auto os = out.open("results.csv");
  os << "t,lambda,v\n";
  for (double t : cfg.times) {
    for (double lambda : cfg.lambdas) {
      os << csv::num(t) << ',' << csv::num(lambda) << ','
         << csv::num(cumulant::cumulant_at(phi, lambda, t, cfg.tol)) << '\n';
    }
  }
  return 0;
}

int run_extinction(const ExperimentConfig& cfg, const OutputDir& out) {
  const auto& phi = require_mechanism(cfg);
  auto os = out.open("results.csv");
  os << "t,x,prob\n";
  for (double t : cfg.times) {
    os << csv::num(t) << ',' << csv::num(cfg.x0) << ','
       << csv::num(cumulant::extinction_probability(phi, cfg.x0, t)) << '\n';
  }
  return 0;
}

int run_stationary(const ExperimentConfig& cfg, const OutputDir& out) {
  const auto& phi = require_mechanism(cfg);
  if (!cfg.immigration) throw DomainError("config: stationary needs immigration");
  auto os = out.open("results.csv");
  os << "lambda,laplace\n";
  for (double lambda : cfg.lambdas) {
    os << csv::num(lambda) << ','
       << csv::num(cumulant::stationary_laplace(phi, *cfg.immigration, lambda))
       << '\n';
  }
  return 0;
}

int run_gw(const ExperimentConfig& cfg, const OutputDir& out, int threads,
           bool with_immigration) {
  if (!cfg.offspring) throw DomainError("config: gw needs an offspring law");
  if (with_immigration && !cfg.immigrant_offspring) {
    throw DomainError("config: gwi needs an immigrant offspring law");
  }
  const auto root = rng::make_stream(cfg.seed);
  const auto steps = static_cast<std::size_t>(cfg.n_steps);
  std::vector<std::vector<std::int64_t>> chains(
      static_cast<std::size_t>(cfg.n_paths));
  parallel_for(cfg.n_paths, threads, [&](std::int64_t i) {
    auto s = rng::split(root, static_cast<std::uint64_t>(i));
    chains[static_cast<std::size_t>(i)] =
        with_immigration
            ? discrete::simulate_galton_watson_immigration(
                  *cfg.offspring, *cfg.immigrant_offspring, cfg.x0_count,
                  cfg.n_steps, s)
            : discrete::simulate_galton_watson(*cfg.offspring, cfg.x0_count,
                                               cfg.n_steps, s);
  });

  auto os = out.open("results.csv");
  os << "step,mean,stderr\n";
  std::vector<double> column(chains.size());
  for (std::size_t n = 0; n <= steps; ++n) {
    for (std::size_t i = 0; i < chains.size(); ++i) {
      column[i] = static_cast<double>(chains[i][n]);
    }
    const auto est = mc_estimate(column);
    os << n << ',' << csv::num(est.mean) << ',' << csv::num(est.stderr_) << '\n';
  }

  auto ps = out.open("paths.csv");
  ps << "t,value,cum_integral,extinct\n";
  double integral = 0.0;
  for (std::size_t n = 0; n < chains[0].size(); ++n) {
    if (n > 0) integral += 0.5 * static_cast<double>(chains[0][n - 1] + chains[0][n]);
    const bool extinct = chains[0][n] == 0 && !with_immigration;
    ps << n << ',' << chains[0][n] << ',' << csv::num(integral) << ','
       << (extinct ? 1 : 0) << '\n';
  }
  return 0;
}

int run_scaling(const ExperimentConfig& cfg, const OutputDir& out) {
  const auto& phi = require_mechanism(cfg);
  if (cfg.ks.empty() || cfg.z_grid.empty()) {
    throw DomainError("config: scaling needs ks and z_grid");
  }
  const discrete::LawFamily family = [&phi](double k) {
    auto law = discrete::OffspringLaw::from_mechanism(phi, k);
    const double gamma = law.natural_timescale();
    return std::make_pair(std::move(law), gamma);
  };
  const auto rows = discrete::scaling_table(family, cfg.ks, cfg.z_grid, &phi);
  auto os = out.open("results.csv");
  os << "k,z,G_k,phi_k,phi,abs_err\n";
  for (const auto& r : rows) {
    os << csv::num(r.k) << ',' << csv::num(r.z) << ',' << csv::num(r.big_g)
       << ',' << csv::num(r.phi_k) << ',' << csv::num(r.phi_ref) << ','
       << csv::num(r.abs_err) << '\n';
  }
  return 0;
}

// Shared driver for the Monte Carlo path kinds: runs n_paths simulations,
// keeps terminal values, dumps path 0 and Laplace-vs-oracle rows.
int run_mc_paths(
    const ExperimentConfig& cfg, const OutputDir& out, int threads,
    const std::function<paths::SamplePath(rng::RandomStream&)>& simulate,
    const std::function<double(double)>& analytic) {
  const auto root = rng::make_stream(cfg.seed);
  std::vector<double> terminal(static_cast<std::size_t>(cfg.n_paths));
  parallel_for(cfg.n_paths, threads, [&](std::int64_t i) {
    auto s = rng::split(root, static_cast<std::uint64_t>(i));
    terminal[static_cast<std::size_t>(i)] = simulate(s).values.back();
  });

  auto os = out.open("results.csv");
  os << kLaplaceHeader;
  write_laplace_rows(os, cfg.horizon, cfg.lambdas, analytic, terminal);

  auto s0 = rng::split(root, 0);
  const auto first = simulate(s0);
  auto ps = out.open("paths.csv");
  paths::write_csv(first, ps);
  return 0;
}

int run_sde(const ExperimentConfig& cfg, const OutputDir& out, int threads) {
  const auto& phi = require_mechanism(cfg);
  const auto psi = immigration_or_none(cfg);
  paths::EulerOptions opts;
  opts.dt = cfg.dt;
  opts.eps_jump = cfg.eps_jump;
  const auto rate = paths::RateSpec::unit();
  return run_mc_paths(
      cfg, out, threads,
      [&](rng::RandomStream& s) {
        return paths::simulate_cbi(phi, psi, rate, cfg.x0, cfg.horizon, opts, s);
      },
      [&](double lambda) {
        return cumulant::transition_laplace(phi, psi.is_null() ? nullptr : &psi,
                                            cfg.x0, cfg.horizon, lambda, cfg.tol);
      });
}

int run_stable_sde(const ExperimentConfig& cfg, const OutputDir& out,
                   int threads) {
  const auto& phi = require_mechanism(cfg);
  double sigma = 0.0;
  double alpha = 1.5;
  phi.jump_measure().visit([&](const auto& rep) {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, measures::LevyMeasure::StableBranching>) {
      sigma = rep.sigma;
      alpha = rep.alpha;
    } else if constexpr (!std::is_same_v<T, measures::LevyMeasure::Null>) {
      throw DomainError("config: stable_sde needs a stable (or null) measure");
    }
  });
  const auto psi = immigration_or_none(cfg);
  return run_mc_paths(
      cfg, out, threads,
      [&](rng::RandomStream& s) {
        return paths::simulate_stable_cbi(phi.diffusion(), sigma, alpha,
                                          phi.linear(), psi, cfg.x0,
                                          cfg.horizon, cfg.dt, s);
      },
      [&](double lambda) {
        return cumulant::transition_laplace(phi, psi.is_null() ? nullptr : &psi,
                                            cfg.x0, cfg.horizon, lambda, cfg.tol);
      });
}

int run_feller(const ExperimentConfig& cfg, const OutputDir& out, int threads) {
  const auto& phi = require_mechanism(cfg);
  if (phi.has_jumps() || !(phi.diffusion() > 0.0)) {
    throw DomainError("config: feller needs c > 0 and no jump measure");
  }
  const auto psi = immigration_or_none(cfg);
  if (!psi.jump_measure().is_null()) {
    throw DomainError("config: feller supports drift-only immigration");
  }
  const auto grid = uniform_grid(cfg.horizon, cfg.horizon);  // single step
  return run_mc_paths(
      cfg, out, threads,
      [&](rng::RandomStream& s) {
        return paths::simulate_feller_exact(phi.diffusion(), phi.linear(),
                                            psi.drift(), cfg.x0, grid, s);
      },
      [&](double lambda) {
        return cumulant::transition_laplace(phi, psi.is_null() ? nullptr : &psi,
                                            cfg.x0, cfg.horizon, lambda, cfg.tol);
      });
}

int run_levy(const ExperimentConfig& cfg, const OutputDir& out, int threads) {
  const auto& phi = require_mechanism(cfg);
  paths::EulerOptions opts;
  opts.dt = cfg.dt;
  opts.eps_jump = cfg.eps_jump;
  const auto root = rng::make_stream(cfg.seed);
  std::vector<double> terminal(static_cast<std::size_t>(cfg.n_paths));
  parallel_for(cfg.n_paths, threads, [&](std::int64_t i) {
    auto s = rng::split(root, static_cast<std::uint64_t>(i));
    terminal[static_cast<std::size_t>(i)] =
        paths::simulate_levy(phi, cfg.x0, cfg.horizon, opts, s).values.back();
  });
  auto os = out.open("results.csv");
  os << "t,lambda,estimate,stderr\n";
  for (double lambda : cfg.lambdas) {
    const auto est = measures::empirical_laplace(terminal, lambda);
    os << csv::num(cfg.horizon) << ',' << csv::num(lambda) << ','
       << csv::num(est.mean) << ',' << csv::num(est.stderr_) << '\n';
  }
  auto s0 = rng::split(root, 0);
  const auto first = paths::simulate_levy(phi, cfg.x0, cfg.horizon, opts, s0);
  auto ps = out.open("paths.csv");
  paths::write_csv(first, ps);
  return 0;
}

int run_lamperti(const ExperimentConfig& cfg, const OutputDir& out) {
  const auto& phi = require_mechanism(cfg);
  auto s = rng::make_stream(cfg.seed);
  paths::EulerOptions opts;
  opts.dt = cfg.dt;
  opts.eps_jump = cfg.eps_jump;
  const auto base = paths::simulate_cbi(phi, mech::ImmigrationMechanism::none(),
                                        paths::RateSpec::unit(), cfg.x0,
                                        cfg.horizon, opts, s);
  const auto forward = paths::lamperti_forward(base);
  const auto back = paths::lamperti_inverse(forward);

  auto os = out.open("results.csv");
  os << "t,value,roundtrip,abs_err\n";
  const double t_max = std::min(base.final_time(), back.final_time());
  for (std::size_t i = 0; i < base.times.size(); ++i) {
    const double t = base.times[i];
    if (t > t_max) break;
    const double rt = back.value_at(t);
    os << csv::num(t) << ',' << csv::num(base.values[i]) << ',' << csv::num(rt)
       << ',' << csv::num(std::fabs(rt - base.values[i])) << '\n';
  }
  auto ps = out.open("paths.csv");
  paths::write_csv(forward, ps);
  return 0;
}

int run_excursion(const ExperimentConfig& cfg, const OutputDir& out,
                  int threads) {
  const auto& phi = require_mechanism(cfg);
  if (phi.has_jumps() || !(phi.diffusion() > 0.0)) {
    throw DomainError("config: excursion needs the Feller case (c > 0, no jumps)");
  }
  std::vector<double> grid;
  for (double t : cfg.times) {
    if (t >= cfg.resolution) grid.push_back(t);
  }
  if (grid.empty()) throw DomainError("config: excursion times must reach t0");

  const auto root = rng::make_stream(cfg.seed);
  std::vector<std::vector<double>> marginals(
      grid.size(), std::vector<double>(static_cast<std::size_t>(cfg.n_paths)));
  parallel_for(cfg.n_paths, threads, [&](std::int64_t i) {
    auto s = rng::split(root, static_cast<std::uint64_t>(i));
    const auto p = paths::excursion_reconstruct_feller(
        phi.diffusion(), phi.linear(), cfg.x0, cfg.resolution, grid, s);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      marginals[k][static_cast<std::size_t>(i)] = p.value_at(grid[k]);
    }
  });

  auto os = out.open("results.csv");
  os << kLaplaceHeader;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    write_laplace_rows(os, grid[k], cfg.lambdas,
                       [&](double lambda) {
                         return cumulant::transition_laplace(
                             phi, nullptr, cfg.x0, grid[k], lambda, cfg.tol);
                       },
                       marginals[k]);
  }
  auto s0 = rng::split(root, 0);
  const auto first = paths::excursion_reconstruct_feller(
      phi.diffusion(), phi.linear(), cfg.x0, cfg.resolution, grid, s0);
  auto ps = out.open("paths.csv");
  paths::write_csv(first, ps);
  return 0;
}

int run_immigration_reconstruct(const ExperimentConfig& cfg,
                                const OutputDir& out, int threads) {
  const auto& phi = require_mechanism(cfg);
  if (phi.has_jumps() || !(phi.diffusion() > 0.0)) {
    throw DomainError(
        "config: immigration_reconstruct needs the Feller case (c > 0)");
  }
  if (!cfg.immigration) {
    throw DomainError("config: immigration_reconstruct needs immigration");
  }
  const auto& psi = *cfg.immigration;
  std::vector<double> grid = cfg.times;
  std::sort(grid.begin(), grid.end());

  const auto root = rng::make_stream(cfg.seed);
  std::vector<std::vector<double>> marginals(
      grid.size(), std::vector<double>(static_cast<std::size_t>(cfg.n_paths)));
  parallel_for(cfg.n_paths, threads, [&](std::int64_t i) {
    auto s = rng::split(root, static_cast<std::uint64_t>(i));
    const auto p = paths::immigration_reconstruct_feller(
        phi.diffusion(), phi.linear(), psi, cfg.resolution, grid, cfg.eps_jump,
        s);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      marginals[k][static_cast<std::size_t>(i)] = p.value_at(grid[k]);
    }
  });

  auto os = out.open("results.csv");
  os << kLaplaceHeader;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    write_laplace_rows(os, grid[k], cfg.lambdas,
                       [&](double lambda) {
                         return cumulant::transition_laplace(
                             phi, &psi, 0.0, grid[k], lambda, cfg.tol);
                       },
                       marginals[k]);
  }
  auto s0 = rng::split(root, 0);
  const auto first = paths::immigration_reconstruct_feller(
      phi.diffusion(), phi.linear(), psi, cfg.resolution, grid, cfg.eps_jump,
      s0);
  auto ps = out.open("paths.csv");
  paths::write_csv(first, ps);
  return 0;
}

int run_verify_suite(const ExperimentConfig& cfg, const OutputDir& out,
                     int threads, bool quiet) {
  const auto reports = default_battery(cfg.seed, cfg.n_paths, threads);
  auto os = out.open("report.csv");
  verify::write_report_csv(reports, os);
  std::size_t passed = 0;
  for (const auto& r : reports) passed += r.pass ? 1 : 0;
  if (!quiet) {
    for (const auto& r : reports) {
      std::cout << (r.pass ? "pass " : "FAIL ") << r.name << " analytic "
                << r.analytic << " estimate " << r.estimate.mean << " (z "
                << r.z_score << ")\n";
    }
  }
  std::cout << "PASS " << passed << "/" << reports.size() << std::endl;
  const auto required = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(reports.size())));
  return passed >= required ? 0 : 3;
}

}  // namespace

int run(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
        bool quiet) {
  const OutputDir out(out_dir, cfg.name);
  if (cfg.kind == "cumulant") return run_cumulant(cfg, out);
  if (cfg.kind == "extinction") return run_extinction(cfg, out);
  if (cfg.kind == "stationary") return run_stationary(cfg, out);
  if (cfg.kind == "gw") return run_gw(cfg, out, threads, false);
  if (cfg.kind == "gwi") return run_gw(cfg, out, threads, true);
  if (cfg.kind == "scaling") return run_scaling(cfg, out);
  if (cfg.kind == "sde") return run_sde(cfg, out, threads);
  if (cfg.kind == "stable_sde") return run_stable_sde(cfg, out, threads);
  if (cfg.kind == "feller") return run_feller(cfg, out, threads);
  if (cfg.kind == "levy") return run_levy(cfg, out, threads);
  if (cfg.kind == "lamperti") return run_lamperti(cfg, out);
  if (cfg.kind == "excursion") return run_excursion(cfg, out, threads);
  if (cfg.kind == "immigration_reconstruct") {
    return run_immigration_reconstruct(cfg, out, threads);
  }
  if (cfg.kind == "verify_suite") {
    return run_verify_suite(cfg, out, threads, quiet);
  }
  throw DomainError("config: unknown kind '" + cfg.kind + "'");
}

namespace {

// Battery helpers: each check owns an independent substream, so the report
// is bit-identical for any thread count.

std::vector<double> feller_terminal(double c, double b, double beta, double x0,
                                    std::span<const double> grid, double at,
                                    std::uint64_t seed, std::uint64_t check_id,
                                    std::int64_t n, int threads) {
  const auto root = rng::split(rng::make_stream(seed), check_id);
  std::vector<double> vals(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](std::int64_t i) {
    auto s = rng::split(root, static_cast<std::uint64_t>(i));
    const auto p = paths::simulate_feller_exact(c, b, beta, x0, grid, s);
    vals[static_cast<std::size_t>(i)] = p.value_at(at);
  });
  return vals;
}

std::vector<double> to_laplace(std::span<const double> raw, double lambda) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::exp(-lambda * raw[i]);
  }
  return out;
}

}  // namespace

std::vector<verify::CheckReport> default_battery(std::uint64_t seed,
                                                 std::int64_t n_paths,
                                                 int threads) {
  if (n_paths < 1000) {
    throw DomainError("verify_suite: needs at least 1000 paths");
  }
  std::vector<verify::CheckReport> reports;
  std::uint64_t check_id = 0;
  const auto opts_for = [&](double bias, double dt) {
    verify::CompareOptions o;
    o.bias_allowance = bias;
    o.seed = seed;
    o.dt = dt;
    return o;
  };

  // Feller branching diffusion, c = 1, b = 0, x0 = 1.
  const mech::BranchingMechanism feller(0.0, 1.0, measures::LevyMeasure::null());
  {
    const std::vector<double> grid = {0.25, 0.5, 1.0};
    const auto y1 = feller_terminal(1.0, 0.0, 0.0, 1.0, grid, 1.0, seed,
                                    check_id++, n_paths, threads);
    const auto y05 = feller_terminal(1.0, 0.0, 0.0, 1.0, grid, 0.5, seed,
                                     check_id++, n_paths, threads);
    std::vector<double> extinct(y1.size());
    for (std::size_t i = 0; i < y1.size(); ++i) {
      extinct[i] = y1[i] <= 0.0 ? 1.0 : 0.0;
    }
    reports.push_back(verify::mc_compare(
        "feller_extinction_t1",
        cumulant::extinction_probability(feller, 1.0, 1.0), extinct,
        opts_for(0.0, 0.0)));
    reports.push_back(verify::mc_compare(
        "feller_laplace_t0.5_l1",
        cumulant::transition_laplace(feller, nullptr, 1.0, 0.5, 1.0),
        to_laplace(y05, 1.0), opts_for(0.0, 0.0)));
    reports.push_back(verify::mc_compare(
        "feller_laplace_t1_l1",
        cumulant::transition_laplace(feller, nullptr, 1.0, 1.0, 1.0),
        to_laplace(y1, 1.0), opts_for(0.0, 0.0)));
    reports.push_back(verify::mc_compare(
        "feller_laplace_t1_l2",
        cumulant::transition_laplace(feller, nullptr, 1.0, 1.0, 2.0),
        to_laplace(y1, 2.0), opts_for(0.0, 0.0)));
    reports.push_back(verify::mc_compare(
        "feller_mean_t1", cumulant::mean(feller, nullptr, 1.0, 1.0), y1,
        opts_for(0.0, 0.0)));
  }

  // Martingale functional on a finer grid (the path integral enters the
  // exponent; the exact sampler is unbiased at the nodes).
  {
    const auto root = rng::split(rng::make_stream(seed), check_id++);
    const auto grid = uniform_grid(1.0, 1.0 / 32.0);
    std::vector<paths::SamplePath> batch(static_cast<std::size_t>(n_paths));
    parallel_for(n_paths, threads, [&](std::int64_t i) {
      auto s = rng::split(root, static_cast<std::uint64_t>(i));
      batch[static_cast<std::size_t>(i)] =
          paths::simulate_feller_exact(1.0, 0.0, 0.0, 1.0, grid, s);
    });
    const std::vector<double> t_list = {0.25, 0.5, 1.0};
    auto ms = verify::martingale_check(batch, feller,
                                       mech::ImmigrationMechanism::none(), 1.0,
                                       t_list, opts_for(2e-3, 1.0 / 32.0));
    for (auto& r : ms) reports.push_back(std::move(r));
  }

  // Branching property through the exact sampler.
  for (const auto& [x1, x2, t, lambda] :
       std::vector<std::tuple<double, double, double, double>>{
           {1.0, 1.0, 1.0, 1.0}, {1.0, 2.0, 0.5, 0.5}}) {
    auto root = rng::split(rng::make_stream(seed), check_id++);
    const std::vector<double> grid = {t};
    auto r = verify::branching_property_check(
        [&](double x, rng::RandomStream& s) {
          return paths::simulate_feller_exact(1.0, 0.0, 0.0, x, grid, s)
              .values.back();
        },
        x1, x2, lambda, n_paths, root, opts_for(0.0, 0.0));
    r.name += "_x" + csv::num(x1) + "_" + csv::num(x2);
    reports.push_back(std::move(r));
  }

  // CIR with immigration: transition Laplace at t = 5 and the mean.
  {
    const mech::ImmigrationMechanism cir_psi(1.0, measures::LevyMeasure::null());
    const std::vector<double> grid = {5.0};
    const auto y5 = feller_terminal(1.0, 1.0, 1.0, 1.0, grid, 5.0, seed,
                                    check_id++, n_paths, threads);
    const mech::BranchingMechanism cir_phi(1.0, 1.0,
                                           measures::LevyMeasure::null());
    for (double lambda : {0.5, 1.0, 2.0}) {
      reports.push_back(verify::mc_compare(
          "cir_laplace_t5_l" + csv::num(lambda),
          cumulant::transition_laplace(cir_phi, &cir_psi, 1.0, 5.0, lambda),
          to_laplace(y5, lambda), opts_for(0.0, 0.0)));
    }
    const std::vector<double> grid2 = {2.0};
    const auto y2 = feller_terminal(1.0, 1.0, 1.0, 1.0, grid2, 2.0, seed,
                                    check_id++, n_paths, threads);
    reports.push_back(verify::mc_compare(
        "cir_mean_t2", cumulant::mean(cir_phi, &cir_psi, 1.0, 2.0), y2,
        opts_for(0.0, 0.0)));
  }

  // Distribution samplers against their analytic Laplace transforms.
  {
    const auto root = rng::split(rng::make_stream(seed), check_id++);
    std::vector<double> gam(static_cast<std::size_t>(n_paths));
    std::vector<double> pois0(static_cast<std::size_t>(n_paths));
    std::vector<double> stab(static_cast<std::size_t>(n_paths));
    std::vector<double> incr(static_cast<std::size_t>(n_paths));
    parallel_for(n_paths, threads, [&](std::int64_t i) {
      auto s = rng::split(root, static_cast<std::uint64_t>(i));
      gam[static_cast<std::size_t>(i)] =
          std::exp(-rng::sample_gamma(s, 2.0, 3.0));
      pois0[static_cast<std::size_t>(i)] =
          rng::sample_poisson(s, 4.0) == 0 ? 1.0 : 0.0;
      stab[static_cast<std::size_t>(i)] =
          std::exp(-rng::sample_one_sided_stable(s, 0.5, 1.0));
      incr[static_cast<std::size_t>(i)] = rng::sample_stable_increment(s, 1.5, 1.0);
    });
    reports.push_back(verify::mc_compare("gamma_laplace_l1", 0.5625, gam,
                                         opts_for(0.0, 0.0)));
    reports.push_back(verify::mc_compare("poisson_p0_mean4", std::exp(-4.0),
                                         pois0, opts_for(0.0, 0.0)));
    reports.push_back(verify::mc_compare("stable_laplace_l1", std::exp(-1.0),
                                         stab, opts_for(0.0, 0.0)));
    reports.push_back(verify::mc_compare("stable_increment_mean", 0.0, incr,
                                         opts_for(0.0, 0.0)));
  }

  // Excursion reconstruction marginal at the resolution time.
  {
    const auto root = rng::split(rng::make_stream(seed), check_id++);
    const std::vector<double> grid = {1.0};
    std::vector<double> vals(static_cast<std::size_t>(n_paths));
    parallel_for(n_paths, threads, [&](std::int64_t i) {
      auto s = rng::split(root, static_cast<std::uint64_t>(i));
      vals[static_cast<std::size_t>(i)] =
          paths::excursion_reconstruct_feller(1.0, 0.0, 1.0, 1.0, grid, s)
              .values.back();
    });
    reports.push_back(verify::mc_compare(
        "excursion_laplace_t1",
        cumulant::transition_laplace(feller, nullptr, 1.0, 1.0, 1.0),
        to_laplace(vals, 1.0), opts_for(0.0, 0.0)));
  }

  // Immigration reconstruction marginal, O(t0) resolution bias allowed.
  {
    const auto root = rng::split(rng::make_stream(seed), check_id++);
    const double t0 = 0.01;
    const std::vector<double> grid = {3.0};
    const mech::ImmigrationMechanism psi(1.0, measures::LevyMeasure::null());
    const mech::BranchingMechanism cir_phi(1.0, 1.0,
                                           measures::LevyMeasure::null());
    std::vector<double> vals(static_cast<std::size_t>(n_paths));
    parallel_for(n_paths, threads, [&](std::int64_t i) {
      auto s = rng::split(root, static_cast<std::uint64_t>(i));
      vals[static_cast<std::size_t>(i)] =
          paths::immigration_reconstruct_feller(1.0, 1.0, psi, t0, grid, 1e-6, s)
              .values.back();
    });
    reports.push_back(verify::mc_compare(
        "immigration_reconstruct_t3",
        cumulant::transition_laplace(cir_phi, &psi, 0.0, 3.0, 1.0),
        to_laplace(vals, 1.0), opts_for(0.5 * t0, t0)));
  }

  return reports;
}

}  // namespace cbi::experiment
