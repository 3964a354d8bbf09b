#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "cbi/cumulant.hpp"
#include "cbi/errors.hpp"
#include "cbi/paths.hpp"
#include "cbi/verify.hpp"

using namespace cbi;
using measures::LevyMeasure;
using mech::BranchingMechanism;
using mech::ImmigrationMechanism;

namespace {
const BranchingMechanism kFeller(0.0, 1.0, LevyMeasure::null());
const auto kNone = ImmigrationMechanism::none();
}

TEST_CASE("mc_compare") {
  const std::vector<double> ones(1000, 1.0);
  auto r = verify::mc_compare("const", 1.0, ones);
  CHECK(r.pass);
  CHECK(r.z_score == doctest::Approx(0.0));

  auto s = rng::make_stream(1);
  std::vector<double> lap(1000000);
  for (auto& x : lap) x = std::exp(-rng::exponential(s));
  CHECK(verify::mc_compare("exp-laplace", 0.5, lap).pass);
  auto bad = verify::mc_compare("wrong-target", 0.9, lap);
  CHECK_FALSE(bad.pass);
  CHECK(std::fabs(bad.z_score) > 100.0);

  const std::vector<double> few(99, 1.0);
  CHECK_THROWS_AS(verify::mc_compare("few", 1.0, few), DomainError);
}

TEST_CASE("martingale functional is constant for the drift-only mechanism") {
  // phi = bz, psi = 0: H_t = exp{-l x e^{-bt} - b l int x e^{-bs} ds}
  // collapses to e^{-l x} for every t.
  const BranchingMechanism drift(1.0, 0.0, LevyMeasure::null());
  paths::EulerOptions opts;
  opts.dt = 1e-4;
  std::vector<paths::SamplePath> batch;
  for (int i = 0; i < 200; ++i) {
    auto s = rng::make_stream(static_cast<std::uint64_t>(i));
    batch.push_back(paths::simulate_cbi(drift, kNone, paths::RateSpec::unit(),
                                        1.0, 1.0, opts, s));
  }
  const std::vector<double> ts = {0.25, 0.5, 1.0};
  verify::CompareOptions copts;
  copts.bias_allowance = 1e-3;  // Euler drift bias only
  const auto reports = verify::martingale_check(batch, drift, kNone, 1.0, ts, copts);
  for (const auto& r : reports) CHECK(r.pass);
}

TEST_CASE("martingale functional for the Feller diffusion") {
  const auto root = rng::make_stream(7);
  std::vector<paths::SamplePath> batch(20000);
  std::vector<double> grid;
  for (int i = 0; i <= 32; ++i) grid.push_back(i / 32.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto s = rng::split(root, i);
    batch[i] = paths::simulate_feller_exact(1.0, 0.0, 0.0, 1.0, grid, s);
  }
  const std::vector<double> ts = {0.25, 0.5, 1.0};
  verify::CompareOptions copts;
  copts.bias_allowance = 2e-3;  // trapezoid bias in the path integral
  const auto reports =
      verify::martingale_check(batch, kFeller, kNone, 1.0, ts, copts);
  for (const auto& r : reports) CHECK(r.pass);

  // lambda = 0 collapses to H = 1.
  const auto trivial =
      verify::martingale_check(batch, kFeller, kNone, 0.0, ts, copts);
  for (const auto& r : trivial) {
    CHECK(r.pass);
    CHECK(r.estimate.mean == doctest::Approx(1.0));
  }
}

TEST_CASE("generator on simple functions") {
  const ImmigrationMechanism psi(2.0, LevyMeasure::null());
  // f(x) = x: L f = rate beta - b x.
  const double lin = verify::generator_apply(
      BranchingMechanism(1.0, 1.0, LevyMeasure::null()), &psi, 1.0,
      [](double x) { return x; }, [](double) { return 1.0; },
      [](double) { return 0.0; }, 1.0);
  CHECK(lin == doctest::Approx(1.0));

  // Constant f is annihilated.
  const double flat = verify::generator_apply(
      mech::stable_mechanism(1.0, 0.5, -0.5), &psi, 1.0,
      [](double) { return 42.0; }, [](double) { return 0.0; },
      [](double) { return 0.0; }, 2.0);
  CHECK(flat == doctest::Approx(0.0));
}

TEST_CASE("generator identity on exponentials") {
  // L e^{-lambda .}(x) = [x phi(lambda) - psi(lambda)] e^{-lambda x}.
  const ImmigrationMechanism psi_drift(1.0, LevyMeasure::null());
  const double v = verify::generator_apply(
      kFeller, &psi_drift, 1.0, [](double x) { return std::exp(-x); },
      [](double x) { return -std::exp(-x); },
      [](double x) { return std::exp(-x); }, 2.0);
  CHECK(v == doctest::Approx((2.0 - 1.0) * std::exp(-2.0)).epsilon(1e-10));
  CHECK(v == doctest::Approx(0.135335).epsilon(1e-5));

  // Mechanisms with branching and immigration jumps, on a (x, lambda) grid.
  const auto phi_jump = mech::stable_mechanism(0.8, 0.5, 0.3);
  const ImmigrationMechanism psi_jump(0.4,
                                      LevyMeasure::exponential_jump(1.0, 2.0));
  const BranchingMechanism phi_mix(0.2, 0.5,
                                   LevyMeasure::atoms({{0.5, 1.0}, {2.0, 0.25}}));
  for (const auto& phi : {phi_jump, phi_mix}) {
    for (double x : {0.5, 1.0, 3.0}) {
      for (double lambda : {0.5, 1.0, 2.0}) {
        const double got = verify::generator_apply(
            phi, &psi_jump, 1.0,
            [lambda](double y) { return std::exp(-lambda * y); },
            [lambda](double y) { return -lambda * std::exp(-lambda * y); },
            [lambda](double y) {
              return lambda * lambda * std::exp(-lambda * y);
            },
            x);
        const double want = (x * phi.value(lambda) - psi_jump.value(lambda)) *
                            std::exp(-lambda * x);
        CHECK(std::fabs(got - want) <= 1e-7 * std::max(1.0, std::fabs(want)));
      }
    }
  }
}

TEST_CASE("extinction estimates") {
  std::vector<paths::SamplePath> flat(300);
  for (auto& p : flat) {
    p.times = {0.0, 1.0};
    p.values = {0.0, 0.0};
    p.cum_integral = {0.0, 0.0};
    p.extinct_at = 0.0;
  }
  CHECK(verify::extinction_estimate(flat, 1.0).mean == 1.0);

  const auto root = rng::make_stream(9);
  std::vector<paths::SamplePath> batch(30000);
  const std::vector<double> grid = {1.0};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto s = rng::split(root, i);
    batch[i] = paths::simulate_feller_exact(1.0, 0.0, 0.0, 1.0, grid, s);
  }
  CHECK(verify::extinction_estimate(batch, 0.0).mean == 0.0);
  const auto est = verify::extinction_estimate(batch, 1.0);
  const double target = std::exp(-1.0);
  CHECK(std::fabs(est.mean - target) < 4.0 * est.stderr_);
}

TEST_CASE("branching property") {
  // Deterministic sampler: exact additivity.
  auto root = rng::make_stream(11);
  auto exact = verify::branching_property_check(
      [](double x, rng::RandomStream&) { return x * std::exp(-0.3); }, 1.0,
      2.0, 1.0, 1000, root);
  CHECK(exact.pass);

  // x2 = 0 reduces to a self-comparison.
  auto self = verify::branching_property_check(
      [](double x, rng::RandomStream& s) {
        const std::vector<double> grid = {1.0};
        return paths::simulate_feller_exact(1.0, 0.0, 0.0, x, grid, s)
            .values.back();
      },
      1.0, 0.0, 1.0, 20000, root);
  CHECK(self.pass);

  // Feller at x1 = x2 = 1, t = 1: both sides estimate e^{-1}.
  auto feller = verify::branching_property_check(
      [](double x, rng::RandomStream& s) {
        const std::vector<double> grid = {1.0};
        return paths::simulate_feller_exact(1.0, 0.0, 0.0, x, grid, s)
            .values.back();
      },
      1.0, 1.0, 1.0, 30000, root);
  CHECK(feller.pass);
  CHECK(feller.estimate.mean == doctest::Approx(std::exp(-1.0)).epsilon(0.02));
}

TEST_CASE("report CSV schema") {
  std::vector<verify::CheckReport> reports(1);
  reports[0].name = "demo";
  reports[0].analytic = 0.5;
  reports[0].estimate = {0.49, 0.01, 1000};
  reports[0].z_score = -1.0;
  reports[0].pass = true;
  reports[0].seed = 42;
  reports[0].dt = 0.001;
  std::ostringstream os;
  verify::write_report_csv(reports, os);
  CHECK(os.str().rfind("name,analytic,estimate,stderr,z,pass,seed,n,dt\n", 0) ==
        0);
  CHECK(os.str().find("demo,0.5,0.49,0.01,-1,1,42,1000,0.001") !=
        std::string::npos);
}

TEST_CASE("generator with a non-unit rate value") {
  const ImmigrationMechanism psi(2.0, LevyMeasure::atoms({{1.0, 0.5}}));
  // f(x) = x: L f = rate psi'(0) - b x = 0.7 (2 + 0.5) - 1.
  const double got = verify::generator_apply(
      BranchingMechanism(1.0, 1.0, LevyMeasure::null()), &psi, 0.7,
      [](double x) { return x; }, [](double) { return 1.0; },
      [](double) { return 0.0; }, 1.0);
  CHECK(got == doctest::Approx(0.7 * 2.5 - 1.0).epsilon(1e-10));
}
