#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cbi/mechanism.hpp"
#include "cbi/paths.hpp"
#include "cbi/stats.hpp"

namespace cbi::verify {

/// One Monte Carlo cross-check against an analytic value.
struct CheckReport {
  std::string name;
  double analytic = 0.0;
  MCEstimate estimate;
  double z_score = 0.0;
  double z_threshold = 4.0;
  double bias_allowance = 0.0;
  bool pass = false;
  // Reproducibility metadata.
  std::uint64_t seed = 0;
  double dt = 0.0;
};

struct CompareOptions {
  double z_threshold = 4.0;
  double bias_allowance = 0.0;
  std::uint64_t seed = 0;
  double dt = 0.0;
};

/// pass iff |mean - analytic| <= z_threshold * stderr + bias_allowance.
/// Needs at least 100 samples.
CheckReport mc_compare(const std::string& name, double analytic,
                       std::span<const double> transformed,
                       const CompareOptions& opts = {});

/// Constancy of E exp{-lambda y(t) + t psi(lambda) - phi(lambda) I(t)} in t
/// (I is the accumulated integral of the path): one report per entry of
/// t_list, each compared against the t = 0 value exp(-lambda y0).
std::vector<CheckReport> martingale_check(std::span<const paths::SamplePath> paths,
                                          const mech::BranchingMechanism& phi,
                                          const mech::ImmigrationMechanism& psi,
                                          double lambda,
                                          std::span<const double> t_list,
                                          const CompareOptions& opts = {});

/// Generator of the immigration process applied to f at x:
///   c x f'' + x int [f(x+z)-f(x)-z f'(x)] m(dz)
///   + (rate beta - b x) f' + rate int [f(x+z)-f(x)] n(dz).
double generator_apply(const mech::BranchingMechanism& phi,
                       const mech::ImmigrationMechanism* psi,
                       double rate_value,
                       const std::function<double(double)>& f,
                       const std::function<double(double)>& f_prime,
                       const std::function<double(double)>& f_second,
                       double x);

/// Fraction of paths at zero by time t, with the Bernoulli standard error.
MCEstimate extinction_estimate(std::span<const paths::SamplePath> paths,
                               double t);

/// Empirical Laplace transform of y(t) from x1+x2 versus the product of two
/// independent runs from x1 and x2, compared with the combined standard
/// error. The sampler maps (initial state, stream) to y(t).
CheckReport branching_property_check(
    const std::function<double(double, rng::RandomStream&)>& sampler,
    double x1, double x2, double lambda, std::int64_t n_paths,
    rng::RandomStream& s, const CompareOptions& opts = {});

/// CSV rows `name,analytic,estimate,stderr,z,pass,seed,n,dt`.
void write_report_csv(std::span<const CheckReport> reports, std::ostream& os);

}  // namespace cbi::verify
