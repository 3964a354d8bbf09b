#include "cbi/verify.hpp"

#include <cmath>

#include "cbi/csv.hpp"
#include "cbi/errors.hpp"

namespace cbi::verify {

CheckReport mc_compare(const std::string& name, double analytic,
                       std::span<const double> transformed,
                       const CompareOptions& opts) {
  if (transformed.size() < 100) {
    throw DomainError("mc_compare: needs at least 100 samples");
  }
  CheckReport r;
  r.name = name;
  r.analytic = analytic;
  r.estimate = mc_estimate(transformed);
  r.z_threshold = opts.z_threshold;
  r.bias_allowance = opts.bias_allowance;
  r.seed = opts.seed;
  r.dt = opts.dt;
  r.z_score = (r.estimate.mean - analytic) / std::max(r.estimate.stderr_, 1e-15);
  r.pass = std::fabs(r.estimate.mean - analytic) <=
           opts.z_threshold * r.estimate.stderr_ + opts.bias_allowance;
  return r;
}

std::vector<CheckReport> martingale_check(std::span<const paths::SamplePath> paths,
                                          const mech::BranchingMechanism& phi,
                                          const mech::ImmigrationMechanism& psi,
                                          double lambda,
                                          std::span<const double> t_list,
                                          const CompareOptions& opts) {
  if (paths.empty()) throw DomainError("martingale_check: no paths");
  const double phi_l = phi.value(lambda);
  const double psi_l = psi.value(lambda);
  const double y0 = paths.front().values.front();
  const double target = std::exp(-lambda * y0);

  std::vector<CheckReport> reports;
  reports.reserve(t_list.size());
  std::vector<double> h(paths.size());
  for (double t : t_list) {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const double y_t = paths[i].value_at(t);
      const double integral = paths[i].integral_at(t);
      h[i] = std::exp(-lambda * y_t + t * psi_l - phi_l * integral);
    }
    auto r = mc_compare("martingale@t=" + csv::num(t), target, h, opts);
    reports.push_back(std::move(r));
  }
  return reports;
}

double generator_apply(const mech::BranchingMechanism& phi,
                       const mech::ImmigrationMechanism* psi,
                       double rate_value,
                       const std::function<double(double)>& f,
                       const std::function<double(double)>& f_prime,
                       const std::function<double(double)>& f_second,
                       double x) {
  if (!(x >= 0.0)) throw DomainError("generator_apply: x must be >= 0");
  if (!(rate_value >= 0.0)) {
    throw DomainError("generator_apply: rate must be >= 0");
  }
  const double fx = f(x);
  const double fpx = f_prime(x);
  const double fppx = f_second(x);
  if (!std::isfinite(fx) || !std::isfinite(fpx) || !std::isfinite(fppx)) {
    throw DomainError("generator_apply: f or its derivatives not finite at x");
  }

  // The subtraction kernels lose precision below ~1e-5 (there the exact
  // Taylor leading terms take over) and carry an O(1e-9) rounding-noise
  // floor, so the quadrature targets 1e-8.
  constexpr double kTaylorSwitch = 1e-5;
  constexpr double kTol = 1e-8;
  double result = phi.diffusion() * x * fppx - phi.linear() * x * fpx;
  if (!phi.jump_measure().is_null() && x > 0.0) {
    const auto kernel = [&](double z) { return f(x + z) - fx - z * fpx; };
    result += x * phi.jump_measure().integrate_kernel(
                      kernel, 2.0, 0.5 * fppx, 1.0, kTol, kTaylorSwitch);
  }
  if (psi != nullptr && !psi->is_null() && rate_value > 0.0) {
    result += rate_value * psi->drift() * fpx;
    if (!psi->jump_measure().is_null()) {
      const auto kernel = [&](double z) { return f(x + z) - fx; };
      result += rate_value * psi->jump_measure().integrate_kernel(
                                 kernel, 1.0, fpx, 0.0, kTol, kTaylorSwitch);
    }
  }
  return result;
}

MCEstimate extinction_estimate(std::span<const paths::SamplePath> paths,
                               double t) {
  std::vector<double> indicator(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    indicator[i] = paths[i].value_at(t) <= 0.0 ? 1.0 : 0.0;
  }
  return mc_estimate(indicator);
}

CheckReport branching_property_check(
    const std::function<double(double, rng::RandomStream&)>& sampler,
    double x1, double x2, double lambda, std::int64_t n_paths,
    rng::RandomStream& s, const CompareOptions& opts) {
  if (n_paths < 100) {
    throw DomainError("branching_property_check: needs at least 100 paths");
  }
  std::vector<double> joint(static_cast<std::size_t>(n_paths));
  std::vector<double> left(static_cast<std::size_t>(n_paths));
  std::vector<double> right(static_cast<std::size_t>(n_paths));
  for (std::int64_t i = 0; i < n_paths; ++i) {
    auto s_joint = rng::split(s, 3 * static_cast<std::uint64_t>(i));
    auto s_left = rng::split(s, 3 * static_cast<std::uint64_t>(i) + 1);
    auto s_right = rng::split(s, 3 * static_cast<std::uint64_t>(i) + 2);
    joint[static_cast<std::size_t>(i)] =
        std::exp(-lambda * sampler(x1 + x2, s_joint));
    left[static_cast<std::size_t>(i)] =
        std::exp(-lambda * sampler(x1, s_left));
    right[static_cast<std::size_t>(i)] =
        std::exp(-lambda * sampler(x2, s_right));
  }
  const MCEstimate e_joint = mc_estimate(joint);
  const MCEstimate e_left = mc_estimate(left);
  const MCEstimate e_right = mc_estimate(right);

  const double product = e_left.mean * e_right.mean;
  const double product_err =
      std::sqrt(e_left.mean * e_left.mean * e_right.stderr_ * e_right.stderr_ +
                e_right.mean * e_right.mean * e_left.stderr_ * e_left.stderr_);
  const double combined =
      std::sqrt(e_joint.stderr_ * e_joint.stderr_ + product_err * product_err);

  CheckReport r;
  r.name = "branching_property";
  r.analytic = product;  // the product side plays the reference role
  r.estimate = e_joint;
  r.z_threshold = opts.z_threshold;
  r.bias_allowance = opts.bias_allowance;
  r.seed = opts.seed;
  r.dt = opts.dt;
  r.z_score = (e_joint.mean - product) / std::max(combined, 1e-15);
  // The absolute epsilon keeps exact (noise-free) samplers from failing on
  // rounding in the product of the two arms.
  r.pass = std::fabs(e_joint.mean - product) <=
           opts.z_threshold * combined + opts.bias_allowance + 1e-12;
  return r;
}

void write_report_csv(std::span<const CheckReport> reports, std::ostream& os) {
  os << "name,analytic,estimate,stderr,z,pass,seed,n,dt\n";
  for (const auto& r : reports) {
    os << r.name << ',' << csv::num(r.analytic) << ','
       << csv::num(r.estimate.mean) << ',' << csv::num(r.estimate.stderr_)
       << ',' << csv::num(r.z_score) << ',' << (r.pass ? 1 : 0) << ','
       << csv::num(static_cast<std::int64_t>(r.seed)) << ','
       << csv::num(r.estimate.n) << ',' << csv::num(r.dt) << '\n';
  }
}

}  // namespace cbi::verify
