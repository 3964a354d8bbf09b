#include "cbi/levy_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbi/errors.hpp"
#include "cbi/quadrature.hpp"

namespace cbi::measures {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LevyMeasure LevyMeasure::stable_branching(double sigma, double alpha) {
  if (!(sigma > 0.0)) throw DomainError("StableBranching: sigma must be > 0");
  if (!(alpha > 1.0) || !(alpha < 2.0)) {
    throw DomainError("StableBranching: alpha must lie in (1,2)");
  }
  LevyMeasure m;
  m.rep_ = StableBranching{sigma, alpha};
  return m;
}

LevyMeasure LevyMeasure::stable_immigration(double sigma, double alpha) {
  if (!(sigma > 0.0)) throw DomainError("StableImmigration: sigma must be > 0");
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw DomainError("StableImmigration: alpha must lie in (0,1)");
  }
  LevyMeasure m;
  m.rep_ = StableImmigration{sigma, alpha};
  return m;
}

LevyMeasure LevyMeasure::exponential_jump(double a, double theta) {
  if (!(a >= 0.0)) throw DomainError("ExponentialJump: a must be >= 0");
  if (!(theta > 0.0)) throw DomainError("ExponentialJump: theta must be > 0");
  LevyMeasure m;
  m.rep_ = ExponentialJump{a, theta};
  return m;
}

LevyMeasure LevyMeasure::atoms(std::vector<std::pair<double, double>> points) {
  for (const auto& [z, w] : points) {
    if (!(z > 0.0) || !(w > 0.0)) {
      throw DomainError("Atoms: locations and weights must be > 0");
    }
  }
  std::sort(points.begin(), points.end());
  LevyMeasure m;
  m.rep_ = Atoms{std::move(points)};
  return m;
}

bool LevyMeasure::is_null() const {
  return visit([](const auto& rep) -> bool {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, Null>) {
      return true;
    } else if constexpr (std::is_same_v<T, ExponentialJump>) {
      return rep.a == 0.0;
    } else if constexpr (std::is_same_v<T, Atoms>) {
      return rep.points.empty();
    } else {
      return false;
    }
  });
}

namespace {

// int kernel(u) s u^{-1-alpha} du over (0,inf), entirely in log space
// (u = e^x): analytic power head below e^{x_lo}, adaptive Gauss-Kronrod on
// [x_lo, 0] and [0, x_hi]. The integrand decays like e^{(order0-alpha)x}
// to the left and e^{-(alpha-order_inf)x} to the right, so both cutoffs
// carry negligible truncated mass.
double stable_density_integral(const std::function<double(double)>& kernel,
                               double sigma, double alpha, double order0,
                               double coeff0, double order_inf,
                               double rel_tol) {
  const double decay = alpha - order_inf;
  if (decay <= 1e-12) return kInf;  // tail u^{q-1-alpha} not integrable
  const double e0 = order0 - alpha;
  if (e0 <= 1e-12) return kInf;     // head u^{e0-1} not integrable

  const double x_lo = -690.0 / std::max(alpha, 0.5);
  const double head = sigma * coeff0 * std::exp(e0 * x_lo) / e0;

  const auto log_piece = [&](double x) {
    const double k = kernel(std::exp(x));
    // Overflowing kernel values only occur deep in the e^{-decay x} tail,
    // where the relative contribution is already negligible.
    if (k == 0.0 || !std::isfinite(k)) return 0.0;
    return k * sigma * std::exp(-alpha * x);
  };
  const double x_hi = std::min(45.0 / decay + 60.0, 700.0);
  const double lower = quad::integrate(log_piece, x_lo, 0.0, rel_tol);
  const double upper = quad::integrate(log_piece, 0.0, x_hi, rel_tol);

  return head + lower + upper;
}

double exponential_density_integral(const std::function<double(double)>& kernel,
                                    double a, double theta, double rel_tol) {
  if (a == 0.0) return 0.0;
  const auto f = [&](double u) { return kernel(u) * a * std::exp(-theta * u); };
  return quad::integrate(f, 0.0, 1.0, rel_tol) +
         quad::integrate(f, 1.0, kInf, rel_tol);
}

// e^{-w} - 1 + w without cancellation near 0.
double compensated_exp(double w) {
  if (w < 3e-4) {
    return w * w * (0.5 + w * (-1.0 / 6.0 + w * (1.0 / 24.0 - w / 120.0)));
  }
  return std::expm1(-w) + w;
}

double one_minus_exp(double w) { return -std::expm1(-w); }

}  // namespace

double LevyMeasure::integrate_kernel(const std::function<double(double)>& kernel,
                                     double order_at_zero, double coeff_at_zero,
                                     double order_at_inf, double rel_tol,
                                     double safe_below) const {
  std::function<double(double)> guarded = kernel;
  if (safe_below > 0.0) {
    guarded = [&kernel, safe_below, order_at_zero,
               coeff_at_zero](double u) -> double {
      if (u < safe_below) return coeff_at_zero * std::pow(u, order_at_zero);
      return kernel(u);
    };
  }
  return visit([&](const auto& rep) -> double {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, Null>) {
      return 0.0;
    } else if constexpr (std::is_same_v<T, StableBranching>) {
      return stable_density_integral(guarded, rep.sigma, rep.alpha,
                                     order_at_zero, coeff_at_zero, order_at_inf,
                                     rel_tol);
    } else if constexpr (std::is_same_v<T, StableImmigration>) {
      return stable_density_integral(guarded, rep.sigma, rep.alpha,
                                     order_at_zero, coeff_at_zero, order_at_inf,
                                     rel_tol);
    } else if constexpr (std::is_same_v<T, ExponentialJump>) {
      return exponential_density_integral(guarded, rep.a, rep.theta, rel_tol);
    } else {
      double sum = 0.0;
      for (const auto& [z, w] : rep.points) sum += w * kernel(z);
      return sum;
    }
  });
}

double LevyMeasure::one_minus_exp_integral(double z, double rel_tol) const {
  if (z == 0.0) return 0.0;
  return integrate_kernel([z](double u) { return one_minus_exp(z * u); },
                          /*order_at_zero=*/1.0, /*coeff_at_zero=*/z,
                          /*order_at_inf=*/0.0, rel_tol);
}

double LevyMeasure::compensated_exp_integral(double z, double rel_tol) const {
  if (z == 0.0) return 0.0;
  return integrate_kernel([z](double u) { return compensated_exp(z * u); },
                          /*order_at_zero=*/2.0, /*coeff_at_zero=*/0.5 * z * z,
                          /*order_at_inf=*/1.0, rel_tol);
}

double LevyMeasure::derivative_kernel_integral(double z, double rel_tol) const {
  if (z == 0.0) return 0.0;
  return integrate_kernel([z](double u) { return u * one_minus_exp(z * u); },
                          /*order_at_zero=*/2.0, /*coeff_at_zero=*/z,
                          /*order_at_inf=*/1.0, rel_tol);
}

double LevyMeasure::mass_above(double eps) const {
  return visit([&](const auto& rep) -> double {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, Null>) {
      return 0.0;
    } else if constexpr (std::is_same_v<T, StableBranching> ||
                         std::is_same_v<T, StableImmigration>) {
      if (!(eps > 0.0)) return kInf;
      return rep.sigma * std::pow(eps, -rep.alpha) / rep.alpha;
    } else if constexpr (std::is_same_v<T, ExponentialJump>) {
      return rep.a / rep.theta * std::exp(-rep.theta * eps);
    } else {
      double sum = 0.0;
      for (const auto& [z, w] : rep.points)
        if (z > eps) sum += w;
      return sum;
    }
  });
}

double LevyMeasure::mean_above(double eps) const {
  return visit([&](const auto& rep) -> double {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, Null>) {
      return 0.0;
    } else if constexpr (std::is_same_v<T, StableBranching>) {
      if (!(eps > 0.0)) return kInf;
      return rep.sigma * std::pow(eps, 1.0 - rep.alpha) / (rep.alpha - 1.0);
    } else if constexpr (std::is_same_v<T, StableImmigration>) {
      return kInf;
    } else if constexpr (std::is_same_v<T, ExponentialJump>) {
      const double th = rep.theta;
      return rep.a * std::exp(-th * eps) * (eps / th + 1.0 / (th * th));
    } else {
      double sum = 0.0;
      for (const auto& [z, w] : rep.points)
        if (z > eps) sum += w * z;
      return sum;
    }
  });
}

double LevyMeasure::mean_below(double eps) const {
  return visit([&](const auto& rep) -> double {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, Null>) {
      return 0.0;
    } else if constexpr (std::is_same_v<T, StableBranching>) {
      return kInf;
    } else if constexpr (std::is_same_v<T, StableImmigration>) {
      return rep.sigma * std::pow(eps, 1.0 - rep.alpha) / (1.0 - rep.alpha);
    } else if constexpr (std::is_same_v<T, ExponentialJump>) {
      const double th = rep.theta;
      return rep.a * (1.0 / (th * th) -
                      std::exp(-th * eps) * (eps / th + 1.0 / (th * th)));
    } else {
      double sum = 0.0;
      for (const auto& [z, w] : rep.points)
        if (z <= eps) sum += w * z;
      return sum;
    }
  });
}

double LevyMeasure::second_moment_below(double eps) const {
  return visit([&](const auto& rep) -> double {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, Null>) {
      return 0.0;
    } else if constexpr (std::is_same_v<T, StableBranching> ||
                         std::is_same_v<T, StableImmigration>) {
      return rep.sigma * std::pow(eps, 2.0 - rep.alpha) / (2.0 - rep.alpha);
    } else if constexpr (std::is_same_v<T, ExponentialJump>) {
      const double th = rep.theta;
      const double th2 = th * th;
      const double th3 = th2 * th;
      return rep.a * (2.0 / th3 - std::exp(-th * eps) * (eps * eps / th +
                                                         2.0 * eps / th2 +
                                                         2.0 / th3));
    } else {
      double sum = 0.0;
      for (const auto& [z, w] : rep.points)
        if (z <= eps) sum += w * z * z;
      return sum;
    }
  });
}

double LevyMeasure::sample_jump_above(double eps, rng::RandomStream& s) const {
  return visit([&](const auto& rep) -> double {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, StableBranching> ||
                  std::is_same_v<T, StableImmigration>) {
      if (!(eps > 0.0)) {
        throw DomainError("sample_jump_above: stable density needs eps > 0");
      }
      // Pareto tail: mu(x,inf)/mu(eps,inf) = (x/eps)^{-alpha}
      return eps * std::pow(rng::uniform01(s), -1.0 / rep.alpha);
    } else if constexpr (std::is_same_v<T, ExponentialJump>) {
      if (!(rep.a > 0.0)) throw DomainError("sample_jump_above: zero measure");
      return eps + rng::exponential(s) / rep.theta;
    } else if constexpr (std::is_same_v<T, Atoms>) {
      double total = 0.0;
      for (const auto& [z, w] : rep.points)
        if (z > eps) total += w;
      if (!(total > 0.0)) throw DomainError("sample_jump_above: zero measure");
      double u = rng::uniform01(s) * total;
      for (const auto& [z, w] : rep.points) {
        if (z <= eps) continue;
        u -= w;
        if (u <= 0.0) return z;
      }
      return rep.points.back().first;
    } else {
      throw DomainError("sample_jump_above: zero measure");
    }
  });
}

}  // namespace cbi::measures
