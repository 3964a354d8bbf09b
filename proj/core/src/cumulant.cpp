#include "cbi/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbi/errors.hpp"
#include "cbi/quadrature.hpp"

namespace cbi::cumulant {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double hermite(double t0, double y0, double d0, double t1, double y1, double d1,
               double s) {
  const double h = t1 - t0;
  if (h <= 0.0) return y1;
  const double th = (s - t0) / h;
  const double th2 = th * th;
  const double th3 = th2 * th;
  return (2.0 * th3 - 3.0 * th2 + 1.0) * y0 + (th3 - 2.0 * th2 + th) * h * d0 +
         (-2.0 * th3 + 3.0 * th2) * y1 + (th3 - th2) * h * d1;
}

std::size_t locate(const std::vector<double>& t, double s) {
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
      1, std::distance(t.begin(), it)));
  return std::min(idx, t.size() - 1);
}

}  // namespace

double CumulantTrajectory::value_at(double s) const {
  if (s <= t.front()) return v.front();
  if (s >= t.back()) return v.back();
  const auto i = locate(t, s);
  return hermite(t[i - 1], v[i - 1], dv[i - 1], t[i], v[i], dv[i], s);
}

double CumulantTrajectory::psi_integral_at(double s) const {
  if (s <= t.front()) return psi_int.front();
  if (s >= t.back()) return psi_int.back();
  const auto i = locate(t, s);
  return hermite(t[i - 1], psi_int[i - 1], dpsi[i - 1], t[i], psi_int[i],
                 dpsi[i], s);
}

double CumulantTrajectory::phi0prime_integral_at(double s) const {
  if (s <= t.front()) return phi0_int.front();
  if (s >= t.back()) return phi0_int.back();
  const auto i = locate(t, s);
  return hermite(t[i - 1], phi0_int[i - 1], dphi0[i - 1], t[i], phi0_int[i],
                 dphi0[i], s);
}

namespace {

struct Deriv {
  double v, psi, phi0;
};

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

CumulantTrajectory solve_cumulant(const mech::BranchingMechanism& phi,
                                  double lambda, double t_end,
                                  const SolveOptions& opts,
                                  const mech::ImmigrationMechanism* psi) {
  if (!(lambda >= 0.0)) throw DomainError("solve_cumulant: lambda must be >= 0");
  if (!(t_end >= 0.0)) throw DomainError("solve_cumulant: t must be >= 0");
  if (!(opts.tol > 0.0)) throw DomainError("solve_cumulant: tol must be > 0");

  const auto rhs = [&](double vv) -> Deriv {
    const double vc = std::max(vv, 0.0);
    Deriv d;
    d.v = -phi.value(vc);
    d.psi = psi != nullptr ? psi->value(vc) : 0.0;
    d.phi0 = opts.with_derivative_integral
                 ? phi.derivative(vc) - phi.linear()
                 : 0.0;
    return d;
  };

  CumulantTrajectory traj;
  traj.lambda = lambda;
  auto push_node = [&](double tt, double vv, double ip, double i0,
                       const Deriv& d) {
    traj.t.push_back(tt);
    traj.v.push_back(vv);
    traj.psi_int.push_back(ip);
    traj.phi0_int.push_back(i0);
    traj.dv.push_back(d.v);
    traj.dpsi.push_back(d.psi);
    traj.dphi0.push_back(d.phi0);
  };

  Deriv k1 = rhs(lambda);
  push_node(0.0, lambda, 0.0, 0.0, k1);
  if (t_end == 0.0) return traj;

  double t = 0.0;
  double v = lambda;
  double ip = 0.0;
  double i0 = 0.0;
  const double atol = opts.tol;
  const double rtol = opts.tol;

  double h = std::min(t_end, 0.1 * (1.0 + lambda) / (1.0 + std::fabs(k1.v)));
  const double h_min = 1e-14 * std::max(1.0, t_end);

  auto stage = [&](double base_v, double base_ip, double base_i0, double hh,
                   const Deriv* k, const double* w, int n) {
    double sv = 0.0, sp = 0.0, s0 = 0.0;
    for (int i = 0; i < n; ++i) {
      sv += w[i] * k[i].v;
      sp += w[i] * k[i].psi;
      s0 += w[i] * k[i].phi0;
    }
    return Deriv{base_v + hh * sv, base_ip + hh * sp, base_i0 + hh * s0};
  };

  while (t < t_end) {
    h = std::min(h, t_end - t);
    if (h < h_min) {
      throw NumericError("solve_cumulant: step size underflow (stiff blowup)", t);
    }

    Deriv k[7];
    k[0] = k1;
    {
      const double w2[] = {a21};
      k[1] = rhs(stage(v, ip, i0, h, k, w2, 1).v);
      const double w3[] = {a31, a32};
      k[2] = rhs(stage(v, ip, i0, h, k, w3, 2).v);
      const double w4[] = {a41, a42, a43};
      k[3] = rhs(stage(v, ip, i0, h, k, w4, 3).v);
      const double w5[] = {a51, a52, a53, a54};
      k[4] = rhs(stage(v, ip, i0, h, k, w5, 4).v);
      const double w6[] = {a61, a62, a63, a64, a65};
      k[5] = rhs(stage(v, ip, i0, h, k, w6, 5).v);
    }
    const double wb[] = {b1, 0.0, b3, b4, b5, b6};
    const Deriv prop = stage(v, ip, i0, h, k, wb, 6);
    k[6] = rhs(prop.v);

    const double err_v = h * (e1 * k[0].v + e3 * k[2].v + e4 * k[3].v +
                              e5 * k[4].v + e6 * k[5].v + e7 * k[6].v);
    const double err_p = h * (e1 * k[0].psi + e3 * k[2].psi + e4 * k[3].psi +
                              e5 * k[4].psi + e6 * k[5].psi + e7 * k[6].psi);
    const double err_0 = h * (e1 * k[0].phi0 + e3 * k[2].phi0 + e4 * k[3].phi0 +
                              e5 * k[4].phi0 + e6 * k[5].phi0 + e7 * k[6].phi0);

    auto scaled = [&](double e, double y0, double y1) {
      return e / (atol + rtol * std::max(std::fabs(y0), std::fabs(y1)));
    };
    const double r0 = scaled(err_v, v, prop.v);
    const double r1 = scaled(err_p, ip, prop.psi);
    const double r2 = scaled(err_0, i0, prop.phi0);
    const double err = std::sqrt((r0 * r0 + r1 * r1 + r2 * r2) / 3.0);

    if (err <= 1.0) {
      t += h;
      v = std::max(prop.v, 0.0);
      ip = prop.psi;
      i0 = prop.phi0;
      k1 = prop.v < 0.0 ? rhs(v) : k[6];
      push_node(t, v, ip, i0, k1);
    }
    const double factor =
        std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    h *= factor;
  }
  return traj;
}

double cumulant_at(const mech::BranchingMechanism& phi, double lambda, double t,
                   double tol) {
  SolveOptions opts;
  opts.tol = tol;
  opts.with_derivative_integral = false;
  return solve_cumulant(phi, lambda, t, opts).v.back();
}

double stable_qfactor(double b, double alpha, double t) {
  if (std::fabs(b) < 1e-12) return alpha * t;
  return -std::expm1(-alpha * b * t) / b;
}

double stable_cumulant(double c, double alpha, double b, double t,
                       double lambda) {
  if (!(c > 0.0)) throw DomainError("stable_cumulant: c must be > 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw DomainError("stable_cumulant: alpha must lie in (0,1]");
  }
  if (!(t >= 0.0) || !(lambda >= 0.0)) {
    throw DomainError("stable_cumulant: t and lambda must be >= 0");
  }
  if (lambda == 0.0) return 0.0;
  if (t == 0.0) return lambda;
  const double q = stable_qfactor(b, alpha, t);
  return std::exp(-b * t) * lambda *
         std::pow(1.0 + c * q * std::pow(lambda, alpha), -1.0 / alpha);
}

namespace {

// int_u^inf dz/phi(z), via z = u/s over s in (0,1].
double time_to_level(const mech::BranchingMechanism& phi, double u) {
  const auto integrand = [&](double s) -> double {
    // Levels beyond 1e30 contribute nothing at the tolerances in play and
    // would overflow phi's quadratic term.
    if (!(s > u * 1e-30)) return 0.0;
    const double z = u / s;
    const double p = phi.value(z);
    if (!(p > 0.0) || !std::isfinite(p)) return 0.0;
    return u / (s * s * p);
  };
  return quad::integrate_singular(integrand, 0.0, 1.0, 1e-11);
}

}  // namespace

double extinction_exponent(const mech::BranchingMechanism& phi, double t) {
  if (!(t > 0.0)) throw DomainError("extinction_exponent: t must be > 0");
  if (!mech::grey_condition(phi)) {
    throw DomainError("extinction_exponent: Grey's condition fails (vbar_t infinite)");
  }
  const double root = mech::largest_root(phi);

  // Route 1: root-find on u -> int_u^inf dz/phi(z) = t.
  auto time_of = [&](double u) { return time_to_level(phi, u); };
  double hi = std::max(1.0, 2.0 * root + 1.0);
  while (time_of(hi) > t) {
    hi *= 4.0;
    if (hi > 1e280) throw NumericError("extinction_exponent: no upper bracket");
  }
  double lo = root + 0.25 * (hi - root);
  while (time_of(lo) < t) {
    lo = root + 0.25 * (lo - root);
    if (lo - root < 1e-280) {
      throw NumericError("extinction_exponent: no lower bracket");
    }
  }
  for (int i = 0; i < 100 && (hi - lo) > 1e-13 * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (time_of(mid) > t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double by_root = 0.5 * (lo + hi);

  // Route 2: integrate dv/dt = -phi(v) down from a large initial value. The
  // start is placed far enough above the answer that the finite-start bias
  // stays below the agreement tolerance.
  const double kappa =
      phi.diffusion() > 0.0
          ? 2.0
          : phi.jump_measure().visit([](const auto& rep) -> double {
              using T = std::decay_t<decltype(rep)>;
              if constexpr (std::is_same_v<T, measures::LevyMeasure::StableBranching>) {
                return rep.alpha;
              } else {
                return 2.0;
              }
            });
  const double boost = std::pow((kappa - 1.0) * 1e-7, -1.0 / (kappa - 1.0));
  const double v0 = std::min(std::max(1e8, boost * by_root), 1e290);
  SolveOptions opts;
  opts.tol = 1e-10;
  opts.with_derivative_integral = false;
  const double by_ode = solve_cumulant(phi, v0, t, opts).v.back();

  if (std::fabs(by_ode - by_root) > 1e-6 * std::max(by_root, 1e-300)) {
    throw NumericError("extinction_exponent: root-find and ODE routes disagree");
  }
  return by_root;
}

double extinction_probability(const mech::BranchingMechanism& phi, double x,
                              double t) {
  if (!(x >= 0.0)) throw DomainError("extinction_probability: x must be >= 0");
  if (x == 0.0) return 1.0;
  if (!mech::grey_condition(phi)) return 0.0;
  const double exponent = std::isinf(t) ? mech::largest_root(phi)
                                        : extinction_exponent(phi, t);
  return std::exp(-x * exponent);
}

double transition_laplace(const mech::BranchingMechanism& phi,
                          const mech::ImmigrationMechanism* psi, double x,
                          double t, double lambda, double tol) {
  if (!(x >= 0.0) || !(t >= 0.0) || !(lambda >= 0.0)) {
    throw DomainError("transition_laplace: inputs must be >= 0");
  }
  if (lambda == 0.0) return 1.0;
  SolveOptions opts;
  opts.tol = tol;
  opts.with_derivative_integral = false;
  const auto traj = solve_cumulant(phi, lambda, t, opts, psi);
  double exponent = x * traj.v.back();
  if (psi != nullptr) exponent += traj.psi_int.back();
  return std::exp(-exponent);
}

double mean(const mech::BranchingMechanism& phi,
            const mech::ImmigrationMechanism* psi, double x, double t) {
  if (!(x >= 0.0) || !(t >= 0.0)) throw DomainError("mean: inputs must be >= 0");
  const double b = phi.linear();
  const double rate = psi != nullptr && !psi->is_null() ? psi->mean_rate() : 0.0;
  if (std::isinf(t)) {
    if (b > 0.0) return rate / b;
    if (rate > 0.0) return kInf;
    return b == 0.0 ? x : kInf;
  }
  if (b == 0.0) return x + rate * t;
  const double decay = std::exp(-b * t);
  const double integral = -std::expm1(-b * t) / b;
  return x * decay + rate * integral;
}

double mean_with_rate(const mech::BranchingMechanism& phi,
                      const mech::ImmigrationMechanism& psi,
                      const std::function<double(double)>& rate, double x,
                      double t) {
  if (!(x >= 0.0) || !(t >= 0.0)) throw DomainError("mean: inputs must be >= 0");
  const double b = phi.linear();
  const double slope = psi.is_null() ? 0.0 : psi.mean_rate();
  const auto integrand = [&](double s) {
    return std::exp(-b * (t - s)) * rate(s);
  };
  return x * std::exp(-b * t) + slope * quad::integrate(integrand, 0.0, t, 1e-10);
}

namespace {

struct LeadingTerm {
  double exponent;
  double coeff;
};

// Dominant power of phi at 0+: b z, else c z^2 (plus any light-jump mass,
// which is also quadratic at the origin), overridden by a stable z^alpha.
LeadingTerm leading_term_phi(const mech::BranchingMechanism& phi) {
  if (phi.linear() > 0.0) return {1.0, phi.linear()};
  return phi.jump_measure().visit([&](const auto& rep) -> LeadingTerm {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, measures::LevyMeasure::StableBranching>) {
      const double a = rep.alpha;
      return {a, rep.sigma * std::tgamma(2.0 - a) / (a * (a - 1.0))};
    } else {
      const double quad_coeff =
          phi.diffusion() +
          0.5 * phi.jump_measure().second_moment_below(1e300);
      return {2.0, quad_coeff};
    }
  });
}

// Dominant power of psi at 0+: a stable z^alpha tail wins over the linear
// beta + int u n(du) slope.
LeadingTerm leading_term_psi(const mech::ImmigrationMechanism& psi) {
  return psi.jump_measure().visit([&](const auto& rep) -> LeadingTerm {
    using T = std::decay_t<decltype(rep)>;
    if constexpr (std::is_same_v<T, measures::LevyMeasure::StableImmigration>) {
      const double a = rep.alpha;
      return {a, rep.sigma * std::tgamma(1.0 - a) / a};
    } else {
      return {1.0, psi.drift() + psi.jump_measure().mean_above(0.0)};
    }
  });
}

}  // namespace

double stationary_laplace(const mech::BranchingMechanism& phi,
                          const mech::ImmigrationMechanism& psi,
                          double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("stationary_laplace: lambda must be >= 0");
  if (psi.is_null()) return 1.0;  // eta = delta_0
  if (phi.linear() < 0.0) {
    throw DomainError("stationary_laplace: requires b >= 0");
  }
  if (phi.is_linear() && phi.linear() == 0.0) {
    throw DomainError("stationary_laplace: phi vanishes on (0,inf)");
  }
  // Convergence of int_0 psi/phi near zero: compare low-order exponents.
  const LeadingTerm lp = leading_term_phi(phi);
  const LeadingTerm lq = leading_term_psi(psi);
  if (lq.exponent <= lp.exponent - 1.0) {
    throw DomainError("stationary_laplace: no stationary law (integral diverges)");
  }
  if (lambda == 0.0) return 1.0;
  const auto integrand = [&](double z) {
    // Below 1e-30 both sides follow their leading powers exactly to double
    // precision; evaluating the ratio directly there would underflow.
    if (z < 1e-30) {
      return lq.coeff / lp.coeff *
             std::exp((lq.exponent - lp.exponent) * std::log(z));
    }
    return psi.value(z) / phi.value(z);
  };
  const double integral = quad::integrate_singular(integrand, 0.0, lambda, 1e-10);
  return std::exp(-integral);
}

double size_biased_laplace(const mech::BranchingMechanism& phi, double x,
                           double t, double lambda, double tol) {
  if (!(x >= 0.0) || !(t >= 0.0) || !(lambda >= 0.0)) {
    throw DomainError("size_biased_laplace: inputs must be >= 0");
  }
  SolveOptions opts;
  opts.tol = tol;
  const auto traj = solve_cumulant(phi, lambda, t, opts);
  return std::exp(-x * traj.v.back() - traj.phi0_int.back());
}

}  // namespace cbi::cumulant
