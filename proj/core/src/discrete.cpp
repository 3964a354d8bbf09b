#include "cbi/discrete.hpp"

#include <cmath>
#include <limits>

#include "cbi/errors.hpp"

namespace cbi::discrete {

namespace {
constexpr std::int64_t kPopulationLimit = std::int64_t{1} << 62;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

OffspringLaw OffspringLaw::binary(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binary: p must lie in [0,1]");
  return OffspringLaw(Rep{Binary{p}});
}

OffspringLaw OffspringLaw::poisson(double mu) {
  if (!(mu > 0.0)) throw DomainError("poisson: mu must be > 0");
  return OffspringLaw(Rep{Poisson{mu}});
}

OffspringLaw OffspringLaw::geometric(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("geometric: p must lie in (0,1)");
  return OffspringLaw(Rep{Geometric{p}});
}

OffspringLaw OffspringLaw::stable(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw DomainError("stable offspring: alpha must lie in (1,2)");
  }
  return OffspringLaw(Rep{Stable{alpha}});
}

OffspringLaw OffspringLaw::from_mechanism(const mech::BranchingMechanism& phi,
                                          double k) {
  if (!(k > 0.0)) throw DomainError("from_mechanism: k must be > 0");
  const double jump_part = phi.jump_measure().is_null()
                               ? 0.0
                               : phi.jump_measure().derivative_kernel_integral(k);
  const double gamma0 = (1.0 + 2.0 * phi.diffusion()) * k + jump_part;
  const double gamma1 = std::fabs(phi.linear());
  return OffspringLaw(Rep{FromMechanism{phi, k, gamma0, gamma1}});
}

double OffspringLaw::pgf(double z) const {
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("pgf: z must lie in [0,1]");
  return std::visit(
      [&](const auto& rep) -> double {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Binary>) {
          return (1.0 - rep.p) + rep.p * z * z;
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return std::exp(rep.mu * (z - 1.0));
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return rep.p / (1.0 - (1.0 - rep.p) * z);
        } else if constexpr (std::is_same_v<T, Stable>) {
          return z + std::pow(1.0 - z, rep.alpha) / rep.alpha;
        } else {
          const double w = 1.0 - z;
          const double phi0 =
              rep.phi.value(rep.k * w) - rep.phi.linear() * rep.k * w;
          const double g0 = z + phi0 / (rep.k * rep.gamma0);
          if (rep.gamma1 == 0.0) return g0;
          const double g1 = rep.phi.linear() > 0.0 ? 1.0 : z * z;
          return (rep.gamma0 * g0 + rep.gamma1 * g1) /
                 (rep.gamma0 + rep.gamma1);
        }
      },
      rep_);
}

double OffspringLaw::pgf_gap(double w) const {
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("pgf_gap: w must lie in [0,1]");
  return std::visit(
      [&](const auto& rep) -> double {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Binary>) {
          return rep.p * w * (2.0 - w);
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return -std::expm1(-rep.mu * w);
        } else if constexpr (std::is_same_v<T, Geometric>) {
          const double q = 1.0 - rep.p;
          return q * w / (rep.p + q * w);
        } else if constexpr (std::is_same_v<T, Stable>) {
          return w - std::pow(w, rep.alpha) / rep.alpha;
        } else {
          const double phi0 =
              rep.phi.value(rep.k * w) - rep.phi.linear() * rep.k * w;
          const double gap0 = w - phi0 / (rep.k * rep.gamma0);
          if (rep.gamma1 == 0.0) return gap0;
          const double gap1 =
              rep.phi.linear() > 0.0 ? 0.0 : w * (2.0 - w);
          return (rep.gamma0 * gap0 + rep.gamma1 * gap1) /
                 (rep.gamma0 + rep.gamma1);
        }
      },
      rep_);
}

double OffspringLaw::mean() const {
  return std::visit(
      [&](const auto& rep) -> double {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Binary>) {
          return 2.0 * rep.p;
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return rep.mu;
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return (1.0 - rep.p) / rep.p;
        } else if constexpr (std::is_same_v<T, Stable>) {
          return 1.0;
        } else {
          const double g1_mean = rep.phi.linear() > 0.0 ? 0.0 : 2.0;
          return (rep.gamma0 + rep.gamma1 * g1_mean) /
                 (rep.gamma0 + rep.gamma1);
        }
      },
      rep_);
}

bool OffspringLaw::is_from_mechanism() const {
  return std::holds_alternative<FromMechanism>(rep_);
}

double OffspringLaw::natural_timescale() const {
  if (const auto* rep = std::get_if<FromMechanism>(&rep_)) {
    return rep->gamma0 + rep->gamma1;
  }
  throw DomainError("natural_timescale: only defined for FromMechanism laws");
}

std::int64_t OffspringLaw::sample(rng::RandomStream& s) const {
  return std::visit(
      [&](const auto& rep) -> std::int64_t {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Binary>) {
          return rng::uniform01(s) < rep.p ? 2 : 0;
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return rng::sample_poisson(s, rep.mu);
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return static_cast<std::int64_t>(
              std::floor(std::log(rng::uniform01(s)) / std::log1p(-rep.p)));
        } else if constexpr (std::is_same_v<T, Stable>) {
          // Inverse CDF with the on-demand ratio recurrence
          // p_{j+1} = p_j (j - alpha)/(j + 1); tail lump below mass 1e-15.
          const double u = rng::uniform01(s);
          double cum = 1.0 / rep.alpha;  // p_0
          if (u <= cum) return 0;
          double p = 0.5 * (rep.alpha - 1.0);  // p_2 (p_1 = 0)
          std::int64_t j = 2;
          for (;;) {
            cum += p;
            if (u <= cum || 1.0 - cum < 1e-15) return j;
            p *= (static_cast<double>(j) - rep.alpha) /
                 static_cast<double>(j + 1);
            ++j;
          }
        } else {
          throw DomainError(
              "sample: FromMechanism laws have no tractable sampler");
        }
      },
      rep_);
}

namespace {

std::int64_t step_population(const OffspringLaw& g, std::int64_t x,
                             rng::RandomStream& s) {
  std::int64_t next = 0;
  for (std::int64_t i = 0; i < x; ++i) {
    next += g.sample(s);
    if (next > kPopulationLimit) {
      throw NumericError("galton-watson population overflow");
    }
  }
  return next;
}

}  // namespace

std::vector<std::int64_t> simulate_galton_watson(const OffspringLaw& g,
                                                 std::int64_t x0, int n_steps,
                                                 rng::RandomStream& s) {
  if (x0 < 0 || n_steps < 0) {
    throw DomainError("simulate_galton_watson: x0 and n_steps must be >= 0");
  }
  std::vector<std::int64_t> path;
  path.reserve(static_cast<std::size_t>(n_steps) + 1);
  path.push_back(x0);
  std::int64_t x = x0;
  for (int n = 0; n < n_steps; ++n) {
    x = step_population(g, x, s);
    path.push_back(x);
  }
  return path;
}

std::vector<std::int64_t> simulate_galton_watson_immigration(
    const OffspringLaw& g, const OffspringLaw& h, std::int64_t x0, int n_steps,
    rng::RandomStream& s) {
  if (x0 < 0 || n_steps < 0) {
    throw DomainError("simulate_galton_watson_immigration: x0, n_steps >= 0");
  }
  std::vector<std::int64_t> path;
  path.reserve(static_cast<std::size_t>(n_steps) + 1);
  path.push_back(x0);
  std::int64_t y = x0;
  for (int n = 0; n < n_steps; ++n) {
    y = step_population(g, y, s) + h.sample(s);
    if (y > kPopulationLimit) {
      throw NumericError("galton-watson population overflow");
    }
    path.push_back(y);
  }
  return path;
}

double discrete_cumulant(const OffspringLaw& g, double k, double gamma_k,
                         double t, double lambda) {
  if (!(k > 0.0) || !(gamma_k > 0.0)) {
    throw DomainError("discrete_cumulant: k and gamma_k must be > 0");
  }
  if (!(t >= 0.0) || !(lambda >= 0.0)) {
    throw DomainError("discrete_cumulant: t and lambda must be >= 0");
  }
  const auto n = static_cast<std::int64_t>(std::floor(gamma_k * t));
  if (n == 0) return lambda;
  double w = -std::expm1(-lambda / k);  // 1 - e^{-lambda/k}
  for (std::int64_t i = 0; i < n; ++i) {
    w = g.pgf_gap(w);
    if (!(w >= 0.0 && w <= 1.0)) {
      throw NumericError("discrete_cumulant: iterate left [0,1] (invalid pgf)");
    }
  }
  return -k * std::log1p(-w);
}

std::vector<ScalingRow> scaling_table(const LawFamily& family,
                                      std::span<const double> ks,
                                      std::span<const double> z_grid,
                                      const mech::BranchingMechanism* reference) {
  std::vector<ScalingRow> rows;
  rows.reserve(ks.size() * z_grid.size());
  for (double k : ks) {
    const auto [law, gamma] = family(k);
    for (double z : z_grid) {
      if (z > k) throw DomainError("scaling_table: z must be <= k");
      const double egap = -std::expm1(-z / k);  // 1 - e^{-z/k}
      const double big_g = k * gamma * (egap - law.pgf_gap(egap));
      const double phi_k = k * gamma * (z / k - law.pgf_gap(z / k));
      const double ref = reference != nullptr ? reference->value(z) : kNaN;
      const double err = reference != nullptr ? std::fabs(phi_k - ref) : kNaN;
      rows.push_back(ScalingRow{k, z, big_g, phi_k, ref, err});
    }
  }
  return rows;
}

}  // namespace cbi::discrete
