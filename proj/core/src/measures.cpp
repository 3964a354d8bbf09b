#include "cbi/measures.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "cbi/errors.hpp"

namespace cbi::measures {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double inf_div_exponent(const InfDivPair& p, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("inf_div_exponent: lambda must be >= 0");
  if (!(p.drift >= 0.0)) throw DomainError("inf_div_exponent: drift must be >= 0");
  if (lambda == 0.0) return 0.0;
  return p.drift * lambda + p.jumps.one_minus_exp_integral(lambda);
}

MonotonicityReport complete_monotone_check(
    const std::function<double(double)>& f, std::span<const double> lambda_grid,
    std::span<const double> c_grid, int max_order) {
  if (lambda_grid.empty() || c_grid.empty()) {
    throw DomainError("complete_monotone_check: grids must be nonempty");
  }
  if (max_order > 12 || max_order < 0) {
    throw DomainError("complete_monotone_check: max_order must lie in [0,12]");
  }

  const double f0 = f(0.0);
  if (!std::isfinite(f0)) {
    throw DomainError("complete_monotone_check: f(0) is not finite");
  }
  const double tol = 1e-9 * std::max(1.0, std::fabs(f0));

  std::vector<double> diffs(static_cast<std::size_t>(max_order) + 1);
  for (double c : c_grid) {
    for (double lambda : lambda_grid) {
      // diffs[i] holds f(lambda + i c); reduce in place to iterated
      // differences Delta_c^i f(lambda).
      for (int i = 0; i <= max_order; ++i) {
        const double v = f(lambda + i * c);
        if (!std::isfinite(v)) {
          throw DomainError("complete_monotone_check: f returned non-finite value");
        }
        diffs[static_cast<std::size_t>(i)] = v;
      }
      double sign = 1.0;
      for (int order = 1; order <= max_order; ++order) {
        for (int j = 0; j <= max_order - order; ++j) {
          diffs[static_cast<std::size_t>(j)] =
              diffs[static_cast<std::size_t>(j) + 1] -
              diffs[static_cast<std::size_t>(j)];
        }
        sign = -sign;
        const double signed_diff = sign * diffs[0];
        if (signed_diff < -tol) {
          return MonotonicityReport{false, lambda, c, order, signed_diff};
        }
      }
    }
  }
  return MonotonicityReport{};
}

double tail_integral(const LevyMeasure& mu, TailKind kind) {
  switch (kind) {
    case TailKind::one_wedge_u: {
      const double below = mu.mean_below(1.0);
      const double above = mu.mass_above(1.0);
      return below + above;
    }
    case TailKind::u_wedge_u2: {
      const double below = mu.second_moment_below(1.0);
      const double above = mu.mean_above(1.0);
      return below + above;
    }
    case TailKind::log_tail: {
      return mu.visit([&](const auto& rep) -> double {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, LevyMeasure::StableBranching> ||
                      std::is_same_v<T, LevyMeasure::StableImmigration>) {
          // int_1^inf log u u^{-1-a} du = 1/a^2
          return rep.sigma / (rep.alpha * rep.alpha);
        } else {
          const auto kernel = [](double u) {
            return u > 1.0 ? std::log(u) : 0.0;
          };
          return mu.integrate_kernel(kernel, 2.0, 0.0, 0.5);
        }
      });
    }
    case TailKind::u_log_tail: {
      return mu.visit([&](const auto& rep) -> double {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, LevyMeasure::StableBranching>) {
          // int_1^inf u^{-a} log u du = 1/(a-1)^2
          const double am1 = rep.alpha - 1.0;
          return rep.sigma / (am1 * am1);
        } else if constexpr (std::is_same_v<T, LevyMeasure::StableImmigration>) {
          return kInf;
        } else {
          const auto kernel = [](double u) {
            return u > 1.0 ? u * std::log(u) : 0.0;
          };
          return mu.integrate_kernel(kernel, 2.0, 0.0, 1.5);
        }
      });
    }
  }
  throw DomainError("tail_integral: unknown kind");
}

MCEstimate empirical_laplace(std::span<const double> samples, double lambda) {
  if (samples.empty()) throw DomainError("empirical_laplace: empty sample list");
  if (!(lambda >= 0.0)) throw DomainError("empirical_laplace: lambda must be >= 0");
  std::vector<double> transformed(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    transformed[i] = std::exp(-lambda * samples[i]);
  }
  return mc_estimate(transformed);
}

}  // namespace cbi::measures
