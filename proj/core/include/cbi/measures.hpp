#pragma once

#include <functional>
#include <span>

#include "cbi/levy_measure.hpp"
#include "cbi/stats.hpp"

namespace cbi::measures {

/// Infinitely divisible exponent data: psi(z) = h z + int (1-e^{-zu}) l(du).
struct InfDivPair {
  double drift = 0.0;  // h >= 0
  LevyMeasure jumps;   // l, with (1 ^ u) l(du) finite
};

/// psi(lambda) for the pair; psi(0) = 0 exactly.
double inf_div_exponent(const InfDivPair& p, double lambda);

struct MonotonicityReport {
  bool completely_monotone = true;
  // First violation, meaningful when !completely_monotone:
  double lambda = 0.0;
  double c = 0.0;
  int order = 0;
  double value = 0.0;
};

/// Checks (-1)^i Delta_c^i f(lambda) >= -tol for all grid combinations and
/// i <= max_order, with tol = 1e-9 max(1, |f(0)|). Reports the first
/// violating (lambda, c, i).
MonotonicityReport complete_monotone_check(
    const std::function<double(double)>& f, std::span<const double> lambda_grid,
    std::span<const double> c_grid, int max_order);

enum class TailKind { one_wedge_u, u_wedge_u2, log_tail, u_log_tail };

/// int (1 ^ u) dmu, int (u ^ u^2) dmu, int_1^inf log u dmu or
/// int_1^inf u log u dmu; +inf when divergent (decided per variant).
double tail_integral(const LevyMeasure& mu, TailKind kind);

/// Mean and standard error of e^{-lambda X_i} over the samples.
MCEstimate empirical_laplace(std::span<const double> samples, double lambda);

}  // namespace cbi::measures
