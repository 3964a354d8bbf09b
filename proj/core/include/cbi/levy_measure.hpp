#pragma once

#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "cbi/rng.hpp"

namespace cbi::measures {

/// Parametric Levy measure on (0,inf).
///
/// Variants:
///   Null                      zero measure
///   StableBranching(s, a)     density s z^{-1-a}, 1 < a < 2  (int (u ^ u^2) finite)
///   StableImmigration(s, a)   density s z^{-1-a}, 0 < a < 1  (int (1 ^ u) finite)
///   ExponentialJump(a, th)    density a e^{-th z}
///   Atoms{(z_i, w_i)}         finite sum of point masses
class LevyMeasure {
 public:
  struct Null {};
  struct StableBranching {
    double sigma;
    double alpha;
  };
  struct StableImmigration {
    double sigma;
    double alpha;
  };
  struct ExponentialJump {
    double a;
    double theta;
  };
  struct Atoms {
    std::vector<std::pair<double, double>> points;  // (location, weight)
  };

  LevyMeasure() : rep_(Null{}) {}

  static LevyMeasure null() { return LevyMeasure(); }
  static LevyMeasure stable_branching(double sigma, double alpha);
  static LevyMeasure stable_immigration(double sigma, double alpha);
  static LevyMeasure exponential_jump(double a, double theta);
  static LevyMeasure atoms(std::vector<std::pair<double, double>> points);

  bool is_null() const;
  bool is_stable_branching() const {
    return std::holds_alternative<StableBranching>(rep_);
  }
  bool is_stable_immigration() const {
    return std::holds_alternative<StableImmigration>(rep_);
  }

  /// int kernel(u) d mu(u) by adaptive quadrature (split at 1, log
  /// substitution on (0,1)) for density variants, exact sum for Atoms.
  /// `order_at_zero` and `coeff_at_zero` describe kernel(u) ~ coeff u^order
  /// near 0; `order_at_inf` bounds its growth. They drive the singular head
  /// and the symbolic divergence decisions. Divergent integrals return +inf.
  /// Below `safe_below` the kernel is replaced by its leading term; set it
  /// when kernel(u) is computed by subtraction and loses precision for
  /// small u.
  double integrate_kernel(const std::function<double(double)>& kernel,
                          double order_at_zero, double coeff_at_zero,
                          double order_at_inf, double rel_tol = 1e-10,
                          double safe_below = 0.0) const;

  /// int (1 - e^{-zu}) d mu. Diverges (returns +inf) for StableBranching.
  double one_minus_exp_integral(double z, double rel_tol = 1e-10) const;
  /// int (e^{-zu} - 1 + zu) d mu. Diverges for StableImmigration.
  double compensated_exp_integral(double z, double rel_tol = 1e-10) const;
  /// int u (1 - e^{-zu}) d mu. Diverges for StableImmigration.
  double derivative_kernel_integral(double z, double rel_tol = 1e-10) const;

  /// mu(eps, inf); finite for every variant when eps > 0. eps = 0 allowed
  /// for finite-mass variants and returns +inf for stable densities.
  double mass_above(double eps) const;
  /// int_{(eps,inf)} u d mu; +inf for StableImmigration.
  double mean_above(double eps) const;
  /// int_{(0,eps]} u d mu; +inf for StableBranching.
  double mean_below(double eps) const;
  /// int_{(0,eps]} u^2 d mu.
  double second_moment_below(double eps) const;

  /// Draw a jump size from the normalized restriction to (eps, inf).
  /// Requires mass_above(eps) > 0 and finite.
  double sample_jump_above(double eps, rng::RandomStream& s) const;

  template <class Visitor>
  decltype(auto) visit(Visitor&& v) const {
    return std::visit(std::forward<Visitor>(v), rep_);
  }

 private:
  std::variant<Null, StableBranching, StableImmigration, ExponentialJump, Atoms>
      rep_;
};

}  // namespace cbi::measures
