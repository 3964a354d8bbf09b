#include "cbi/mechanism.hpp"

#include <cmath>
#include <limits>

#include "cbi/errors.hpp"

namespace cbi::mech {

BranchingMechanism::BranchingMechanism(double linear, double diffusion,
                                       measures::LevyMeasure m)
    : b_(linear), c_(diffusion), m_(std::move(m)) {
  if (!(c_ >= 0.0)) throw DomainError("BranchingMechanism: c must be >= 0");
  if (!std::isfinite(b_)) throw DomainError("BranchingMechanism: b must be finite");
  if (m_.is_stable_immigration()) {
    throw DomainError(
        "BranchingMechanism: measure violates int (u ^ u^2) m(du) < inf");
  }
}

double BranchingMechanism::value(double z) const {
  if (!(z >= 0.0)) throw DomainError("BranchingMechanism: z must be >= 0");
  if (z == 0.0) return 0.0;
  double v = b_ * z + c_ * z * z;
  if (!m_.is_null()) v += m_.compensated_exp_integral(z);
  return v;
}

double BranchingMechanism::derivative(double z) const {
  if (!(z >= 0.0)) throw DomainError("BranchingMechanism: z must be >= 0");
  double v = b_ + 2.0 * c_ * z;
  if (z > 0.0 && !m_.is_null()) v += m_.derivative_kernel_integral(z);
  return v;
}

BranchingMechanism stable_mechanism(double scale, double alpha, double linear) {
  if (!(scale > 0.0)) throw DomainError("stable_mechanism: scale must be > 0");
  if (!(alpha > 0.0) || !(alpha <= 1.0)) {
    throw DomainError("stable_mechanism: alpha must lie in (0,1]");
  }
  if (alpha == 1.0) {
    return BranchingMechanism(linear, scale, measures::LevyMeasure::null());
  }
  // scale z^{1+alpha} = int (e^{-zu}-1+zu) sigma u^{-2-alpha} du with
  // sigma = scale (1+alpha) alpha / Gamma(1-alpha).
  const double sigma = scale * (1.0 + alpha) * alpha / std::tgamma(1.0 - alpha);
  return BranchingMechanism(
      linear, 0.0, measures::LevyMeasure::stable_branching(sigma, 1.0 + alpha));
}

ImmigrationMechanism::ImmigrationMechanism(double beta, measures::LevyMeasure n)
    : beta_(beta), n_(std::move(n)) {
  if (!(beta_ >= 0.0)) throw DomainError("ImmigrationMechanism: beta must be >= 0");
  if (n_.is_stable_branching()) {
    throw DomainError(
        "ImmigrationMechanism: measure violates int (1 ^ u) n(du) < inf");
  }
}

double ImmigrationMechanism::value(double z) const {
  if (!(z >= 0.0)) throw DomainError("ImmigrationMechanism: z must be >= 0");
  if (z == 0.0) return 0.0;
  double v = beta_ * z;
  if (!n_.is_null()) v += n_.one_minus_exp_integral(z);
  return v;
}

double ImmigrationMechanism::mean_rate() const {
  const double first_moment = n_.is_null() ? 0.0 : n_.mean_above(0.0);
  if (!std::isfinite(first_moment)) {
    throw DomainError("ImmigrationMechanism: int u n(du) diverges");
  }
  return beta_ + first_moment;
}

bool grey_condition(const BranchingMechanism& phi) {
  if (phi.diffusion() == 0.0 && phi.jump_measure().is_null() &&
      phi.linear() == 0.0) {
    throw DomainError("grey_condition: phi is identically zero");
  }
  // phi(z)/z stays bounded unless a z^2 term or a stable z^alpha (alpha > 1)
  // term is present; int^inf dz/phi converges exactly in those cases.
  return phi.diffusion() > 0.0 || phi.jump_measure().is_stable_branching();
}

double largest_root(const BranchingMechanism& phi) {
  if (!grey_condition(phi)) {
    throw DomainError("largest_root: Grey's condition fails (root bound infinite)");
  }
  if (phi.linear() >= 0.0) return 0.0;

  // b < 0: unique positive root; bracket by doubling, then bisect.
  double hi = 1.0;
  while (phi.value(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("largest_root: bracket expansion failed");
  }
  double lo = hi * 0.5;
  while (phi.value(lo) > 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) return 0.0;
  }
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (phi.value(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Criticality classify(const BranchingMechanism& phi) {
  if (phi.linear() == 0.0) return Criticality::critical;
  return phi.linear() > 0.0 ? Criticality::subcritical
                            : Criticality::supercritical;
}

}  // namespace cbi::mech
