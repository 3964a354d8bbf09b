#pragma once

#include "cbi/levy_measure.hpp"

namespace cbi::mech {

enum class Criticality { critical, subcritical, supercritical };

/// Branching mechanism phi(z) = b z + c z^2 + int (e^{-zu} - 1 + zu) m(du).
/// Convex with phi(0) = 0; m must satisfy int (u ^ u^2) m(du) < inf.
class BranchingMechanism {
 public:
  BranchingMechanism(double linear, double diffusion, measures::LevyMeasure m);

  double linear() const { return b_; }
  double diffusion() const { return c_; }
  const measures::LevyMeasure& jump_measure() const { return m_; }

  /// phi(z); phi(0) = 0 exactly.
  double value(double z) const;
  /// phi'(z) = b + 2 c z + int u (1 - e^{-zu}) m(du).
  double derivative(double z) const;

  bool has_jumps() const { return !m_.is_null(); }
  /// phi(z) = b z exactly (c = 0, no jumps).
  bool is_linear() const { return c_ == 0.0 && m_.is_null(); }

 private:
  double b_;
  double c_;
  measures::LevyMeasure m_;
};

/// phi(z) = scale z^{1+alpha} + linear z for 0 < alpha <= 1, assembled as a
/// (b, c, m) triple: pure diffusion at alpha = 1, a stable jump density
/// otherwise.
BranchingMechanism stable_mechanism(double scale, double alpha, double linear);

/// Immigration mechanism psi(z) = beta z + int (1 - e^{-zu}) n(du).
/// n must satisfy int (1 ^ u) n(du) < inf.
class ImmigrationMechanism {
 public:
  ImmigrationMechanism(double beta, measures::LevyMeasure n);

  /// psi identically zero (no immigration).
  static ImmigrationMechanism none() {
    return ImmigrationMechanism(0.0, measures::LevyMeasure::null());
  }

  double drift() const { return beta_; }
  const measures::LevyMeasure& jump_measure() const { return n_; }

  /// psi(z); psi(0) = 0 exactly.
  double value(double z) const;
  /// psi'(0) = beta + int u n(du); throws DomainError when the integral
  /// diverges (stable immigration tails).
  double mean_rate() const;

  bool is_null() const { return beta_ == 0.0 && n_.is_null(); }

 private:
  double beta_;
  measures::LevyMeasure n_;
};

/// Grey's condition: phi > 0 beyond some theta with int^inf dz/phi(z) < inf.
/// Decided by the superlinear-growth criterion per measure variant.
bool grey_condition(const BranchingMechanism& phi);

/// Largest root of phi(z) = 0; 0 when b >= 0, else located by bisection.
/// Requires Grey's condition (otherwise the root bound is infinite).
double largest_root(const BranchingMechanism& phi);

/// critical iff b = 0, subcritical iff b > 0, supercritical iff b < 0.
Criticality classify(const BranchingMechanism& phi);

}  // namespace cbi::mech
