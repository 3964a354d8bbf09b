#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "cbi/mechanism.hpp"
#include "cbi/rng.hpp"

namespace cbi::paths {

/// Cadlag path on a time grid. values[i] is the post-jump state at
/// times[i]; cum_integral[i] accumulates int_0^{times[i]} y(s) ds by the
/// trapezoid rule with jump corrections inside steps.
struct SamplePath {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> cum_integral;
  std::vector<std::pair<double, double>> jumps;  // (time, size)
  std::optional<double> extinct_at;

  double final_time() const { return times.back(); }
  /// Linear interpolation between grid nodes; clamped at the ends.
  double value_at(double t) const;
  /// Integral of the piecewise-linear interpolant, consistent with
  /// cum_integral at the nodes.
  double integral_at(double t) const;
};

/// CSV dump: header `t,value,cum_integral,extinct`, one row per grid point.
void write_csv(const SamplePath& p, std::ostream& os);

/// Immigration rate multiplier entering the drift (beta rho) and the
/// immigration jump intensity (rho times the jump mass). State-dependent
/// rates are evaluated at the left endpoint y(s-).
class RateSpec {
 public:
  static RateSpec unit();
  static RateSpec time_fn(std::function<double(double)> rho);
  static RateSpec state_fn(std::function<double(double)> q,
                           double lipschitz_bound);
  static RateSpec two_state_fns(std::function<double(double)> drift_q,
                                std::function<double(double)> jump_q,
                                double lipschitz_bound);

  double drift_rate(double t, double y_left) const;
  double jump_rate(double t, double y_left) const;
  double lipschitz_bound() const { return lipschitz_; }

 private:
  RateSpec() = default;
  std::function<double(double)> drift_fn_;
  std::function<double(double)> jump_fn_;
  bool state_based_ = false;
  double lipschitz_ = 0.0;
};

struct EulerOptions {
  double dt = 1e-3;
  double eps_jump = 1e-3;
  // Replace compensated jumps below eps_jump by a variance-matched
  // Gaussian term (their compensator has zero mean).
  bool small_jump_gaussian = true;
};

/// Euler scheme for the jump SDE driven by (phi, psi, rate) from x0 on
/// [0,T]: sqrt(2 c y) dB, thinned branching jumps above eps_jump with their
/// compensator in the drift, compensated small jumps as a matched-variance
/// Gaussian, drift (beta rho - b y) dt, immigration jumps as compound
/// Poisson (eps-truncated when the jump mass is infinite, with the dropped
/// mean restored in the drift). Values clamp at 0; with no immigration the
/// path is absorbed there.
SamplePath simulate_cbi(const mech::BranchingMechanism& phi,
                        const mech::ImmigrationMechanism& psi,
                        const RateSpec& rate, double x0, double T,
                        const EulerOptions& opts, rng::RandomStream& s);

/// Euler scheme with exact stable increments for
/// phi(z) = b z + c z^2 + sigma-stable jumps of index alpha in (1,2):
/// dy = sqrt(2 c y) dB + (sigma y)^(1/alpha) dz0 - b y dt + dz1.
SamplePath simulate_stable_cbi(double c, double sigma, double alpha, double b,
                               const mech::ImmigrationMechanism& psi, double x0,
                               double T, double dt, rng::RandomStream& s);

/// Exact transition sampling of the Feller diffusion / CIR process on the
/// given grid: the branching part is a Poisson-mixed sum of exponentials,
/// immigration adds an independent Gamma(beta/c) factor. No discretization
/// bias at the grid points.
SamplePath simulate_feller_exact(double c, double b, double beta, double x0,
                                 std::span<const double> t_grid,
                                 rng::RandomStream& s);

/// Spectrally positive Levy path with Laplace exponent phi
/// (E e^{-lambda Y_t} = e^{-lambda x + t phi(lambda)}), Euler scheme with
/// compensated jumps, stopped at the first nonpositive value.
SamplePath simulate_levy(const mech::BranchingMechanism& phi, double x0,
                         double T, const EulerOptions& opts,
                         rng::RandomStream& s);

/// Lamperti time change z(t) = y(kappa(t)) with kappa inverting the
/// accumulated integral of y; output on a uniform grid of the new clock,
/// ending where the integral saturates (absorption). dt_new = 0 keeps the
/// input node count.
SamplePath lamperti_forward(const SamplePath& p, double dt_new = 0.0);

/// Inverse change X(t) = Z(theta(t)) with theta inverting the accumulated
/// integral of 1/Z. Values below 1e-12 before absorption raise
/// NumericError.
SamplePath lamperti_inverse(const SamplePath& p, double dt_new = 0.0);

/// Start K ~ Poisson(x vbar_{t0}) excursions alive at age t0 (values are
/// exponential under the explicit Feller excursion entrance law) and let
/// each continue as an independent Feller process; the sum over the grid
/// is a realization of the Feller process started at x, observed from t0.
/// t_grid must start at or after t0.
SamplePath excursion_reconstruct_feller(double c, double b, double x,
                                        double t0,
                                        std::span<const double> t_grid,
                                        rng::RandomStream& s);

/// Immigration path built from two Poisson streams: the beta excursion
/// stream realized at resolution t0 (cohorts materialize at age t0 with
/// exponential values; the sub-resolution remainder is snapshot-sampled
/// from its exact Gamma law at each grid point) and a compound Poisson
/// stream of Feller processes started from n-distributed values.
SamplePath immigration_reconstruct_feller(double c, double b,
                                          const mech::ImmigrationMechanism& psi,
                                          double t0,
                                          std::span<const double> t_grid,
                                          double eps_jump,
                                          rng::RandomStream& s);

}  // namespace cbi::paths
