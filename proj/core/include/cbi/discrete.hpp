#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "cbi/mechanism.hpp"
#include "cbi/rng.hpp"

namespace cbi::discrete {

/// Offspring distribution given by its probability generating function.
///
/// Variants:
///   Binary(p)          g(z) = (1-p) + p z^2
///   Poisson(mu)        g(z) = e^{mu(z-1)}
///   Geometric(p)       g(z) = p / (1 - (1-p) z), support {0,1,2,...}
///   Stable(alpha)      g(z) = z + (1-z)^alpha / alpha, 1 < alpha < 2
///   FromMechanism      the constructive law reproducing a branching
///                      mechanism phi at scale k (evaluation only)
class OffspringLaw {
 public:
  static OffspringLaw binary(double p);
  static OffspringLaw poisson(double mu);
  static OffspringLaw geometric(double p);
  static OffspringLaw stable(double alpha);
  static OffspringLaw from_mechanism(const mech::BranchingMechanism& phi,
                                     double k);

  /// g(z) for 0 <= z <= 1.
  double pgf(double z) const;

  /// 1 - g(1-w), evaluated without cancellation near the fixed point w = 0.
  double pgf_gap(double w) const;

  /// g'(1-).
  double mean() const;

  /// Draw one offspring count. Unsupported for FromMechanism (no tractable
  /// sampler; scaling checks use the deterministic recursion instead).
  std::int64_t sample(rng::RandomStream& s) const;

  bool is_from_mechanism() const;

  /// The construction timescale gamma_k of the FromMechanism law.
  double natural_timescale() const;

 private:
  struct Binary {
    double p;
  };
  struct Poisson {
    double mu;
  };
  struct Geometric {
    double p;
  };
  struct Stable {
    double alpha;
  };
  struct FromMechanism {
    mech::BranchingMechanism phi;
    double k;
    double gamma0;  // (1+2c) k + int u (1 - e^{-ku}) m(du)
    double gamma1;  // |b|
  };

  using Rep = std::variant<Binary, Poisson, Geometric, Stable, FromMechanism>;
  explicit OffspringLaw(Rep rep) : rep_(std::move(rep)) {}
  Rep rep_;
};

/// Exact chain x(n) = sum of x(n-1) iid offspring draws; returns the path
/// x(0..n_steps). Throws NumericError if the population would overflow.
std::vector<std::int64_t> simulate_galton_watson(const OffspringLaw& g,
                                                 std::int64_t x0, int n_steps,
                                                 rng::RandomStream& s);

/// Chain with immigration: y(n) = sum of y(n-1) offspring draws + one draw
/// from h.
std::vector<std::int64_t> simulate_galton_watson_immigration(
    const OffspringLaw& g, const OffspringLaw& h, std::int64_t x0, int n_steps,
    rng::RandomStream& s);

/// v_k(t, lambda) = -k log g^{[gamma_k t]}(e^{-lambda/k}): the cumulant of
/// the rescaled chain, iterated exactly in the w = 1-z parametrization.
double discrete_cumulant(const OffspringLaw& g, double k, double gamma_k,
                         double t, double lambda);

struct ScalingRow {
  double k;
  double z;
  double big_g;    // G_k(z) = k gamma_k [g(e^{-z/k}) - e^{-z/k}]
  double phi_k;    // phi_k(z) = k gamma_k [g(1-z/k) - (1-z/k)]
  double phi_ref;  // reference mechanism value, NaN when absent
  double abs_err;  // |phi_k - phi_ref|
};

/// One offspring law and timescale per scale k.
using LawFamily = std::function<std::pair<OffspringLaw, double>(double k)>;

/// Convergence diagnostics of the function sequences G_k and phi_k on a
/// z grid, optionally against a reference mechanism.
std::vector<ScalingRow> scaling_table(const LawFamily& family,
                                      std::span<const double> ks,
                                      std::span<const double> z_grid,
                                      const mech::BranchingMechanism* reference);

}  // namespace cbi::discrete
