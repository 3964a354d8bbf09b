#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "cbi/cumulant.hpp"
#include "cbi/errors.hpp"
#include "cbi/mechanism.hpp"

using namespace cbi;
using measures::LevyMeasure;
using mech::BranchingMechanism;
using mech::ImmigrationMechanism;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const BranchingMechanism kFeller(0.0, 1.0, LevyMeasure::null());

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("cumulant ODE basics") {
  // t = 0 keeps the initial condition.
  CHECK(cumulant::cumulant_at(kFeller, 0.7, 0.0) == 0.7);

  // phi = z^2: v_t(lambda) = lambda/(1+t lambda).
  CHECK(cumulant::cumulant_at(kFeller, 1.0, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-8));

  // phi = z^2 + z: v_1(1) = e^{-1}/(1 + (1 - e^{-1})) = 0.225399...
  const BranchingMechanism cir(1.0, 1.0, LevyMeasure::null());
  const double expected = std::exp(-1.0) / (2.0 - std::exp(-1.0));
  CHECK(expected == doctest::Approx(0.225399).epsilon(1e-5));
  CHECK(cumulant::cumulant_at(cir, 1.0, 1.0) ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("closed-form stable cumulant") {
  CHECK(cumulant::stable_cumulant(1.0, 0.5, 0.3, 0.0, 2.0) == 2.0);
  CHECK(cumulant::stable_cumulant(1.0, 1.0, 0.0, 1.0, 1.0) ==
        doctest::Approx(0.5));
  // q^0_alpha(2) = 1 at alpha = 1/2: v = 1/(1+1)^2.
  CHECK(cumulant::stable_cumulant(1.0, 0.5, 0.0, 2.0, 1.0) ==
        doctest::Approx(0.25));
  // b -> 0 continuity of the q factor.
  CHECK(cumulant::stable_qfactor(1e-14, 0.5, 3.0) ==
        doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("ODE solve matches the stable closed form on the full grid") {
  for (double c : {0.5, 1.0}) {
    for (double alpha : {0.5, 1.0}) {
      for (double b : {-1.0, 0.0, 1.0}) {
        const auto phi = mech::stable_mechanism(c, alpha, b);
        for (double t : {0.1, 1.0, 5.0}) {
          for (double lambda : {0.1, 1.0, 10.0}) {
            const double got = cumulant::cumulant_at(phi, lambda, t, 1e-10);
            const double want = cumulant::stable_cumulant(c, alpha, b, t, lambda);
            CHECK(std::fabs(got - want) <= 1e-6 * std::max(want, 1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("semigroup composition property") {
  const auto stable15 = mech::stable_mechanism(1.0, 0.5, 0.0);
  const BranchingMechanism quad_drift(1.0, 1.0, LevyMeasure::null());
  for (const auto& phi : {kFeller, stable15, quad_drift}) {
    for (double r : {0.1, 0.5, 1.0}) {
      for (double t : {0.1, 0.5, 1.0}) {
        for (double lambda : {0.3, 1.0, 3.0}) {
          const double direct = cumulant::cumulant_at(phi, lambda, r + t, 1e-9);
          const double inner = cumulant::cumulant_at(phi, lambda, t, 1e-9);
          const double composed = cumulant::cumulant_at(phi, inner, r, 1e-9);
          CHECK(std::fabs(direct - composed) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("integral-equation residual vanishes") {
  const auto phi = mech::stable_mechanism(0.8, 0.5, 0.5);
  const double lambda = 2.0;
  const double t = 1.5;
  const auto traj = cumulant::solve_cumulant(phi, lambda, t);
  const double integral = simpson(
      [&](double s) { return phi.value(traj.value_at(s)); }, 0.0, t, 2000);
  CHECK(std::fabs(traj.v.back() + integral - lambda) < 1e-6);
}

TEST_CASE("forward equation holds in finite differences") {
  const BranchingMechanism phi(0.5, 1.0, LevyMeasure::null());
  const double lambda = 1.0;
  const double t = 0.8;
  const double h = 1e-4;
  const double dv_dt = (cumulant::cumulant_at(phi, lambda, t + h, 1e-11) -
                        cumulant::cumulant_at(phi, lambda, t - h, 1e-11)) /
                       (2.0 * h);
  const double dv_dl = (cumulant::cumulant_at(phi, lambda + h, t, 1e-11) -
                        cumulant::cumulant_at(phi, lambda - h, t, 1e-11)) /
                       (2.0 * h);
  CHECK(std::fabs(dv_dt + phi.value(lambda) * dv_dl) < 1e-5);
}

TEST_CASE("lambda-derivative equals the exponential of the derivative integral") {
  const auto phi = mech::stable_mechanism(1.0, 0.5, 0.4);
  const double lambda = 1.2;
  const double t = 1.0;
  const auto traj = cumulant::solve_cumulant(phi, lambda, t);
  // phi0'-integral accumulates phi'(v) - b.
  const double predicted =
      std::exp(-(traj.phi0_int.back() + phi.linear() * t));
  const double h = 1e-5;
  const double fd = (cumulant::cumulant_at(phi, lambda + h, t, 1e-11) -
                     cumulant::cumulant_at(phi, lambda - h, t, 1e-11)) /
                    (2.0 * h);
  CHECK(std::fabs(predicted - fd) < 1e-5 * std::fabs(fd));
}

TEST_CASE("time-integral identity") {
  // int_{v_t(lambda)}^lambda dz/phi(z) = t while phi has no root between.
  const BranchingMechanism cir(1.0, 1.0, LevyMeasure::null());
  const double lambda = 2.0;
  const double t = 0.7;
  const double v = cumulant::cumulant_at(cir, lambda, t, 1e-12);
  const double integral =
      simpson([&](double z) { return 1.0 / cir.value(z); }, v, lambda, 4000);
  CHECK(std::fabs(integral - t) < 1e-7);
}

TEST_CASE("monotone in lambda at fixed t") {
  const auto phi = mech::stable_mechanism(1.0, 0.5, -0.5);
  double prev = -1.0;
  for (double lambda : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double v = cumulant::cumulant_at(phi, lambda, 0.9);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("extinction exponent") {
  // phi = z^2: vbar_t = 1/t.
  CHECK(cumulant::extinction_exponent(kFeller, 2.0) ==
        doctest::Approx(0.5).epsilon(1e-7));
  // phi = z^2 + z: vbar_1 = e^{-1}/(1 - e^{-1}).
  const BranchingMechanism cir(1.0, 1.0, LevyMeasure::null());
  CHECK(cumulant::extinction_exponent(cir, 1.0) ==
        doctest::Approx(std::exp(-1.0) / (1.0 - std::exp(-1.0))).epsilon(1e-7));
  // phi = z^{3/2}: int_u^inf z^{-3/2} dz = 2/sqrt(u) = t, so vbar_2 = 1.
  const auto stable = mech::stable_mechanism(1.0, 0.5, 0.0);
  CHECK(cumulant::extinction_exponent(stable, 2.0) ==
        doctest::Approx(1.0).epsilon(1e-7));
  // No Grey: infinite.
  const BranchingMechanism linear(1.0, 0.0, LevyMeasure::null());
  CHECK_THROWS_AS(cumulant::extinction_exponent(linear, 1.0), DomainError);
}

TEST_CASE("extinction probability") {
  CHECK(cumulant::extinction_probability(kFeller, 0.0, 1.0) == 1.0);
  CHECK(cumulant::extinction_probability(kFeller, 1.0, 1.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
  const BranchingMechanism super(-1.0, 1.0, LevyMeasure::null());
  CHECK(cumulant::extinction_probability(super, 1.0, kInf) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
  const BranchingMechanism linear(1.0, 0.0, LevyMeasure::null());
  CHECK(cumulant::extinction_probability(linear, 1.0, 5.0) == 0.0);
}

TEST_CASE("transition Laplace transform") {
  CHECK(cumulant::transition_laplace(kFeller, nullptr, 3.0, 2.0, 0.0) == 1.0);
  CHECK(cumulant::transition_laplace(kFeller, nullptr, 1.0, 1.0, 1.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
  // CIR with unit immigration drift from x = 0 at t = 1, lambda = 1:
  // (1 + q^1_1(1))^{-1} = 1/(2 - e^{-1}).
  const BranchingMechanism cir(1.0, 1.0, LevyMeasure::null());
  const ImmigrationMechanism psi(1.0, LevyMeasure::null());
  const double expected = 1.0 / (2.0 - std::exp(-1.0));
  CHECK(expected == doctest::Approx(0.612700).epsilon(1e-5));
  CHECK(cumulant::transition_laplace(cir, &psi, 0.0, 1.0, 1.0) ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("means") {
  const BranchingMechanism decay(std::log(2.0), 0.0, LevyMeasure::null());
  CHECK(cumulant::mean(decay, nullptr, 2.0, 1.0) == doctest::Approx(1.0));

  const ImmigrationMechanism psi(1.0, LevyMeasure::null());
  CHECK(cumulant::mean(kFeller, &psi, 1.0, 2.0) == doctest::Approx(3.0));

  const BranchingMechanism sub(1.0, 0.0, LevyMeasure::null());
  CHECK(cumulant::mean(sub, &psi, 0.0, kInf) == doctest::Approx(1.0));

  // Time-dependent rate via quadrature: rate(s) = e^{-s}, b = 0 gives
  // x + psi'(0) (1 - e^{-t}).
  const double got = cumulant::mean_with_rate(
      kFeller, psi, [](double s) { return std::exp(-s); }, 1.0, 2.0);
  CHECK(got == doctest::Approx(1.0 - std::expm1(-2.0)).epsilon(1e-9));
}

TEST_CASE("stationary law") {
  const BranchingMechanism cir(1.0, 1.0, LevyMeasure::null());
  const ImmigrationMechanism psi(1.0, LevyMeasure::null());
  CHECK(cumulant::stationary_laplace(cir, psi, 0.0) == 1.0);
  // psi/phi = 1/(1+z): L_eta(lambda) = 1/(1+lambda).
  CHECK(cumulant::stationary_laplace(cir, psi, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-9));
  CHECK(cumulant::stationary_laplace(cir, psi, 3.0) ==
        doctest::Approx(0.25).epsilon(1e-9));

  CHECK(cumulant::stationary_laplace(
            cir, ImmigrationMechanism::none(), 5.0) == 1.0);

  // Critical Feller with drift immigration has no stationary law.
  CHECK_THROWS_AS(cumulant::stationary_laplace(kFeller, psi, 1.0), DomainError);

  // Critical stable branching with drift immigration does:
  // phi = z^{3/2}, psi = z, so the exponent is int_0^l z^{-1/2} = 2 sqrt(l).
  const auto stable = mech::stable_mechanism(1.0, 0.5, 0.0);
  CHECK(cumulant::stationary_laplace(stable, psi, 1.0) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
  CHECK(cumulant::stationary_laplace(stable, psi, 4.0) ==
        doctest::Approx(std::exp(-4.0)).epsilon(1e-6));

  // Supercritical branching is rejected.
  const BranchingMechanism super(-1.0, 1.0, LevyMeasure::null());
  CHECK_THROWS_AS(cumulant::stationary_laplace(super, psi, 1.0), DomainError);
}

TEST_CASE("size-biased Laplace transform") {
  CHECK(cumulant::size_biased_laplace(kFeller, 2.0, 0.0, 1.5) ==
        doctest::Approx(std::exp(-3.0)));
  CHECK(cumulant::size_biased_laplace(kFeller, 1.0, 0.7, 0.0) ==
        doctest::Approx(1.0));
  // Feller from x = 0: exp(-int 2 v_s ds) = (1+t lambda)^{-2}.
  CHECK(cumulant::size_biased_laplace(kFeller, 0.0, 1.0, 1.0) ==
        doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("normalization of the size-biased semigroup at lambda = 0") {
  for (double x : {0.0, 1.0, 2.5}) {
    for (double t : {0.2, 1.0, 3.0}) {
      CHECK(cumulant::size_biased_laplace(kFeller, x, t, 0.0) ==
            doctest::Approx(1.0));
    }
  }
}
