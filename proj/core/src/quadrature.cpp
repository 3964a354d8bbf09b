#include "cbi/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <sstream>

#include "cbi/errors.hpp"

namespace cbi::quad {

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, rel_tol, &error);
  if (!(error <= 20.0 * rel_tol * std::fabs(value) + 1e-14)) {
    std::ostringstream msg;
    msg << "quadrature did not converge: value " << value << ", residual "
        << error;
    throw NumericError(msg.str());
  }
  return value;
}

double integrate_singular(const std::function<double(double)>& f, double a,
                          double b, double rel_tol) {
  boost::math::quadrature::tanh_sinh<double> rule;
  double error = 0.0;
  double l1 = 0.0;
  const double value = rule.integrate(f, a, b, rel_tol, &error, &l1);
  if (!(error <= 100.0 * rel_tol + 1e-12)) {
    std::ostringstream msg;
    msg << "singular quadrature did not converge: value " << value
        << ", relative residual " << error;
    throw NumericError(msg.str());
  }
  return value;
}

}  // namespace cbi::quad
