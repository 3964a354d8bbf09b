#pragma once

#include <functional>

namespace cbi::quad {

/// Adaptive Gauss-Kronrod on [a,b]; b may be +infinity.
/// Throws NumericError (with the residual estimate in the message) when the
/// error estimate exceeds the tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10);

/// tanh-sinh rule on (a,b); tolerates integrable endpoint singularities.
double integrate_singular(const std::function<double(double)>& f, double a,
                          double b, double rel_tol = 1e-10);

}  // namespace cbi::quad
