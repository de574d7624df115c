// Thin wrappers over boost.math quadrature used throughout the library.
#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <utility>

namespace levyvol::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
};

template <class F>
Result integrate_finite(const F& f, double a, double b, double tol = 1e-12) {
  thread_local boost::math::quadrature::tanh_sinh<double> integ(15);
  double err = 0.0, l1 = 0.0;
  const double v = integ.integrate(f, a, b, tol, &err, &l1);
  return {v, err * l1};
}

/// Integral over [a, infinity).
template <class F>
Result integrate_half_line(const F& f, double a, double tol = 1e-12) {
  thread_local boost::math::quadrature::exp_sinh<double> integ(12);
  double err = 0.0, l1 = 0.0;
  const auto g = [&f, a](double t) { return f(a + t); };
  const double v = integ.integrate(g, tol, &err, &l1);
  return {v, err * l1};
}

/// Integral over the whole line via the tangent substitution
/// x = tan(theta); robust for integrands with power-law tails.
template <class F>
Result integrate_real_line(const F& f, double tol = 1e-12) {
  const auto g = [&f](double th) {
    const double c = std::cos(th);
    const double x = std::tan(th);
    return f(x) / (c * c);
  };
  constexpr double half_pi = 1.57079632679489661923;
  return integrate_finite(g, -half_pi, half_pi, tol);
}

/// int_0^inf f(t) cos(omega t) dt, omega > 0.
template <class F>
Result fourier_cos(const F& f, double omega, double rel_tol = 1e-10) {
  thread_local boost::math::quadrature::ooura_fourier_cos<double> integ(1e-10,
                                                                        10);
  auto [v, rel_err] = integ.integrate(f, omega);
  (void)rel_tol;
  return {v, std::abs(v) * rel_err};
}

/// int_0^inf f(t) sin(omega t) dt, omega > 0.
template <class F>
Result fourier_sin(const F& f, double omega, double rel_tol = 1e-10) {
  thread_local boost::math::quadrature::ooura_fourier_sin<double> integ(1e-10,
                                                                        10);
  auto [v, rel_err] = integ.integrate(f, omega);
  (void)rel_tol;
  return {v, std::abs(v) * rel_err};
}

}  // namespace levyvol::quad
