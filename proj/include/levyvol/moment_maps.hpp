// Centering functions: Psi_k(u, z) = E k(u W_1 + z), the perturbation-aware
// Psi_{G,Delta,alpha,k}, truncated Gaussian moments, and the local inverse
// used by the explicit estimators.
#pragma once

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "levyvol/kernels.hpp"
#include "levyvol/levy_models.hpp"
#include "levyvol/quadrature.hpp"
#include "levyvol/stable.hpp"

namespace levyvol {

struct PsiEvaluation {
  enum class Method { closed_form, quadrature, monte_carlo };
  double value = 0.0;
  Method method = Method::closed_form;
  double error_estimate = 0.0;  // bound or MC standard error
};

namespace detail {

// int over [x0, inf) via x = x0 + tan(theta); tolerates power-law tails.
template <class F>
quad::Result integrate_from(const F& f, double x0, double tol) {
  const auto g = [&](double th) {
    const double c = std::cos(th);
    return f(x0 + std::tan(th)) / (c * c);
  };
  return quad::integrate_finite(g, 0.0, 1.57079632679489661923, tol);
}

// int weight(x) k(u x + z) dx with the kernel's support taken exactly and
// power kernels split at their kink x = -z/u.  The weights used here (the
// density and its check score) are even, so cos kernels reduce to a Fourier
// cosine transform, which stays accurate under the slowly decaying
// oscillatory tails of the beta < 2 scores.
template <class Weight>
PsiEvaluation kernel_integral(const Weight& weight, const Kernel& k, double u,
                              double z) {
  if (k.cos_freq) {
    const double w = *k.cos_freq;
    const auto r = quad::fourier_cos(weight, w * u);
    return {2.0 * std::cos(w * z) * r.value,
            PsiEvaluation::Method::quadrature, 2.0 * r.error};
  }
  const auto f = [&](double x) { return weight(x) * k(u * x + z); };
  if (k.half_support) {
    const double s = *k.half_support;
    const double lo = (-s - z) / u, hi = (s - z) / u;
    const double mid = std::clamp(-z / u, lo, hi);
    const auto r1 = quad::integrate_finite(f, lo, mid, 1e-11);
    const auto r2 = quad::integrate_finite(f, mid, hi, 1e-11);
    return {r1.value + r2.value, PsiEvaluation::Method::quadrature,
            r1.error + r2.error};
  }
  if (k.power_exp) {
    const double mid = -z / u;
    const auto neg = [&](double x) { return f(mid - x); };
    const auto r1 = integrate_from(neg, 0.0, 1e-11);
    const auto r2 = integrate_from(f, mid, 1e-11);
    return {r1.value + r2.value, PsiEvaluation::Method::quadrature,
            r1.error + r2.error};
  }
  const auto r = quad::integrate_real_line(f, 1e-11);
  return {r.value, PsiEvaluation::Method::quadrature, r.error};
}

}  // namespace detail

/// Psi_k(u, z) = int h_beta(x) k(u x + z) dx; closed form for cos kernels
/// (E cos(w(uW+z)) = e^{-(wu)^beta/2} cos(wz)), quadrature otherwise.
inline PsiEvaluation psi_k(const Kernel& k, const StableLaw& law, double u,
                           double z = 0.0) {
  if (!(u > 0.0)) throw std::domain_error("psi_k: u must be > 0");
  if (k.cos_freq) {
    const double w = *k.cos_freq;
    const double v = std::exp(-0.5 * std::pow(w * u, law.beta())) *
                     std::cos(w * z);
    return {v, PsiEvaluation::Method::closed_form, 0.0};
  }
  law.warm_cache();
  const auto weight = [&law](double x) { return stable_density(law, x); };
  return detail::kernel_integral(weight, k, u, z);
}

/// d/du Psi_k(u, z) = -(1/u) int check_h(y) k(u y + z) dy; equals -I(k) at
/// (u, z) = (1, 0).
inline PsiEvaluation psi_k_derivative_u(const Kernel& k, const StableLaw& law,
                                        double u, double z = 0.0) {
  if (!(u > 0.0)) throw std::domain_error("psi_k_derivative_u: u must be > 0");
  if (k.cos_freq) {
    const double w = *k.cos_freq;
    const double b = law.beta();
    const double v = -0.5 * b * std::pow(w, b) * std::pow(u, b - 1.0) *
                     std::exp(-0.5 * std::pow(w * u, b)) * std::cos(w * z);
    return {v, PsiEvaluation::Method::closed_form, 0.0};
  }
  law.warm_cache();
  const auto weight = [&law](double y) { return score_functions(law, y).check; };
  auto r = detail::kernel_integral(weight, k, u, z);
  r.value = -r.value / u;
  r.error_estimate /= u;
  return r;
}

namespace detail {

// Real part of the jump component of log E exp(i xi Z_delta(alpha)):
// delta * int F(dx)(cos(xi x) - 1), with xi = w v delta^{-1/beta}.  The
// imaginary part vanishes for all supported variants once the drift
// correction is removed.
inline double jump_log_cf(const PerturbationLaw& g, double delta, double xi) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PureDrift>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, GaussianCompoundPoisson>) {
          return delta * v.lambda * (std::exp(-0.5 * xi * xi * v.eta) - 1.0);
        } else {
          return -0.5 * delta * std::pow(v.scale * std::abs(xi), v.alpha);
        }
      },
      g);
}

}  // namespace detail

/// Psi_{G,Delta,alpha,k}(u, v, z) = int h_beta(x) dx int G'(dw) k(ux+vw+z),
/// where G' is the law of Z_delta(alpha) = delta^{-1/beta}(Y_delta - b'delta).
/// Cos kernels use the exact characteristic-function form; otherwise the
/// outer integral over Z is Monte Carlo with the inner Psi_k evaluated per
/// draw, and the reported error is the MC standard error.
inline PsiEvaluation psi_G(const Kernel& k, const StableLaw& law,
                           const PerturbationLaw& g, double alpha, double delta,
                           double u, double v, double z = 0.0,
                           std::size_t mc_paths = 100000,
                           bool force_monte_carlo = false) {
  if (!(u > 0.0)) throw std::domain_error("psi_G: u must be > 0");
  if (!(delta > 0.0)) throw std::domain_error("psi_G: delta must be > 0");
  if (v < 0.0) throw std::domain_error("psi_G: v must be >= 0");
  if (v == 0.0) return psi_k(k, law, u, z);
  if (k.cos_freq && !force_monte_carlo) {
    const double w = *k.cos_freq;
    const double xi = w * v * std::pow(delta, -1.0 / law.beta());
    const double a = -0.5 * std::pow(w * u, law.beta()) +
                     detail::jump_log_cf(g, delta, xi);
    return {std::exp(a) * std::cos(w * z), PsiEvaluation::Method::closed_form,
            0.0};
  }
  if (!k.bounded && !k.cos_freq)
    throw std::domain_error("psi_G: kernel must be bounded (truncate first)");
  if (mc_paths < 2) throw std::domain_error("psi_G: mc_paths must be >= 2");
  // deterministic internal stream: identical inputs give identical values
  Rng rng(stream_seed(0x5EEDBA5Eu, mc_paths));
  const double bp = drift_correction(g, alpha);
  const double scale = std::pow(delta, -1.0 / law.beta());
  double sum = 0.0, sumsq = 0.0, inner_err = 0.0;
  for (std::size_t i = 0; i < mc_paths; ++i) {
    const double zd = (sample_perturbation(g, delta, rng) - bp * delta) * scale;
    const auto inner = psi_k(k, law, u, v * zd + z);
    sum += inner.value;
    sumsq += inner.value * inner.value;
    inner_err = std::max(inner_err, inner.error_estimate);
  }
  const double n = static_cast<double>(mc_paths);
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  const double se = std::sqrt(var / n);
  return {mean, PsiEvaluation::Method::monte_carlo, se + inner_err};
}

// ---------------------------------------------------------------------------
// Truncated moments of the Gaussian model (beta = 2)
// ---------------------------------------------------------------------------

/// Upper incomplete gamma Gamma(a, x).
inline double incomplete_gamma_upper(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("incomplete_gamma_upper: a > 0");
  if (x < 0.0) throw std::domain_error("incomplete_gamma_upper: x >= 0");
  return boost::math::tgamma(a, x);
}

/// E(|sigma W_delta|^r 1{|sigma W_delta| <= tau}) for Brownian W;
/// tau = infinity gives the plain absolute moment.
inline double truncated_moment_gaussian(double r, double sigma, double delta,
                                        double tau) {
  if (!(r > 0.0) || !(sigma > 0.0) || !(delta > 0.0) || !(tau > 0.0))
    throw std::domain_error("truncated_moment_gaussian: positive args");
  const double a = 0.5 * (1.0 + r);
  const double g =
      std::isinf(tau)
          ? boost::math::tgamma(a)
          : boost::math::tgamma_lower(a, tau * tau / (2.0 * sigma * sigma * delta));
  return std::pow(2.0, 0.5 * r) / std::sqrt(kPi) * g * std::pow(sigma, r) *
         std::pow(delta, 0.5 * r);
}

/// E(|X_delta|^r 1{|X_delta| <= tau}) for X = sigma W + compound Poisson with
/// N(0, eta) jumps; series over the jump count j, truncated at j_max (pass 0
/// to let the Poisson tail bound < 1e-14 choose it).
inline double truncated_moment_model(double r, double sigma, double lambda,
                                     double eta, double delta, double tau,
                                     std::size_t j_max = 0) {
  if (!(r > 0.0) || !(sigma > 0.0) || !(delta > 0.0) || !(tau > 0.0))
    throw std::domain_error("truncated_moment_model: positive args");
  if (lambda < 0.0 || !(eta > 0.0))
    throw std::domain_error("truncated_moment_model: lambda >= 0, eta > 0");
  const double ld = lambda * delta;
  if (j_max == 0) {
    // smallest J with P(Poisson(ld) > J) < 1e-14
    double w = std::exp(-ld), tail = 1.0 - w;
    j_max = 0;
    while (tail > 1e-14 && j_max < 500) {
      ++j_max;
      w *= ld / static_cast<double>(j_max);
      tail -= w;
    }
  }
  const double a = 0.5 * (1.0 + r);
  double sum = 0.0;
  double pj = std::exp(-ld);  // e^{-ld} (ld)^j / j!
  for (std::size_t j = 0; j <= j_max; ++j) {
    const double varj = sigma * sigma * delta + static_cast<double>(j) * eta;
    const double gl = std::isinf(tau)
                          ? boost::math::tgamma(a)
                          : boost::math::tgamma_lower(a, tau * tau / (2.0 * varj));
    sum += pj * gl * std::pow(varj, 0.5 * r);
    pj *= ld / static_cast<double>(j + 1);
  }
  return std::pow(2.0, 0.5 * r) / std::sqrt(kPi) * sum;
}

// ---------------------------------------------------------------------------
// Local inversion
// ---------------------------------------------------------------------------

/// Solve center(u) = target for the root nearest bracket_center, scanning a
/// geometric grid outward over [center/8, 8*center] and bisecting the first
/// bracket found.  Returns nothing when no sign change exists in the window
/// (callers map that to the fallback value 1).
inline std::optional<double> invert_centering(
    const std::function<double(double)>& center, double target,
    double bracket_center) {
  if (!(bracket_center > 0.0))
    throw std::domain_error("invert_centering: bracket_center > 0");
  const auto g = [&](double u) { return center(u) - target; };
  constexpr int kCells = 48;  // 16 cells per octave, 3 octaves per side
  const double step = std::pow(2.0, 1.0 / 16.0);
  double up_prev = g(bracket_center), dn_prev = up_prev;
  double up_u = bracket_center, dn_u = bracket_center;
  double lo = 0.0, hi = 0.0;
  bool found = false;
  for (int j = 1; j <= kCells && !found; ++j) {
    const double nu_up = bracket_center * std::pow(step, j);
    const double v_up = g(nu_up);
    if (std::isfinite(up_prev) && std::isfinite(v_up) && up_prev * v_up <= 0.0) {
      lo = up_u; hi = nu_up; found = true; break;
    }
    up_prev = v_up; up_u = nu_up;
    const double nu_dn = bracket_center / std::pow(step, j);
    const double v_dn = g(nu_dn);
    if (std::isfinite(dn_prev) && std::isfinite(v_dn) && dn_prev * v_dn <= 0.0) {
      lo = nu_dn; hi = dn_u; found = true; break;
    }
    dn_prev = v_dn; dn_u = nu_dn;
  }
  if (!found) return std::nullopt;
  double glo = g(lo);
  if (glo == 0.0) return lo;
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * lo; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((glo < 0.0) == (gm < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace levyvol
