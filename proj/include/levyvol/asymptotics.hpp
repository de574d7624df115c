// Closed-form asymptotic variance and bias catalog: the kernel functionals
// I(k), J(k), Sigma^2(k) = J/I^2, the truncated-power variance, the
// semiparametric rate exponents, the Gaussian-compound-Poisson regime table
// (b0, b1, v0, v1) and the two-stable bias constant.
#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "levyvol/kernels.hpp"
#include "levyvol/moment_maps.hpp"
#include "levyvol/stable.hpp"

namespace levyvol {

namespace detail {

inline void check_growth_for(const Kernel& k, const StableLaw& law,
                             double power_factor, const char* who) {
  if (!law.is_gaussian() && !k.bounded &&
      !(power_factor * k.growth < law.beta()))
    throw std::domain_error(std::string(who) +
                            ": kernel growth too large for this beta");
}

}  // namespace detail

/// I(k) = int check_h(x) k(x) dx.
inline double kernel_I(const Kernel& k, const StableLaw& law) {
  detail::check_growth_for(k, law, 1.0, "kernel_I");
  law.warm_cache();
  const auto weight = [&law](double x) { return score_functions(law, x).check; };
  return detail::kernel_integral(weight, k, 1.0, 0.0).value;
}

/// J(k) = Var k(W_1).
inline double kernel_J(const Kernel& k, const StableLaw& law) {
  detail::check_growth_for(k, law, 2.0, "kernel_J");
  law.warm_cache();
  if (k.cos_freq) {
    const double w = *k.cos_freq, b = law.beta();
    const double p1 = std::exp(-0.5 * std::pow(w, b));
    const double p2 = std::exp(-0.5 * std::pow(2.0 * w, b));
    return 0.5 * (1.0 + p2) - p1 * p1;
  }
  Kernel ksq;
  ksq.fn = [base = k.fn](double x) {
    const double v = base(x);
    return v * v;
  };
  ksq.bounded = k.bounded;
  ksq.half_support = k.half_support;
  if (k.power_exp) ksq.power_exp = 2.0 * *k.power_exp;
  ksq.growth = 2.0 * k.growth;
  const auto weight = [&law](double x) { return stable_density(law, x); };
  const double m2 = detail::kernel_integral(weight, ksq, 1.0, 0.0).value;
  const double m1 = detail::kernel_integral(weight, k, 1.0, 0.0).value;
  return m2 - m1 * m1;
}

/// Sigma^2(k) = J(k) / I(k)^2; empty when I(k) vanishes (the kernel does
/// not identify sigma).
inline std::optional<double> sigma2(const Kernel& k, const StableLaw& law) {
  const double i = kernel_I(k, law);
  if (std::abs(i) < 1e-12) return std::nullopt;
  return kernel_J(k, law) / (i * i);
}

/// Closed form of Sigma^2 for k(x) = cos(w x):
///   2 (1 + e^{-(2w)^beta/2} - 2 e^{-w^beta}) / (beta^2 w^{2 beta} e^{-w^beta}).
inline double sigma2_cos_closed(const StableLaw& law, double w) {
  if (!(w > 0.0)) throw std::domain_error("sigma2_cos_closed: w > 0");
  const double b = law.beta();
  const double a1 = std::pow(w, b);                 // -log E cos(w W)
  const double a2 = 0.5 * std::pow(2.0 * w, b);     // -log E cos(2 w W) part
  // 1 + e^{-a2} - 2 e^{-a1}, written through expm1 to survive small w
  const double num =
      2.0 * (-std::expm1(-a1) + std::exp(-a1) * std::expm1(a1 - a2));
  return num / (b * b * std::pow(w, 2.0 * b) * std::exp(-a1));
}

/// Truncated absolute moment M_{gamma,s} = E(|W_1|^s 1{|W_1| <= gamma}).
inline double stable_truncated_abs_moment(const StableLaw& law, double s,
                                          double gamma) {
  law.warm_cache();
  const auto f = [&](double x) {
    return 2.0 * std::pow(x, s) * stable_density(law, x);
  };
  return quad::integrate_finite(f, 0.0, gamma, 1e-11).value;
}

/// Sigma^2 of the truncated power kernel k_gamma(x) = |x|^r 1{|x| <= gamma}:
///   (M_{g,2r} - M_{g,r}^2) / (r M_{g,r} - 2 h_beta(g) g^{r+1})^2.
inline std::optional<double> sigma2_truncated_power(double r, double gamma_cut,
                                                    const StableLaw& law) {
  if (!(r > 0.0) || !(gamma_cut > 0.0))
    throw std::domain_error("sigma2_truncated_power: r, gamma_cut > 0");
  const double mr = stable_truncated_abs_moment(law, r, gamma_cut);
  const double m2r = stable_truncated_abs_moment(law, 2.0 * r, gamma_cut);
  const double denom = r * mr - 2.0 * stable_density(law, gamma_cut) *
                                   std::pow(gamma_cut, r + 1.0);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return (m2r - mr * mr) / (denom * denom);
}

/// Semiparametric rate exponents (rho, rho') for class index alpha < beta.
inline std::pair<double, double> rate_exponents(double alpha, double beta) {
  if (!(alpha >= 0.0) || !(alpha < beta) || !(beta <= 2.0))
    throw std::domain_error("rate_exponents: need 0 <= alpha < beta <= 2");
  return {2.0 * (beta - alpha) / (beta * (2.0 + alpha)),
          (beta - alpha) / beta};
}

// ---------------------------------------------------------------------------
// Gaussian compound Poisson regime table
// ---------------------------------------------------------------------------

/// Bias and variance profile of the approximate-centering truncated power
/// estimator:  sqrt(n delta^{v1}) (sigma_hat - sigma_bar) -> N(0, v0) with
/// sigma_bar = sigma + b0 delta^{b1} + o(delta^{b1}).
struct AsymptoticProfile {
  double b0 = 0.0;
  double b1 = 0.0;
  double v0 = 0.0;
  double v1 = 0.0;
};

/// Regime dispatch on (r, kappa, c) exactly as catalogued; kappa is ignored
/// (and may be empty) when c = infinity.  Returns nothing when sigma is not
/// identified (r = 2 without truncation).
inline std::optional<AsymptoticProfile> section8_profile(
    double r, std::optional<double> kappa, double c, double sigma,
    double lambda, double eta) {
  using boost::math::tgamma;
  using boost::math::tgamma_lower;
  if (!(r > 0.0) || r > 2.0)
    throw std::domain_error("section8_profile: r must lie in (0, 2]");
  if (!(c > 0.0)) throw std::domain_error("section8_profile: c > 0");
  if (!(sigma > 0.0) || lambda < 0.0 || !(eta > 0.0))
    throw std::domain_error("section8_profile: bad model parameters");
  const double g1r = tgamma(0.5 * (1.0 + r));   // Gamma((1+r)/2)
  const double ghr = tgamma(0.5 + r);           // Gamma(1/2 + r)
  AsymptoticProfile p;

  if (std::isinf(c)) {  // no truncation
    if (r == 2.0) return std::nullopt;  // E X^2 confounds sigma^2 + lambda eta
    if (r < 1.0) {
      p.v1 = 0.0;
      p.v0 = (std::sqrt(kPi) * ghr / (g1r * g1r) - 1.0) / (r * r);
    } else if (r == 1.0) {
      p.v1 = 0.0;
      p.v0 = 0.5 * ((kPi - 2.0) * sigma * sigma + kPi * lambda * eta);
    } else {
      p.v1 = r - 1.0;
      p.v0 = std::sqrt(kPi) * std::pow(sigma, 2.0 - 2.0 * r) * lambda *
             std::pow(eta, r) * ghr / (r * r * g1r * g1r);
    }
    p.b1 = 1.0 - 0.5 * r;
    p.b0 = std::pow(sigma, 1.0 - r) * lambda * std::pow(eta, 0.5 * r) / r;
    return p;
  }

  if (!kappa)
    throw std::domain_error("section8_profile: kappa required when c < inf");
  const double kap = *kappa;
  if (kap <= -0.5)
    throw std::domain_error("section8_profile: kappa must exceed -1/2");
  const double x = c * c / (2.0 * sigma * sigma);

  if (kap == 0.0) {  // truncation at rate delta^{1/2}
    const double lg1 = tgamma_lower(0.5 * (1.0 + r), x);
    const double lgh = tgamma_lower(0.5 + r, x);
    const double lg3 = tgamma_lower(0.5 * (3.0 + r), x);
    p.v1 = 0.0;
    const double den = std::sqrt(2.0) * std::pow(c, 1.0 + r) * std::exp(-x) -
                       std::pow(2.0, 0.5 * r) * r * std::pow(sigma, 1.0 + r) *
                           lg1;
    p.v0 = std::pow(2.0, r) * std::pow(sigma, 4.0 + 2.0 * r) *
           (std::sqrt(kPi) * lgh - lg1 * lg1) / (den * den);
    p.b1 = 1.0;
    p.b0 = sigma * lambda * lg1 / (lg1 - 2.0 * lg3);
    return p;
  }

  if (kap < 0.0) {  // slower than delta^{1/2}: keeps more increments
    const double kv = -3.0 / (2.0 + 4.0 * r);   // variance regime boundary
    const double kb = -1.0 / (2.0 + 2.0 * r);   // bias regime boundary
    const double gauss_v =
        sigma * sigma / (r * r) * (std::sqrt(kPi) * ghr / (g1r * g1r) - 1.0);
    const double jump_v = std::pow(2.0, 0.5 - r) * std::pow(c, 1.0 + 2.0 * r) *
                          std::sqrt(kPi) * lambda *
                          std::pow(sigma, 2.0 - 2.0 * r) /
                          (r * r * (1.0 + 2.0 * r) * std::sqrt(eta) * g1r * g1r);
    if (kap > kv) {
      p.v1 = 0.0;
      p.v0 = gauss_v;
    } else if (kap == kv) {
      p.v1 = 0.0;
      p.v0 = jump_v + gauss_v;
    } else {
      p.v1 = -kap - 2.0 * r * kap - 1.5;
      p.v0 = jump_v;
    }
    if (kap > kb) {
      p.b1 = 1.0;
      p.b0 = -lambda * sigma / r;
    } else if (kap == kb) {
      p.b1 = 1.0;
      p.b0 = lambda * sigma / (1.0 + r) *
             (std::pow(2.0, 0.5 - 0.5 * r) * std::pow(c, 1.0 + r) /
                  (r * std::sqrt(eta) * std::pow(sigma, r) * g1r) -
              1.0 - 1.0 / r);
    } else {
      p.b1 = 1.5 + kap + r * kap;
      p.b0 = std::pow(2.0, 0.5 - 0.5 * r) * std::pow(c, 1.0 + r) * lambda *
             std::pow(sigma, 1.0 - r) /
             (r * (1.0 + r) * std::sqrt(eta) * g1r);
    }
    return p;
  }

  // kappa > 0: faster than delta^{1/2}, keeps too few increments
  p.v1 = kap;
  p.v0 = std::sqrt(2.0 * kPi) * (1.0 + r) * (1.0 + r) *
         std::pow(sigma, 3.0) / (2.0 * c * (1.0 + 2.0 * r));
  p.b1 = 1.0;
  p.b0 = sigma * lambda;
  return p;
}

/// Bias constant of the characteristic-function estimator when Y is a
/// symmetric stable of index alpha < beta and n delta^{(beta-alpha)/beta}
/// diverges: delta^{-(beta-alpha)/beta} (sigma_hat - sigma) -> -w^alpha /
/// (2 beta sigma^alpha).
inline double section9_bias_constant(double alpha, double beta, double w,
                                     double sigma) {
  if (!(alpha > 0.0) || !(alpha < beta))
    throw std::domain_error("section9_bias_constant: need 0 < alpha < beta");
  if (!(w > 0.0) || !(sigma > 0.0))
    throw std::domain_error("section9_bias_constant: w, sigma > 0");
  return -std::pow(w, alpha) / (2.0 * beta * std::pow(sigma, alpha));
}

}  // namespace levyvol
