// Estimating-function kernels k, their truncations, and the phi calculus
// used by the truncation schedule.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "levyvol/stable.hpp"

namespace levyvol {

/// Immutable kernel value.  `growth` is the exponent gamma in the envelope
/// sup |k(x)| / (1 + |x|^gamma) < infinity.  `half_support` is set when
/// k vanishes outside [-S, S]; `cos_freq` / `power_exp` expose the structure
/// the moment code exploits for closed forms and exact integration bounds.
struct Kernel {
  std::function<double(double)> fn;
  double growth = 0.0;
  bool bounded = true;
  std::optional<double> sup;
  std::optional<double> half_support;
  std::optional<double> cos_freq;
  std::optional<double> power_exp;
  std::string label;

  double operator()(double x) const { return fn(x); }
};

/// k(x) = cos(w x); bounded with gamma = 0.
inline Kernel make_cos_kernel(double w) {
  if (!(w > 0.0)) throw std::domain_error("make_cos_kernel: w must be > 0");
  Kernel k;
  k.fn = [w](double x) { return std::cos(w * x); };
  k.growth = 0.0;
  k.bounded = true;
  k.sup = 1.0;
  k.cos_freq = w;
  k.label = "cos:w=" + std::to_string(w);
  return k;
}

/// k(x) = |x|^r; unbounded with gamma = r.
inline Kernel make_power_kernel(double r) {
  if (!(r > 0.0)) throw std::domain_error("make_power_kernel: r must be > 0");
  Kernel k;
  k.fn = [r](double x) { return std::pow(std::abs(x), r); };
  k.growth = r;
  k.bounded = false;
  k.power_exp = r;
  k.label = "pow:r=" + std::to_string(r);
  return k;
}

/// k(x) = |x|^r 1{|x| <= cut}; the boundary point is kept.
inline Kernel make_truncated_power_kernel(double r, double cut) {
  if (!(r > 0.0) || !(cut > 0.0))
    throw std::domain_error("make_truncated_power_kernel: r, cut must be > 0");
  Kernel k;
  k.fn = [r, cut](double x) {
    const double a = std::abs(x);
    return a <= cut ? std::pow(a, r) : 0.0;
  };
  k.growth = 0.0;
  k.bounded = true;
  k.sup = std::pow(cut, r);
  k.half_support = cut;
  k.power_exp = r;
  k.label = "tpow:r=" + std::to_string(r) + ",g=" + std::to_string(cut);
  return k;
}

/// The variance-optimal kernel k = bar-h_beta; equals -x^2 when beta = 2
/// (growth 2, unbounded), and is bounded with gamma = 0 when beta < 2.
inline Kernel make_optimal_kernel(const StableLaw& law) {
  Kernel k;
  if (law.is_gaussian()) {
    k.fn = [](double x) { return -x * x; };
    k.growth = 2.0;
    k.bounded = false;
    k.power_exp = 2.0;
  } else {
    k.fn = [law](double x) { return score_functions(law, x).bar; };
    k.growth = 0.0;
    k.bounded = true;
  }
  k.label = "opt";
  return k;
}

/// k_n(x) = k(x) 1{|k(x)| <= nu} for unbounded k; bounded kernels pass
/// through unchanged.
inline Kernel truncate_kernel(const Kernel& k, double nu) {
  if (!(nu > 0.0)) throw std::domain_error("truncate_kernel: nu must be > 0");
  if (k.bounded) return k;
  Kernel t;
  auto base = k.fn;
  t.fn = [base, nu](double x) {
    const double v = base(x);
    return std::abs(v) <= nu ? v : 0.0;
  };
  t.growth = 0.0;
  t.bounded = true;
  t.sup = nu;
  if (k.power_exp) {
    // |x|^r (or -x^2) exceeds nu exactly beyond nu^{1/r}
    t.half_support = std::pow(nu, 1.0 / *k.power_exp);
    t.power_exp = k.power_exp;
  }
  t.label = k.label + "|nu=" + std::to_string(nu);
  return t;
}

// ---------------------------------------------------------------------------
// phi calculus
// ---------------------------------------------------------------------------

/// Bound function phi on (0, 1] from the domination classes.  Members of the
/// class Phi vanish at 0; constant bounds (the bar-classes) do not.
struct PhiFunction {
  std::function<double(double)> fn;
  bool vanishes_at_zero = true;
  std::string label;

  double operator()(double x) const { return fn(x); }
};

inline PhiFunction make_constant_phi(double zeta) {
  if (zeta < 0.0) throw std::domain_error("make_constant_phi: zeta >= 0");
  return {[zeta](double) { return zeta; }, false,
          "const:" + std::to_string(zeta)};
}

/// phi(x) = coef * x^p with p > 0.
inline PhiFunction make_power_phi(double coef, double p) {
  if (coef < 0.0 || !(p > 0.0))
    throw std::domain_error("make_power_phi: coef >= 0 and p > 0");
  return {[coef, p](double x) { return coef * std::pow(x, p); }, true,
          "power:" + std::to_string(coef) + "," + std::to_string(p)};
}

/// The enlarged bound phi_alpha of the class calculus:
///   alpha < 1 : phi(x) / (1 - alpha)
///   alpha = 1 : phi(x) + phi(x)/sqrt(log(1/x)) + phi(1 ^ e^{-sqrt(log(1/x))})
///   alpha > 1 : phi(x) + phi(sqrt(x))/(alpha-1) + phi(1) x^{(alpha-1)/2}/(alpha-1)
inline double phi_alpha(const PhiFunction& phi, double alpha, double x) {
  if (!(x > 0.0) || !(x < 1.0))
    throw std::domain_error("phi_alpha: x must lie in (0, 1)");
  if (!(alpha > 0.0) || alpha > 2.0)
    throw std::domain_error("phi_alpha: alpha must lie in (0, 2]");
  if (alpha < 1.0 - 1e-12) return phi(x) / (1.0 - alpha);
  if (alpha <= 1.0 + 1e-12) {
    const double l = std::sqrt(std::log(1.0 / x));
    return phi(x) + phi(x) / l + phi(std::min(1.0, std::exp(-l)));
  }
  return phi(x) + phi(std::sqrt(x)) / (alpha - 1.0) +
         phi(1.0) * std::pow(x, (alpha - 1.0) / 2.0) / (alpha - 1.0);
}

/// Truncation-level schedule and its constraint diagnostics: the returned
/// nu = min(n^{1/5}, phi_beta(delta^{1/beta})^{-1/3}) drives all three
/// limits nu -> inf, nu^2 phi_beta(delta^{1/beta}) -> 0, nu^4/n -> 0.
struct NuSchedule {
  double nu = 0.0;
  double nu_sq_phi = 0.0;
  double nu4_over_n = 0.0;
};

inline NuSchedule nu_schedule(const PhiFunction& phi, double beta,
                              double delta_n, std::size_t n) {
  if (!(delta_n > 0.0) || delta_n >= 1.0)
    throw std::domain_error("nu_schedule: delta must lie in (0, 1)");
  if (n == 0) throw std::domain_error("nu_schedule: n must be positive");
  const double x = std::pow(delta_n, 1.0 / beta);
  const double pb = phi_alpha(phi, beta, x);
  const double by_n = std::pow(static_cast<double>(n), 0.2);
  const double nu = pb > 0.0 ? std::min(by_n, std::pow(pb, -1.0 / 3.0)) : by_n;
  return {nu, nu * nu * pb, nu * nu * nu * nu / static_cast<double>(n)};
}

/// Kernel spec grammar: "cos:w=0.5" | "pow:r=2" | "tpow:r=2,g=3" | "opt".
inline Kernel parse_kernel_spec(const std::string& spec, const StableLaw& law) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? "" : spec.substr(colon + 1);
  const auto get = [&rest, &spec](const std::string& key) {
    const auto pos = rest.find(key + "=");
    if (pos == std::string::npos)
      throw std::invalid_argument("kernel spec '" + spec + "' needs " + key);
    const auto end = rest.find(',', pos);
    return std::stod(rest.substr(pos + key.size() + 1,
                                 end == std::string::npos ? end : end - pos -
                                                                key.size() - 1));
  };
  if (name == "cos") return make_cos_kernel(get("w"));
  if (name == "pow") return make_power_kernel(get("r"));
  if (name == "tpow") return make_truncated_power_kernel(get("r"), get("g"));
  if (name == "opt") return make_optimal_kernel(law);
  throw std::invalid_argument("unknown kernel spec '" + spec + "'");
}

}  // namespace levyvol
