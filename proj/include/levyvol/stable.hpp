// Numerics for the symmetric beta-stable law of W_1, the driving noise of
// X_t = sigma * W_t + Y_t.  The characteristic function convention is
//
//     E exp(i u W_t) = exp(-t |u|^beta / 2),
//
// i.e. scale (1/2)^{1/beta} in the usual S(beta, scale) parameterization;
// beta = 2 is the standard normal.  Every formula downstream (tail function,
// centerings, closed forms) assumes this single convention.
//
// For beta < 2 the density is the cosine transform
//
//     h_beta(w) = (1/pi) int_0^inf cos(w u) exp(-u^beta / 2) du,
//
// evaluated either by summation over half-period panels (split at the zeros
// of the oscillating factor, with an exponential tail cutoff) or, when the
// panel count would be large, by the Ooura-Mori double-exponential Fourier
// rule.  Accuracy target: 1e-10 absolute for |w| <= 50.
#pragma once

#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "levyvol/quadrature.hpp"
#include "levyvol/rng.hpp"

namespace levyvol {

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

// Chebyshev panels for (h, h') on [0, x_max]; built lazily because a single
// evaluation of the inversion integral costs a small quadrature, and the
// kernel functionals need h and h' at thousands of points.
struct ChebPanel {
  double lo = 0.0, hi = 0.0;
  std::vector<double> c_h, c_hp;
};

struct DensityTable {
  double x_max = 0.0;
  std::vector<ChebPanel> panels;

  static double clenshaw(const std::vector<double>& c, double t) {
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) {
      const double b0 = 2.0 * t * b1 - b2 + c[i];
      b2 = b1;
      b1 = b0;
    }
    return t * b1 - b2 + c[0];
  }

  const ChebPanel& locate(double ax) const {
    // panel widths are 1/8,1/8,1/4,1/2 on [0,1], then unit panels
    std::size_t idx;
    if (ax < 0.125) idx = 0;
    else if (ax < 0.25) idx = 1;
    else if (ax < 0.5) idx = 2;
    else if (ax < 1.0) idx = 3;
    else idx = 3 + static_cast<std::size_t>(ax);
    return panels[std::min(idx, panels.size() - 1)];
  }

  double h(double ax) const {
    const auto& p = locate(ax);
    return clenshaw(p.c_h, (2.0 * ax - p.lo - p.hi) / (p.hi - p.lo));
  }
  double hp(double ax) const {
    const auto& p = locate(ax);
    return clenshaw(p.c_hp, (2.0 * ax - p.lo - p.hi) / (p.hi - p.lo));
  }
};

struct TableHolder {
  std::once_flag once;
  std::unique_ptr<DensityTable> table;
  std::atomic<const DensityTable*> ready{nullptr};
};

double density_lt2(double beta, double w);
double density_derivative_lt2(double beta, double w);

}  // namespace detail

class StableLaw {
 public:
  explicit StableLaw(double beta)
      : beta_(beta), holder_(std::make_shared<detail::TableHolder>()) {
    if (!(beta > 0.0) || beta > 2.0)
      throw std::domain_error("StableLaw: beta must lie in (0, 2]");
    // Below 0.3 the inversion integrals are too ill-conditioned to meet the
    // accuracy targets; unsupported by design.
    if (beta < 0.3)
      throw std::domain_error("StableLaw: beta < 0.3 is not supported");
  }

  double beta() const { return beta_; }
  bool is_gaussian() const { return beta_ == 2.0; }

  /// Build the interpolation table for (h, h') on [0, 64].  Called by the
  /// kernel-functional quadratures; copies of this law share the table.
  void warm_cache() const {
    if (is_gaussian()) return;
    std::call_once(holder_->once, [this] {
      auto t = std::make_unique<detail::DensityTable>();
      t->x_max = 64.0;
      const int deg = 24;
      const auto add_panel = [&](double lo, double hi) {
        detail::ChebPanel p;
        p.lo = lo;
        p.hi = hi;
        std::vector<double> fh(deg + 1), fhp(deg + 1);
        for (int i = 0; i <= deg; ++i) {
          const double t01 = std::cos(kPi * i / deg);
          const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t01;
          fh[i] = detail::density_lt2(beta_, x);
          fhp[i] = detail::density_derivative_lt2(beta_, x);
        }
        const auto coeffs = [&](const std::vector<double>& f) {
          std::vector<double> c(deg + 1, 0.0);
          for (int k = 0; k <= deg; ++k) {
            double acc = 0.5 * (f[0] + (k % 2 ? -1.0 : 1.0) * f[deg]);
            for (int i = 1; i < deg; ++i)
              acc += f[i] * std::cos(kPi * k * i / deg);
            c[k] = 2.0 * acc / deg;
          }
          c[0] *= 0.5;
          return c;
        };
        p.c_h = coeffs(fh);
        p.c_hp = coeffs(fhp);
        t->panels.push_back(std::move(p));
      };
      add_panel(0.0, 0.125);
      add_panel(0.125, 0.25);
      add_panel(0.25, 0.5);
      add_panel(0.5, 1.0);
      for (int j = 1; j < 64; ++j) add_panel(j, j + 1.0);
      holder_->table = std::move(t);
      holder_->ready.store(holder_->table.get(), std::memory_order_release);
    });
  }

  const detail::DensityTable* table() const {
    return holder_->ready.load(std::memory_order_acquire);
  }

 private:
  double beta_;
  std::shared_ptr<detail::TableHolder> holder_;
};

namespace detail {

// int_0^inf u^{s-1} exp(-u^beta/2) du = (2^{s/beta}/beta) Gamma(s/beta)
inline double exp_stable_moment(double beta, double s) {
  return std::pow(2.0, s / beta) / beta * boost::math::tgamma(s / beta);
}

// Cutoff beyond which exp(-u^beta/2) contributes < ~1e-19 to the transforms;
// small beta gets extra headroom for the u-weighted derivative transform.
inline double transform_cutoff(double beta) {
  return std::pow(beta < 0.75 ? 120.0 : 84.0, 1.0 / beta);
}

// Sum of int over half-period panels of f on [0, ucut], where the panel
// boundaries are `first_zero + k * period`.  The first panel owns any
// integrable endpoint kink at 0 (the exponent factor is not smooth there for
// beta < 1), so it is done with tanh-sinh; later panels are smooth and use a
// fixed Gauss rule.
template <class F>
double panel_sum(const F& f, double first_zero, double period, double ucut) {
  using boost::math::quadrature::gauss;
  double total = 0.0;
  double lo = 0.0;
  double hi = std::min(first_zero, ucut);
  total += quad::integrate_finite(f, lo, hi, 1e-13).value;
  lo = hi;
  while (lo < ucut) {
    hi = std::min(lo + period, ucut);
    total += gauss<double, 15>::integrate(f, lo, hi);
    lo = hi;
  }
  return total;
}

inline constexpr int kMaxPanels = 2048;
inline constexpr double kSeriesFrom = 64.0;  // far-tail series threshold

// Coefficients of the power-tail expansion
//   h_beta(w) = sum_{k>=1} A_k w^{-beta k - 1},
//   A_k = (1/pi) (-1)^{k+1} (1/2)^k Gamma(beta k + 1) sin(k pi beta / 2) / k!
// (convergent for beta < 1, asymptotic otherwise; at w >= kSeriesFrom the
// truncation error is far below 1e-12 for all supported beta).
template <class Term>
double tail_series(double beta, double w, const Term& term_of) {
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  double ck = 1.0;  // (1/2)^k / k!
  for (int k = 1; k <= 16; ++k) {
    ck *= 0.5 / k;
    const double ak = (k % 2 ? 1.0 : -1.0) / kPi * ck *
                      boost::math::tgamma(beta * k + 1.0) *
                      std::sin(k * kPi * beta / 2.0);
    const double t = term_of(k, ak, w);
    if (std::abs(t) > prev) break;  // asymptotic regime: stop at smallest term
    sum += t;
    if (std::abs(t) < 1e-17 * std::abs(sum)) break;
    prev = std::abs(t);
  }
  return sum;
}

// (1/pi) int_0^inf cos(w u) exp(-u^beta/2) du for 0 < beta < 2, w >= 0.
inline double density_lt2(double beta, double w) {
  const double ucut = transform_cutoff(beta);
  if (w == 0.0) return exp_stable_moment(beta, 1.0) / kPi;
  if (w * ucut <= kMaxPanels * kPi) {
    const auto f = [beta, w](double u) {
      return std::cos(w * u) * std::exp(-0.5 * std::pow(u, beta));
    };
    return panel_sum(f, 0.5 * kPi / w, kPi / w, ucut) / kPi;
  }
  if (w >= kSeriesFrom) {
    return tail_series(beta, w, [beta](int k, double ak, double x) {
      return ak * std::pow(x, -beta * k - 1.0);
    });
  }
  const auto f = [beta](double u) { return std::exp(-0.5 * std::pow(u, beta)); };
  return quad::fourier_cos(f, w).value / kPi;
}

// -(1/pi) int_0^inf u sin(w u) exp(-u^beta/2) du  (the derivative at w > 0).
inline double density_derivative_lt2(double beta, double w) {
  const double ucut = transform_cutoff(beta);
  if (w == 0.0) return 0.0;
  if (w * ucut <= kMaxPanels * kPi) {
    const auto f = [beta, w](double u) {
      return u * std::sin(w * u) * std::exp(-0.5 * std::pow(u, beta));
    };
    return -panel_sum(f, kPi / w, kPi / w, ucut) / kPi;
  }
  if (w >= kSeriesFrom) {
    return tail_series(beta, w, [beta](int k, double ak, double x) {
      return -ak * (beta * k + 1.0) * std::pow(x, -beta * k - 2.0);
    });
  }
  const auto f = [beta](double u) {
    return u * std::exp(-0.5 * std::pow(u, beta));
  };
  return -quad::fourier_sin(f, w).value / kPi;
}

// P(|W_1| <= a) = (2/pi) int_0^inf sin(a t) exp(-t^beta/2) / t dt.
inline double cdf_symmetric_lt2(double beta, double a) {
  const double ucut = transform_cutoff(beta);
  if (a <= 0.0) return 0.0;
  if (a * ucut <= kMaxPanels * kPi) {
    const auto f = [beta, a](double t) {
      if (t <= 0.0) return a;
      return std::sin(a * t) / t * std::exp(-0.5 * std::pow(t, beta));
    };
    return 2.0 / kPi * panel_sum(f, kPi / a, kPi / a, ucut);
  }
  if (a >= kSeriesFrom) {
    // 1 - 2 int_a^inf h = 1 - 2 sum_k A_k a^{-beta k} / (beta k)
    const double tail = tail_series(beta, a, [beta](int k, double ak, double x) {
      return ak * std::pow(x, -beta * k) / (beta * k);
    });
    return 1.0 - 2.0 * tail;
  }
  const auto f = [beta](double t) {
    return std::exp(-0.5 * std::pow(t, beta)) / t;
  };
  return 2.0 / kPi * quad::fourier_sin(f, a).value;
}

}  // namespace detail

/// Density h_beta(w).
inline double stable_density(const StableLaw& law, double w) {
  if (!std::isfinite(w)) throw std::domain_error("stable_density: non-finite w");
  const double b = law.beta();
  if (b == 2.0) return std::exp(-0.5 * w * w) / std::sqrt(2.0 * kPi);
  const double ax = std::abs(w);
  if (const auto* t = law.table(); t && ax < t->x_max)
    return std::max(t->h(ax), 0.0);
  return std::max(detail::density_lt2(b, ax), 0.0);
}

/// Derivative h'_beta(w); negative for w > 0.
inline double stable_density_derivative(const StableLaw& law, double w) {
  if (!std::isfinite(w))
    throw std::domain_error("stable_density_derivative: non-finite w");
  const double b = law.beta();
  if (b == 2.0) return -w * std::exp(-0.5 * w * w) / std::sqrt(2.0 * kPi);
  const double ax = std::abs(w);
  double d;
  if (const auto* t = law.table(); t && ax < t->x_max) d = t->hp(ax);
  else d = detail::density_derivative_lt2(b, ax);
  return w < 0.0 ? -d : d;
}

struct ScoreTriple {
  double check;  // h + w h'
  double tilde;  // check^2 / h
  double bar;    // w h' / h
};

/// The score functions (check, tilde, bar) of the stable law at w.
inline ScoreTriple score_functions(const StableLaw& law, double w) {
  if (law.is_gaussian()) {
    const double h = stable_density(law, w);
    const double c = (1.0 - w * w) * h;
    return {c, (1.0 - w * w) * c, -w * w};
  }
  const double h = std::max(stable_density(law, w), 1e-300);
  const double hp = stable_density_derivative(law, w);
  const double c = h + w * hp;
  return {c, c * c / h, w * hp / h};
}

/// Fisher constant I(beta) = int tilde_h, the information for sigma at
/// sigma = 1 from one observation of sigma * W_1.  Exactly 2 for beta = 2.
inline double fisher_info(const StableLaw& law) {
  if (law.is_gaussian()) return 2.0;
  law.warm_cache();
  const double b = law.beta();
  const auto tilde = [&law](double w) { return score_functions(law, w).tilde; };
  const double head = quad::integrate_finite(tilde, 0.0, 10.0, 1e-9).value;
  // Tail: substitute s = w^{-beta}.  Since tilde ~ beta^2 K w^{-1-beta} the
  // substituted integrand tends to the finite constant beta * K at s = 0,
  // with K the leading tail-series coefficient.
  const double k1 = 0.5 / kPi * boost::math::tgamma(b + 1.0) *
                    std::sin(kPi * b / 2.0);
  const auto tail_f = [&](double s) {
    if (s < 1e-30) return b * k1;
    const double w = std::pow(s, -1.0 / b);
    return tilde(w) / b * std::pow(s, -1.0 / b - 1.0);
  };
  const double tail =
      quad::integrate_finite(tail_f, 0.0, std::pow(10.0, -b), 1e-10).value;
  return 2.0 * (head + tail);
}

/// Tail function psi(u) = P(|W_1| > 1/u), strictly increasing on (0, inf).
inline double tail_psi(const StableLaw& law, double u) {
  if (!(u > 0.0)) throw std::domain_error("tail_psi: u must be positive");
  const double a = 1.0 / u;
  double v;
  if (law.is_gaussian()) {
    v = boost::math::erfc(a / std::sqrt(2.0));
  } else {
    v = 1.0 - detail::cdf_symmetric_lt2(law.beta(), a);
  }
  return std::clamp(v, 0.0, 1.0);
}

/// Inverse of the tail function on (0, 1); bracketing on u in [1e-6, 1e6].
inline double tail_psi_inverse(const StableLaw& law, double v) {
  if (!(v > 0.0) || !(v < 1.0))
    throw std::domain_error("tail_psi_inverse: v must lie in (0, 1)");
  if (law.is_gaussian())
    return 1.0 / (std::sqrt(2.0) * boost::math::erfc_inv(v));
  double lo = 1e-6, hi = 1e6;
  const auto g = [&](double u) { return tail_psi(law, u) - v; };
  if (g(lo) >= 0.0) return lo;
  if (g(hi) <= 0.0) return hi;
  boost::math::tools::eps_tolerance<double> tol(34);  // ~1e-10 relative
  std::uintmax_t it = 200;
  auto r = boost::math::tools::toms748_solve(g, lo, hi, tol, it);
  return 0.5 * (r.first + r.second);
}

/// One draw with characteristic function exp(-|u|^beta / 2).
inline double sample_stable_one(const StableLaw& law, Rng& rng) {
  const double b = law.beta();
  if (b == 2.0) return rng.normal();
  // Chambers-Mallows-Stuck for the symmetric case, then rescale to our
  // convention (the raw transform has characteristic exponent |u|^beta).
  const double v = kPi * (rng.uniform01() - 0.5);
  double x;
  if (std::abs(b - 1.0) < 1e-12) {
    x = std::tan(v);
  } else {
    const double e = rng.exponential();
    x = std::sin(b * v) / std::pow(std::cos(v), 1.0 / b) *
        std::pow(std::cos((1.0 - b) * v) / e, (1.0 - b) / b);
  }
  return std::pow(2.0, -1.0 / b) * x;
}

/// count i.i.d. draws of W_1.
inline std::vector<double> sample_stable(const StableLaw& law, Rng& rng,
                                         std::size_t count) {
  if (count == 0) throw std::domain_error("sample_stable: count must be >= 1");
  std::vector<double> out(count);
  for (auto& x : out) x = sample_stable_one(law, rng);
  return out;
}

}  // namespace levyvol
