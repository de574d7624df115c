// Volatility estimators: sample splitting, the preliminary tail-frequency
// scale S_n, the drift root B_n, the generic estimating-equation solver, and
// the concrete parametric / semiparametric / closed-form estimators.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "levyvol/kernels.hpp"
#include "levyvol/levy_models.hpp"
#include "levyvol/moment_maps.hpp"
#include "levyvol/stable.hpp"

namespace levyvol {

// ---------------------------------------------------------------------------
// Sample plans
// ---------------------------------------------------------------------------

enum class PlanCase { Parametric, SemiCase1, SemiCase2 };

/// Disjoint ordered blocks: drift [0, q), preliminary [q, q+m), main
/// [q+m, q+m+p).  Case 1 uses m = q = floor(delta_frac * n); Case 2 and the
/// parametric plan use q = 0 with m = ceil(n^{2/3}).
struct SamplePlan {
  PlanCase kase = PlanCase::SemiCase2;
  double delta_frac = 0.0;
  std::size_t m = 0;
  std::size_t q = 0;
  std::size_t p = 0;
};

inline SamplePlan make_plan(std::size_t n, PlanCase kase,
                            double delta_frac = 0.0) {
  if (n < 20) throw std::domain_error("make_plan: n must be at least 20");
  SamplePlan plan;
  plan.kase = kase;
  if (kase == PlanCase::SemiCase1) {
    if (!(delta_frac > 0.0) || !(delta_frac < 0.5))
      throw std::domain_error("make_plan: delta_frac must lie in (0, 1/2)");
    plan.delta_frac = delta_frac;
    plan.m = static_cast<std::size_t>(delta_frac * static_cast<double>(n));
    if (plan.m == 0) throw std::domain_error("make_plan: empty drift block");
    plan.q = plan.m;
    plan.p = n - 2 * plan.m;
  } else {
    plan.m = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0)));
    plan.q = 0;
    plan.p = n - plan.m;
  }
  if (plan.p == 0 || plan.q + plan.m + plan.p > n)
    throw std::domain_error("make_plan: blocks do not fit");
  return plan;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RootDiagnostics {
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double residual = 0.0;
  int sign_changes = 0;
  bool on_boundary = false;  // root in the outermost search cell
};

struct EstimateReport {
  double sigma_hat = 1.0;
  double s_prelim = 1.0;
  double b_drift = 0.0;
  bool fallback_used = false;
  RootDiagnostics root;
};

inline nlohmann::json to_json(const EstimateReport& r) {
  return nlohmann::json{
      {"sigma_hat", r.sigma_hat},
      {"s_prelim", r.s_prelim},
      {"b_drift", r.b_drift},
      {"fallback_used", r.fallback_used},
      {"root",
       {{"bracket_lo", r.root.bracket_lo},
        {"bracket_hi", r.root.bracket_hi},
        {"residual", r.root.residual},
        {"sign_changes", r.root.sign_changes},
        {"on_boundary", r.root.on_boundary}}}};
}

// ---------------------------------------------------------------------------
// Preliminary estimators
// ---------------------------------------------------------------------------

namespace detail {

inline void check_plan(const IncrementSample& s, const SamplePlan& plan) {
  if (plan.q + plan.m + plan.p > s.n())
    throw std::domain_error("plan does not fit the sample");
}

}  // namespace detail

/// S_n: the exceedance frequency of the rescaled, drift-corrected prelim
/// block pushed through the inverse tail function; 1 when degenerate.
/// `b_level` is the level subtracted from each raw increment (B_n in the
/// semiparametric cases, b'(G, beta) * delta in the parametric one).
inline double preliminary_scale(const IncrementSample& s,
                                const SamplePlan& plan, const StableLaw& law,
                                double b_level) {
  detail::check_plan(s, plan);
  const double scale = std::pow(s.delta, -1.0 / law.beta());
  std::size_t count = 0;
  for (std::size_t i = plan.q; i < plan.q + plan.m; ++i)
    if (std::abs(scale * (s.chi[i] - b_level)) > 1.0) ++count;
  const double v = static_cast<double>(count) / static_cast<double>(plan.m);
  if (v <= 0.0 || v >= 1.0) return 1.0;
  return tail_psi_inverse(law, v);
}

/// B_n: unique root of the decreasing odd-score equation
/// u -> mean theta(delta^{-1/beta}(chi_i - u)) over the drift block.
/// Case 2 and the parametric case have no drift block and return 0.
inline double drift_estimator(const IncrementSample& s, const SamplePlan& plan,
                              const StableLaw& law, double theta_scale = 1.0) {
  if (plan.kase != PlanCase::SemiCase1) return 0.0;
  detail::check_plan(s, plan);
  if (!(theta_scale > 0.0))
    throw std::domain_error("drift_estimator: theta_scale > 0");
  const double scale = std::pow(s.delta, -1.0 / law.beta());
  const auto r_n = [&](double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plan.q; ++i)
      acc += std::atan(scale * (s.chi[i] - u) / theta_scale);
    return 2.0 / kPi * acc / static_cast<double>(plan.q);
  };
  auto [lo_it, hi_it] =
      std::minmax_element(s.chi.begin(), s.chi.begin() + plan.q);
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) return lo;
  // R_n is strictly decreasing with R_n(lo) >= 0 >= R_n(hi)
  const double tol = std::pow(s.delta, 1.0 / law.beta()) * 1e-8;
  double rlo = r_n(lo);
  for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double rm = r_n(mid);
    if (rm == 0.0) return mid;
    if ((rm > 0.0) == (rlo > 0.0)) {
      lo = mid;
      rlo = rm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Generic estimating-equation solver
// ---------------------------------------------------------------------------

struct RootResult {
  double root = 1.0;
  bool fallback = false;
  RootDiagnostics diag;
};

/// Scan u on the geometric grid s * 2^{j/16}, j in [-64, 64], bisect every
/// sign-change cell, and return the root closest to s (ties go to the
/// smaller root).  No sign change anywhere gives the fallback value 1.
inline RootResult solve_estimating_equation(
    const std::function<double(double)>& U, double s_center) {
  if (!(s_center > 0.0))
    throw std::domain_error("solve_estimating_equation: center > 0");
  constexpr int kHalf = 64;
  std::vector<double> us(2 * kHalf + 1), vals(2 * kHalf + 1);
  for (int j = -kHalf; j <= kHalf; ++j) {
    us[j + kHalf] = s_center * std::pow(2.0, j / 16.0);
    vals[j + kHalf] = U(us[j + kHalf]);
  }
  RootResult res;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < static_cast<int>(us.size()); ++i) {
    const double a = vals[i], b = vals[i + 1];
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (a * b > 0.0) continue;
    if (a == 0.0 && b == 0.0) continue;
    ++res.diag.sign_changes;
    double lo = us[i], hi = us[i + 1], flo = a;
    for (int it = 0; it < 200 && (hi - lo) > 1e-10 * lo; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = U(mid);
      if (fm == 0.0) { lo = hi = mid; break; }
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double root = 0.5 * (lo + hi);
    const double dist = std::abs(root - s_center);
    // ties (to bisection resolution) go to the smaller root
    const double tie = 1e-8 * s_center;
    const bool better =
        dist < best_dist - tie || (dist <= best_dist + tie && root < res.root);
    if (res.diag.sign_changes == 1 || better) {
      res.root = root;
      best_dist = dist;
      res.diag.bracket_lo = us[i];
      res.diag.bracket_hi = us[i + 1];
      res.diag.residual = std::abs(U(root));
      res.diag.on_boundary = (i == 0) || (i + 2 == static_cast<int>(us.size()));
    }
  }
  if (res.diag.sign_changes == 0) {
    res.root = 1.0;
    res.fallback = true;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Concrete estimators
// ---------------------------------------------------------------------------

namespace detail {

template <class F>
double main_block_mean(const IncrementSample& s, const SamplePlan& plan,
                       const F& f) {
  double acc = 0.0;
  const std::size_t lo = plan.q + plan.m;
  for (std::size_t i = lo; i < lo + plan.p; ++i) acc += f(s.chi[i]);
  return acc / static_cast<double>(plan.p);
}

}  // namespace detail

/// Parametric estimator: exact centering by Psi_{G,Delta,beta,k_n} with the
/// modified increments chi(G) = delta^{-1/beta}(chi - b'(G,beta) delta).
/// `phi` feeds the truncation schedule when k is unbounded; MC-backed
/// centerings are refused when their error estimate exceeds
/// `psi_err_threshold`.
inline EstimateReport parametric_estimate(const IncrementSample& s,
                                          const SamplePlan& plan,
                                          const StableLaw& law,
                                          const PerturbationLaw& g,
                                          const PhiFunction& phi,
                                          const Kernel& k,
                                          std::size_t mc_paths = 100000,
                                          double psi_err_threshold = 1e-4) {
  detail::check_plan(s, plan);
  const double beta = law.beta();
  const auto tag = class_membership(g);
  if (tag.alpha > beta)
    throw std::domain_error("parametric_estimate: class index exceeds beta");
  if (beta < 2.0 && !(k.growth < beta / 2.0))
    throw std::domain_error("parametric_estimate: kernel growth violates"
                            " gamma < beta/2");
  Kernel kn = k;
  if (!k.bounded)
    kn = truncate_kernel(k, nu_schedule(phi, beta, s.delta, s.n()).nu);

  const double b_level = drift_correction(g, beta) * s.delta;
  EstimateReport rep;
  rep.b_drift = b_level;
  rep.s_prelim = preliminary_scale(s, plan, law, b_level);
  const double scale = std::pow(s.delta, -1.0 / beta);
  const double emp = detail::main_block_mean(s, plan, [&](double chi) {
    return kn(scale * (chi - b_level) / rep.s_prelim);
  });
  // centering error is essentially u-free; check once at the center
  const auto probe = psi_G(kn, law, g, beta, s.delta, 1.0,
                           1.0 / rep.s_prelim, 0.0, mc_paths);
  if (probe.error_estimate > psi_err_threshold)
    throw std::runtime_error(
        "parametric_estimate: psi_G error estimate " +
        std::to_string(probe.error_estimate) + " exceeds threshold " +
        std::to_string(psi_err_threshold));
  const auto U = [&](double u) {
    return emp - psi_G(kn, law, g, beta, s.delta, u / rep.s_prelim,
                       1.0 / rep.s_prelim, 0.0, mc_paths)
                     .value;
  };
  const auto root = solve_estimating_equation(U, rep.s_prelim);
  rep.sigma_hat = root.root;
  rep.fallback_used = root.fallback;
  rep.root = root.diag;
  return rep;
}

/// Semiparametric estimator: centering by Psi_k alone; drift and scale come
/// from the plan's preliminary blocks.
inline EstimateReport semiparametric_estimate(const IncrementSample& s,
                                              const SamplePlan& plan,
                                              const StableLaw& law,
                                              const Kernel& k,
                                              double theta_scale = 1.0) {
  detail::check_plan(s, plan);
  if (!k.bounded)
    throw std::domain_error("semiparametric_estimate: kernel must be bounded");
  EstimateReport rep;
  rep.b_drift = drift_estimator(s, plan, law, theta_scale);
  rep.s_prelim = preliminary_scale(s, plan, law, rep.b_drift);
  const double scale = std::pow(s.delta, -1.0 / law.beta());
  const double emp = detail::main_block_mean(s, plan, [&](double chi) {
    return k(scale * (chi - rep.b_drift) / rep.s_prelim);
  });
  const auto U = [&](double u) {
    return emp - psi_k(k, law, u / rep.s_prelim).value;
  };
  const auto root = solve_estimating_equation(U, rep.s_prelim);
  rep.sigma_hat = root.root;
  rep.fallback_used = root.fallback;
  rep.root = root.diag;
  return rep;
}

/// Explicit empirical-characteristic-function estimator
///   sigma_hat = S_n (2^{1/beta}/w) (-log mean cos(w chi'(B_n)/S_n))^{1/beta},
/// with fallback 1 when the log argument is not in (0, 1).
inline EstimateReport charfn_estimate(const IncrementSample& s,
                                      const SamplePlan& plan,
                                      const StableLaw& law, double w,
                                      double theta_scale = 1.0) {
  if (!(w > 0.0)) throw std::domain_error("charfn_estimate: w must be > 0");
  detail::check_plan(s, plan);
  EstimateReport rep;
  rep.b_drift = drift_estimator(s, plan, law, theta_scale);
  rep.s_prelim = preliminary_scale(s, plan, law, rep.b_drift);
  const double scale = std::pow(s.delta, -1.0 / law.beta());
  const double v = detail::main_block_mean(s, plan, [&](double chi) {
    return std::cos(w * scale * (chi - rep.b_drift) / rep.s_prelim);
  });
  if (!(v > 0.0) || !(v < 1.0)) {
    rep.sigma_hat = 1.0;
    rep.fallback_used = true;
    return rep;
  }
  const double beta = law.beta();
  rep.sigma_hat = rep.s_prelim * std::pow(2.0, 1.0 / beta) / w *
                  std::pow(-std::log(v), 1.0 / beta);
  return rep;
}

/// Truncated-power-variation estimator: inverts u -> Psi_{k_gamma}(u, 0)
/// locally around 1 on the target V_n(gamma S_n) / S_n^r.
inline EstimateReport truncated_power_estimate(const IncrementSample& s,
                                               const SamplePlan& plan,
                                               const StableLaw& law, double r,
                                               double gamma_cut,
                                               double theta_scale = 1.0) {
  if (!(r > 0.0) || !(gamma_cut > 0.0))
    throw std::domain_error("truncated_power_estimate: r, gamma_cut > 0");
  detail::check_plan(s, plan);
  EstimateReport rep;
  rep.b_drift = drift_estimator(s, plan, law, theta_scale);
  rep.s_prelim = preliminary_scale(s, plan, law, rep.b_drift);
  const double beta = law.beta();
  const double dpow = std::pow(s.delta, 1.0 / beta);
  const double cut_abs = gamma_cut * rep.s_prelim * dpow;
  const double v = detail::main_block_mean(s, plan, [&](double chi) {
    if (std::abs(chi) > cut_abs) return 0.0;
    return std::pow(std::abs(chi - rep.b_drift), r);
  }) / std::pow(dpow, r);
  const auto kg = make_truncated_power_kernel(r, gamma_cut);
  const auto center = [&](double u) { return psi_k(kg, law, u).value; };
  const auto root = invert_centering(
      center, v / std::pow(rep.s_prelim, r), 1.0);
  if (!root) {
    rep.sigma_hat = 1.0;
    rep.fallback_used = true;
    return rep;
  }
  rep.sigma_hat = rep.s_prelim * *root;
  return rep;
}

/// Truncated power variation with rate tau(delta) = c delta^{1/2 + kappa}
/// for the beta = 2 model, centered as if X were sigma W alone (approximate
/// centering); c = infinity means no truncation.
inline EstimateReport section8_estimate(const IncrementSample& s, double r,
                                        double c, double kappa,
                                        std::optional<SamplePlan> plan_opt =
                                            std::nullopt) {
  if (!(r > 0.0)) throw std::domain_error("section8_estimate: r > 0");
  if (!(c > 0.0)) throw std::domain_error("section8_estimate: c > 0");
  if (kappa <= -0.5)
    throw std::domain_error("section8_estimate: kappa > -1/2");
  const StableLaw law(2.0);
  const auto plan =
      plan_opt ? *plan_opt : make_plan(s.n(), PlanCase::SemiCase2);
  detail::check_plan(s, plan);
  EstimateReport rep;
  rep.s_prelim = preliminary_scale(s, plan, law, 0.0);
  const double sq = std::sqrt(s.delta);
  const double tau_data =
      std::isinf(c) ? c : c * rep.s_prelim * std::pow(s.delta, 0.5 + kappa);
  const double v = detail::main_block_mean(s, plan, [&](double chi) {
    if (std::abs(chi) > tau_data) return 0.0;
    return std::pow(std::abs(chi), r);
  }) / std::pow(sq, r);
  // centering in normalized units u = sigma / S: threshold c delta^{kappa}
  const auto center = [&](double u) {
    if (std::isinf(c))
      return truncated_moment_gaussian(r, u, 1.0,
                                       std::numeric_limits<double>::infinity());
    return truncated_moment_gaussian(r, u, s.delta,
                                     c * std::pow(s.delta, 0.5 + kappa)) /
           std::pow(sq, r);
  };
  const auto root = invert_centering(
      center, v / std::pow(rep.s_prelim, r), 1.0);
  if (!root) {
    rep.sigma_hat = 1.0;
    rep.fallback_used = true;
    return rep;
  }
  rep.sigma_hat = rep.s_prelim * *root;
  return rep;
}

}  // namespace levyvol
