// Monte Carlo experiment engine: replicate simulate -> estimate pipelines
// over an (n, delta) schedule, summarize bias / variance / normality, fit
// convergence rates, and compare against the asymptotics catalog.
//
// Replication r of schedule point i draws from the generator stream
// (master_seed, i, r); the reduction is a per-index write followed by a
// sequential pass, so results are identical for any worker count.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "levyvol/asymptotics.hpp"
#include "levyvol/estimators.hpp"
#include "levyvol/kernels.hpp"
#include "levyvol/levy_models.hpp"
#include "levyvol/stable.hpp"

namespace levyvol {

// ---------------------------------------------------------------------------
// Estimator specs
// ---------------------------------------------------------------------------

/// Estimator spec grammar (the kernel, when present, is the last key):
///   "charfn:w=1,case=2"            "charfn:w=1,case=1,delta=0.1"
///   "semi:case=2,kernel=cos:w=0.5" "param:kernel=cos:w=1"
///   "tpow:r=2,g=3,case=2"          "sec8:r=2,c=3,kappa=0"
struct EstimatorSpec {
  enum class Kind { Charfn, Semi, Param, TPow, Sec8 };
  Kind kind = Kind::Charfn;
  PlanCase plan_case = PlanCase::SemiCase2;
  double delta_frac = 0.1;
  std::string kernel;  // kernel sub-spec for semi / param
  double w = 1.0;
  double r = 2.0;
  double gamma = 3.0;
  double c = 3.0;
  double kappa = 0.0;
  double theta_scale = 1.0;
  std::size_t mc_paths = 100000;
  std::string text;
};

inline EstimatorSpec parse_estimator_spec(const std::string& spec) {
  EstimatorSpec e;
  e.text = spec;
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (name == "charfn") e.kind = EstimatorSpec::Kind::Charfn;
  else if (name == "semi") e.kind = EstimatorSpec::Kind::Semi;
  else if (name == "param") { e.kind = EstimatorSpec::Kind::Param; e.plan_case = PlanCase::Parametric; }
  else if (name == "tpow") e.kind = EstimatorSpec::Kind::TPow;
  else if (name == "sec8") e.kind = EstimatorSpec::Kind::Sec8;
  else throw std::invalid_argument("unknown estimator '" + name + "'");

  // kernel=... swallows the remainder of the spec
  const auto kpos = rest.find("kernel=");
  if (kpos != std::string::npos) {
    e.kernel = rest.substr(kpos + 7);
    rest = rest.substr(0, kpos);
    if (!rest.empty() && rest.back() == ',') rest.pop_back();
  }
  if (!rest.empty()) {
    for (auto& [k, v] : detail::split_kv(rest)) {
      if (k == "case") {
        if (v == "1") e.plan_case = PlanCase::SemiCase1;
        else if (v == "2") e.plan_case = PlanCase::SemiCase2;
        else if (v == "param") e.plan_case = PlanCase::Parametric;
        else throw std::invalid_argument("estimator case must be 1|2|param");
      } else if (k == "delta") e.delta_frac = detail::parse_double(v);
      else if (k == "w") e.w = detail::parse_double(v);
      else if (k == "r") e.r = detail::parse_double(v);
      else if (k == "g" || k == "gamma") e.gamma = detail::parse_double(v);
      else if (k == "c") e.c = detail::parse_double(v);
      else if (k == "kappa") e.kappa = detail::parse_double(v);
      else if (k == "theta_scale") e.theta_scale = detail::parse_double(v);
      else if (k == "mc_paths") e.mc_paths = static_cast<std::size_t>(detail::parse_double(v));
      else throw std::invalid_argument("estimator spec: unknown key " + k);
    }
  }
  if (e.kind == EstimatorSpec::Kind::Param && e.kernel.empty())
    throw std::invalid_argument("param estimator needs kernel=...");
  if (e.kind == EstimatorSpec::Kind::Semi && e.kernel.empty())
    throw std::invalid_argument("semi estimator needs kernel=...");
  return e;
}

/// Run one estimator on one sample.  `g` is required by the parametric kind
/// (falls back to the sample's own metadata when absent).
inline EstimateReport run_estimator(const EstimatorSpec& e,
                                    const IncrementSample& s,
                                    const StableLaw& law,
                                    std::optional<PerturbationLaw> g =
                                        std::nullopt) {
  const auto plan = e.kind == EstimatorSpec::Kind::Sec8
                        ? make_plan(s.n(), PlanCase::SemiCase2)
                        : make_plan(s.n(), e.plan_case, e.delta_frac);
  switch (e.kind) {
    case EstimatorSpec::Kind::Charfn:
      return charfn_estimate(s, plan, law, e.w, e.theta_scale);
    case EstimatorSpec::Kind::Semi:
      return semiparametric_estimate(s, plan, law,
                                     parse_kernel_spec(e.kernel, law),
                                     e.theta_scale);
    case EstimatorSpec::Kind::Param: {
      if (!g && s.meta) g = s.meta->G;
      if (!g)
        throw std::invalid_argument(
            "param estimator needs the perturbation law");
      const auto tag = class_membership(*g);
      return parametric_estimate(s, plan, law, *g,
                                 make_constant_phi(tag.zeta),
                                 parse_kernel_spec(e.kernel, law), e.mc_paths);
    }
    case EstimatorSpec::Kind::TPow:
      return truncated_power_estimate(s, plan, law, e.r, e.gamma,
                                      e.theta_scale);
    case EstimatorSpec::Kind::Sec8:
      return section8_estimate(s, e.r, e.c, e.kappa, plan);
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentPoint {
  std::size_t n = 0;
  double delta = 0.0;
};

struct GateConfig {
  std::optional<double> max_fallback_rate;
  std::optional<double> max_abs_skewness;
  std::optional<double> max_abs_excess_kurtosis;
  std::optional<double> sd_rel_tol;  // |empirical/predicted - 1| bound
};

struct ExperimentConfig {
  double sigma = 1.0;
  double beta = 2.0;
  PerturbationLaw G = GaussianCompoundPoisson{0.0, 1.0, 0.0};
  std::vector<ExperimentPoint> schedule;
  std::string estimator = "charfn:w=1,case=2";
  std::size_t replications = 100;
  std::uint64_t master_seed = 1;
  double trim_fraction = 0.01;
  GateConfig gates;
};

inline void validate(const ExperimentConfig& c) {
  if (c.replications < 2)
    throw std::domain_error("experiment: replications must be >= 2");
  if (c.schedule.empty()) throw std::domain_error("experiment: empty schedule");
  const auto espec = parse_estimator_spec(c.estimator);
  for (const auto& p : c.schedule) {
    if (!(p.delta > 0.0)) throw std::domain_error("experiment: delta > 0");
    (void)make_plan(p.n,
                    espec.kind == EstimatorSpec::Kind::Sec8
                        ? PlanCase::SemiCase2
                        : espec.plan_case,
                    espec.delta_frac);
  }
  if (!(c.trim_fraction >= 0.0) || c.trim_fraction >= 0.5)
    throw std::domain_error("experiment: trim fraction in [0, 1/2)");
  validate(c.G);
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.sigma = j.at("sigma").get<double>();
  c.beta = j.at("beta").get<double>();
  c.G = parse_perturbation(j.at("G").get<std::string>());
  c.estimator = j.at("estimator").get<std::string>();
  c.replications = j.at("replications").get<std::size_t>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("trim_fraction"))
    c.trim_fraction = j.at("trim_fraction").get<double>();
  const double dexp =
      j.contains("delta_exponent") ? j.at("delta_exponent").get<double>() : 0.0;
  for (const auto& e : j.at("schedule")) {
    ExperimentPoint p;
    p.n = e.at("n").get<std::size_t>();
    if (e.contains("delta")) p.delta = e.at("delta").get<double>();
    else if (dexp > 0.0) p.delta = std::pow(static_cast<double>(p.n), -dexp);
    else throw std::invalid_argument("schedule entry needs delta");
    c.schedule.push_back(p);
  }
  if (j.contains("gates")) {
    const auto& g = j.at("gates");
    if (g.contains("max_fallback_rate"))
      c.gates.max_fallback_rate = g.at("max_fallback_rate").get<double>();
    if (g.contains("max_abs_skewness"))
      c.gates.max_abs_skewness = g.at("max_abs_skewness").get<double>();
    if (g.contains("max_abs_excess_kurtosis"))
      c.gates.max_abs_excess_kurtosis =
          g.at("max_abs_excess_kurtosis").get<double>();
    if (g.contains("sd_rel_tol"))
      c.gates.sd_rel_tol = g.at("sd_rel_tol").get<double>();
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  f >> j;
  return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ReplicationRow {
  std::size_t replication = 0;
  std::size_t n = 0;
  double delta = 0.0;
  double sigma_hat = 0.0;
  bool fallback = false;
};

struct PointSummary {
  std::size_t n = 0;
  double delta = 0.0;
  std::size_t p = 0;           // main block size
  std::size_t replications = 0;
  double mean = 0.0;
  double bias = 0.0;
  double sd_scaled = 0.0;      // sd of sqrt(p) (sigma_hat - sigma)
  std::optional<double> predicted_sd;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double fallback_rate = 0.0;
  double rmse_trimmed = 0.0;
  double trim_fraction = 0.0;
};

struct ExperimentSummary {
  std::vector<PointSummary> points;
  std::vector<ReplicationRow> replications;
  std::optional<double> rate_slope;
  bool gates_passed = true;
  std::vector<std::string> gate_failures;
};

namespace detail {

inline std::size_t worker_count() {
  if (const char* env = std::getenv("LEVYVOL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

inline double trimmed_rmse(std::vector<double> sqerr, double trim) {
  std::sort(sqerr.begin(), sqerr.end());
  const auto drop = static_cast<std::size_t>(
      std::ceil(trim * static_cast<double>(sqerr.size())));
  const std::size_t keep = sqerr.size() > drop ? sqerr.size() - drop : 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < keep; ++i) acc += sqerr[i];
  return std::sqrt(acc / static_cast<double>(keep));
}

/// Predicted sd of sqrt(p)(sigma_hat - sigma) where the catalog applies.
inline std::optional<double> predicted_sd_for(const ExperimentConfig& c,
                                              const EstimatorSpec& e) {
  const StableLaw law(c.beta);
  std::optional<double> s2;
  switch (e.kind) {
    case EstimatorSpec::Kind::Charfn:
      s2 = sigma2_cos_closed(law, e.w);
      break;
    case EstimatorSpec::Kind::Semi:
    case EstimatorSpec::Kind::Param:
      s2 = sigma2(parse_kernel_spec(e.kernel, law), law);
      break;
    case EstimatorSpec::Kind::TPow:
      s2 = sigma2_truncated_power(e.r, e.gamma, law);
      break;
    case EstimatorSpec::Kind::Sec8: {
      if (const auto* g = std::get_if<GaussianCompoundPoisson>(&c.G)) {
        const auto prof = section8_profile(e.r, e.kappa, e.c, c.sigma,
                                           g->lambda, g->eta);
        if (prof && prof->v1 == 0.0) return std::sqrt(prof->v0);
      }
      return std::nullopt;
    }
  }
  if (!s2) return std::nullopt;
  // Case 1 loses a (1 - 2 delta_frac) share of the sample to the drift and
  // prelim blocks, but the sd is reported per sqrt(p) so no adjustment.
  return c.sigma * std::sqrt(*s2);
}

}  // namespace detail

/// Least-squares slope of log RMSE against log n; needs >= 3 points spanning
/// at least a decade in n.
inline double fit_rate(const std::vector<PointSummary>& points) {
  if (points.size() < 3)
    throw std::domain_error("fit_rate: need at least 3 schedule points");
  double nmin = 1e300, nmax = 0.0;
  for (const auto& p : points) {
    nmin = std::min(nmin, static_cast<double>(p.n));
    nmax = std::max(nmax, static_cast<double>(p.n));
  }
  if (nmax < 10.0 * nmin)
    throw std::domain_error("fit_rate: schedule must span a decade in n");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto m = static_cast<double>(points.size());
  for (const auto& p : points) {
    const double x = std::log(static_cast<double>(p.n));
    const double y = std::log(p.rmse_trimmed);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto espec = parse_estimator_spec(cfg.estimator);
  const StableLaw law(cfg.beta);
  ExperimentSummary out;
  const auto workers = detail::worker_count();

  for (std::size_t pi = 0; pi < cfg.schedule.size(); ++pi) {
    const auto& pt = cfg.schedule[pi];
    std::vector<double> est(cfg.replications);
    std::vector<char> fell(cfg.replications, 0);

    const auto run_block = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t rep = lo; rep < hi; ++rep) {
        Rng rng(stream_seed(cfg.master_seed, pi, rep));
        auto sample =
            sample_increments(cfg.sigma, cfg.G, cfg.beta, pt.delta, pt.n, rng);
        const auto rep_out = run_estimator(espec, sample, law, cfg.G);
        est[rep] = rep_out.sigma_hat;
        fell[rep] = rep_out.fallback_used ? 1 : 0;
      }
    };
    if (workers <= 1 || cfg.replications < 2 * workers) {
      run_block(0, cfg.replications);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk =
          (cfg.replications + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(cfg.replications, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(run_block, lo, hi);
      }
      for (auto& t : pool) t.join();
    }

    PointSummary s;
    s.n = pt.n;
    s.delta = pt.delta;
    s.p = espec.kind == EstimatorSpec::Kind::Sec8
              ? make_plan(pt.n, PlanCase::SemiCase2).p
              : make_plan(pt.n, espec.plan_case, espec.delta_frac).p;
    s.replications = cfg.replications;
    s.trim_fraction = cfg.trim_fraction;
    const double sqp = std::sqrt(static_cast<double>(s.p));
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= static_cast<double>(est.size());
    s.mean = mean;
    s.bias = mean - cfg.sigma;
    std::vector<double> scaled(est.size()), sqerr(est.size());
    for (std::size_t i = 0; i < est.size(); ++i) {
      scaled[i] = sqp * (est[i] - cfg.sigma);
      sqerr[i] = (est[i] - cfg.sigma) * (est[i] - cfg.sigma);
    }
    double sm = 0.0;
    for (double v : scaled) sm += v;
    sm /= static_cast<double>(scaled.size());
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : scaled) {
      const double d = v - sm;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    const double nn = static_cast<double>(scaled.size());
    m2 /= nn; m3 /= nn; m4 /= nn;
    s.sd_scaled = std::sqrt(m2 * nn / (nn - 1.0));
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    double fb = 0.0;
    for (char f : fell) fb += f;
    s.fallback_rate = fb / nn;
    s.rmse_trimmed = detail::trimmed_rmse(std::move(sqerr), cfg.trim_fraction);
    s.predicted_sd = detail::predicted_sd_for(cfg, espec);
    out.points.push_back(s);

    for (std::size_t i = 0; i < est.size(); ++i)
      out.replications.push_back({i, pt.n, pt.delta, est[i], fell[i] != 0});

    // gates
    const auto fail = [&](const std::string& what) {
      out.gates_passed = false;
      out.gate_failures.push_back("n=" + std::to_string(pt.n) + ": " + what);
    };
    if (cfg.gates.max_fallback_rate &&
        s.fallback_rate > *cfg.gates.max_fallback_rate)
      fail("fallback rate " + std::to_string(s.fallback_rate));
    if (cfg.gates.max_abs_skewness &&
        std::abs(s.skewness) > *cfg.gates.max_abs_skewness)
      fail("skewness " + std::to_string(s.skewness));
    if (cfg.gates.max_abs_excess_kurtosis &&
        std::abs(s.excess_kurtosis) > *cfg.gates.max_abs_excess_kurtosis)
      fail("excess kurtosis " + std::to_string(s.excess_kurtosis));
    if (cfg.gates.sd_rel_tol && s.predicted_sd &&
        std::abs(s.sd_scaled / *s.predicted_sd - 1.0) > *cfg.gates.sd_rel_tol)
      fail("sd " + std::to_string(s.sd_scaled) + " vs predicted " +
           std::to_string(*s.predicted_sd));
  }

  if (out.points.size() >= 3) {
    double nmin = 1e300, nmax = 0.0;
    for (const auto& p : out.points) {
      nmin = std::min(nmin, static_cast<double>(p.n));
      nmax = std::max(nmax, static_cast<double>(p.n));
    }
    if (nmax >= 10.0 * nmin) out.rate_slope = fit_rate(out.points);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline void write_replications_csv(const std::string& path,
                                   const ExperimentSummary& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "replication,n,delta,sigma_hat,fallback\n";
  for (const auto& r : s.replications)
    f << r.replication << "," << r.n << "," << detail::fmt_g17(r.delta) << ","
      << detail::fmt_g17(r.sigma_hat) << "," << (r.fallback ? 1 : 0) << "\n";
}

inline void write_summary_csv(const std::string& path,
                              const ExperimentSummary& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "n,delta,p,replications,mean,bias,sd_scaled,predicted_sd,skewness,"
       "excess_kurtosis,fallback_rate,rmse_trimmed,trim_fraction\n";
  for (const auto& p : s.points) {
    f << p.n << "," << detail::fmt_g17(p.delta) << "," << p.p << ","
      << p.replications << "," << detail::fmt_g17(p.mean) << ","
      << detail::fmt_g17(p.bias) << "," << detail::fmt_g17(p.sd_scaled) << ","
      << (p.predicted_sd ? detail::fmt_g17(*p.predicted_sd) : "") << ","
      << detail::fmt_g17(p.skewness) << ","
      << detail::fmt_g17(p.excess_kurtosis) << ","
      << detail::fmt_g17(p.fallback_rate) << ","
      << detail::fmt_g17(p.rmse_trimmed) << ","
      << detail::fmt_g17(p.trim_fraction) << "\n";
  }
}

}  // namespace levyvol
