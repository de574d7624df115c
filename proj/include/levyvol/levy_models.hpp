// The perturbation law G of Y_1 (three closed families), its domination
// class metadata, and simulation of observed increments of X = sigma W + Y.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "levyvol/rng.hpp"
#include "levyvol/stable.hpp"

namespace levyvol {

// ---------------------------------------------------------------------------
// Perturbation families
// ---------------------------------------------------------------------------

/// Y_t = b t.
struct PureDrift {
  double b = 0.0;
};

/// Compound Poisson with N(0, eta) jumps at intensity lambda, plus drift b.
struct GaussianCompoundPoisson {
  double lambda = 0.0;
  double eta = 1.0;
  double b = 0.0;
};

/// Symmetric alpha-stable with E exp(i u Y_t) = exp(-t scale^alpha |u|^alpha / 2).
struct SymmetricStable {
  double alpha = 1.0;
  double scale = 1.0;
};

using PerturbationLaw =
    std::variant<PureDrift, GaussianCompoundPoisson, SymmetricStable>;

inline void validate(const PerturbationLaw& g) {
  if (const auto* p = std::get_if<GaussianCompoundPoisson>(&g)) {
    if (p->lambda < 0.0)
      throw std::domain_error("GaussianCompoundPoisson: lambda must be >= 0");
    if (!(p->eta > 0.0))
      throw std::domain_error("GaussianCompoundPoisson: eta must be > 0");
  } else if (const auto* s = std::get_if<SymmetricStable>(&g)) {
    if (!(s->alpha > 0.0) || s->alpha >= 2.0)
      throw std::domain_error("SymmetricStable: alpha must lie in (0, 2)");
    if (!(s->scale > 0.0))
      throw std::domain_error("SymmetricStable: scale must be > 0");
  }
}

/// Drift after compensating small jumps: b' = b - int_{|x|<=1} x F(dx) for
/// alpha < 1, and b otherwise.  All supported jump measures are symmetric,
/// so the compensator integral vanishes and both branches agree.
inline double drift_correction(const PerturbationLaw& g, double alpha) {
  validate(g);
  const double b = std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SymmetricStable>)
          return 0.0;
        else
          return v.b;
      },
      g);
  if (alpha < 1.0) return b - 0.0;  // symmetric F: small-jump integral is 0
  return b;
}

// ---------------------------------------------------------------------------
// Domination classes
// ---------------------------------------------------------------------------

/// Membership data for the classes of laws dominated at index alpha:
/// zeta bounds x^alpha F([-x, x]^c) on (0, 1].
struct ClassTag {
  double alpha = 0.0;
  double zeta = 0.0;
  bool symmetric = false;
};

namespace detail {

// C(alpha) = int_0^inf (1 - cos x) x^{-1-alpha} dx, written through
// sinc to stay smooth across alpha = 1.
inline double one_minus_cos_integral(double alpha) {
  const double t = kPi * (1.0 - alpha) / 2.0;
  const double sinc = std::abs(t) < 1e-8 ? 1.0 : std::sin(t) / t;
  return boost::math::tgamma(2.0 - alpha) * (kPi / 2.0) * sinc / alpha;
}

}  // namespace detail

inline ClassTag class_membership(const PerturbationLaw& g) {
  validate(g);
  if (const auto* p = std::get_if<PureDrift>(&g))
    return {0.0, 0.0, p->b == 0.0};
  if (const auto* p = std::get_if<GaussianCompoundPoisson>(&g))
    return {0.0, p->lambda, p->b == 0.0};
  const auto& s = std::get<SymmetricStable>(g);
  // Levy density K |x|^{-1-alpha} with K fixed by the scale convention:
  // scale^alpha / 2 = 2 K C(alpha), hence x^alpha F([-x,x]^c) = 2K/alpha.
  const double k = std::pow(s.scale, s.alpha) /
                   (4.0 * detail::one_minus_cos_integral(s.alpha));
  return {s.alpha, 2.0 * k / s.alpha, true};
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// One draw of Y_delta.
inline double sample_perturbation(const PerturbationLaw& g, double delta,
                                  Rng& rng) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PureDrift>) {
          return v.b * delta;
        } else if constexpr (std::is_same_v<T, GaussianCompoundPoisson>) {
          // sum of J iid N(0, eta) jumps is N(0, J eta) given J
          const auto j = rng.poisson(v.lambda * delta);
          double y = v.b * delta;
          if (j > 0)
            y += std::sqrt(static_cast<double>(j) * v.eta) * rng.normal();
          return y;
        } else {
          StableLaw law(v.alpha);
          return v.scale * std::pow(delta, 1.0 / v.alpha) *
                 sample_stable_one(law, rng);
        }
      },
      g);
}

struct SampleMeta {
  double sigma = 0.0;
  double beta = 0.0;
  PerturbationLaw G;
  std::optional<std::uint64_t> seed;
};

/// The n observed increments chi_i = X_{i delta} - X_{(i-1) delta}.
struct IncrementSample {
  std::vector<double> chi;
  double delta = 0.0;
  std::optional<SampleMeta> meta;

  std::size_t n() const { return chi.size(); }
};

inline IncrementSample sample_increments(double sigma,
                                         const PerturbationLaw& g, double beta,
                                         double delta, std::size_t n,
                                         Rng& rng) {
  if (!(sigma > 0.0)) throw std::domain_error("sample_increments: sigma > 0");
  if (!(delta > 0.0)) throw std::domain_error("sample_increments: delta > 0");
  if (n == 0) throw std::domain_error("sample_increments: n >= 1");
  validate(g);
  StableLaw law(beta);
  IncrementSample out;
  out.delta = delta;
  out.chi.resize(n);
  const double w_scale = sigma * std::pow(delta, 1.0 / beta);
  for (auto& x : out.chi)
    x = w_scale * sample_stable_one(law, rng) +
        sample_perturbation(g, delta, rng);
  out.meta = SampleMeta{sigma, beta, g, std::nullopt};
  return out;
}

/// Seeded variant; records the seed in the metadata.
inline IncrementSample sample_increments(double sigma,
                                         const PerturbationLaw& g, double beta,
                                         double delta, std::size_t n,
                                         std::uint64_t seed) {
  Rng rng(seed);
  auto s = sample_increments(sigma, g, beta, delta, n, rng);
  s.meta->seed = seed;
  return s;
}

// ---------------------------------------------------------------------------
// Spec strings and serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::pair<std::string, std::string>> split_kv(
    const std::string& s) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("expected key=value in '" + item + "'");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

inline double parse_double(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "INF")
    return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// "drift:b=0.5" | "cpg:lambda=1,eta=0.5,b=0" | "stable:alpha=1,scale=1"
inline PerturbationLaw parse_perturbation(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? "" : spec.substr(colon + 1);
  PerturbationLaw g;
  if (name == "drift") {
    PureDrift d;
    for (auto& [k, v] : detail::split_kv(rest)) {
      if (k == "b") d.b = detail::parse_double(v);
      else throw std::invalid_argument("drift: unknown key " + k);
    }
    g = d;
  } else if (name == "cpg") {
    GaussianCompoundPoisson p;
    for (auto& [k, v] : detail::split_kv(rest)) {
      if (k == "lambda") p.lambda = detail::parse_double(v);
      else if (k == "eta") p.eta = detail::parse_double(v);
      else if (k == "b") p.b = detail::parse_double(v);
      else throw std::invalid_argument("cpg: unknown key " + k);
    }
    g = p;
  } else if (name == "stable") {
    SymmetricStable s;
    for (auto& [k, v] : detail::split_kv(rest)) {
      if (k == "alpha") s.alpha = detail::parse_double(v);
      else if (k == "scale") s.scale = detail::parse_double(v);
      else throw std::invalid_argument("stable: unknown key " + k);
    }
    g = s;
  } else {
    throw std::invalid_argument("unknown perturbation '" + name + "'");
  }
  validate(g);
  return g;
}

inline std::string perturbation_spec(const PerturbationLaw& g) {
  using detail::fmt_g17;
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PureDrift>)
          return "drift:b=" + fmt_g17(v.b);
        else if constexpr (std::is_same_v<T, GaussianCompoundPoisson>)
          return "cpg:lambda=" + fmt_g17(v.lambda) + ",eta=" + fmt_g17(v.eta) +
                 ",b=" + fmt_g17(v.b);
        else
          return "stable:alpha=" + fmt_g17(v.alpha) +
                 ",scale=" + fmt_g17(v.scale);
      },
      g);
}

inline nlohmann::json sample_meta_json(const IncrementSample& s) {
  nlohmann::json j;
  j["delta"] = s.delta;
  j["n"] = s.n();
  if (s.meta) {
    j["sigma"] = s.meta->sigma;
    j["beta"] = s.meta->beta;
    j["G"] = perturbation_spec(s.meta->G);
    if (s.meta->seed) j["seed"] = *s.meta->seed;
  }
  return j;
}

/// One increment per line; a '#'-prefixed header carries delta, n, seed and
/// the true parameters.  A JSON sidecar (<path>.meta.json) mirrors them.
inline void write_increments_csv(const std::string& path,
                                 const IncrementSample& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "# levyvol-increments v1\n";
  f << "# delta=" << detail::fmt_g17(s.delta) << " n=" << s.n();
  if (s.meta) {
    if (s.meta->seed) f << " seed=" << *s.meta->seed;
    f << " sigma=" << detail::fmt_g17(s.meta->sigma)
      << " beta=" << detail::fmt_g17(s.meta->beta)
      << " G=" << perturbation_spec(s.meta->G);
  }
  f << "\nchi\n";
  for (double x : s.chi) f << detail::fmt_g17(x) << "\n";
  std::ofstream side(path + ".meta.json");
  side << sample_meta_json(s).dump(2) << "\n";
}

inline IncrementSample read_increments_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  IncrementSample s;
  std::string line;
  bool have_delta = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream ss(line.substr(1));
      std::string tok;
      SampleMeta meta;
      bool have_meta = false;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "delta") { s.delta = detail::parse_double(v); have_delta = true; }
        else if (k == "sigma") { meta.sigma = detail::parse_double(v); have_meta = true; }
        else if (k == "beta") { meta.beta = detail::parse_double(v); have_meta = true; }
        else if (k == "seed") { meta.seed = std::stoull(v); have_meta = true; }
        else if (k == "G") { meta.G = parse_perturbation(v); have_meta = true; }
      }
      if (have_meta) s.meta = meta;
      continue;
    }
    if (line == "chi") continue;
    s.chi.push_back(detail::parse_double(line));
  }
  if (!have_delta)
    throw std::runtime_error(path + ": missing '# delta=...' header");
  if (s.chi.empty()) throw std::runtime_error(path + ": no increments");
  return s;
}

}  // namespace levyvol
