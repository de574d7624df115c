#include "levyvol/levy_models.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

using namespace levyvol;

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(p * (v.size() - 1))];
}

}  // namespace

TEST_CASE("perturbation validation", "[levy_models]") {
  CHECK_THROWS_AS(validate(PerturbationLaw(GaussianCompoundPoisson{1.0, 0.0, 0.0})),
                  std::domain_error);
  CHECK_THROWS_AS(validate(PerturbationLaw(GaussianCompoundPoisson{-1.0, 1.0, 0.0})),
                  std::domain_error);
  CHECK_THROWS_AS(validate(PerturbationLaw(SymmetricStable{2.0, 1.0})),
                  std::domain_error);
  CHECK_THROWS_AS(validate(PerturbationLaw(SymmetricStable{1.0, 0.0})),
                  std::domain_error);
  CHECK_NOTHROW(validate(PerturbationLaw(PureDrift{3.0})));
}

TEST_CASE("drift correction", "[levy_models]") {
  CHECK(drift_correction(SymmetricStable{1.5, 1.0}, 1.5) == 0.0);
  CHECK(drift_correction(SymmetricStable{1.5, 1.0}, 0.5) == 0.0);
  CHECK(drift_correction(PureDrift{1.0}, 0.5) == 1.0);
  CHECK(drift_correction(GaussianCompoundPoisson{2.0, 1.0, 0.3}, 1.5) == 0.3);
  CHECK(drift_correction(GaussianCompoundPoisson{2.0, 1.0, 0.3}, 0.0) == 0.3);
}

TEST_CASE("class membership", "[levy_models]") {
  const auto cpg = class_membership(GaussianCompoundPoisson{3.0, 1.0, 0.0});
  CHECK(cpg.alpha == 0.0);
  CHECK(cpg.zeta == 3.0);
  CHECK(cpg.symmetric);
  CHECK_FALSE(class_membership(GaussianCompoundPoisson{3.0, 1.0, 0.1}).symmetric);

  const auto drift = class_membership(PureDrift{0.0});
  CHECK(drift.alpha == 0.0);
  CHECK(drift.zeta == 0.0);
  CHECK(drift.symmetric);

  // Cauchy scale 1/2 has Levy tail F([-x,x]^c) = 1/(pi x): zeta = 1/pi.
  const auto st = class_membership(SymmetricStable{1.0, 1.0});
  CHECK(st.alpha == 1.0);
  CHECK(st.symmetric);
  CHECK(st.zeta == Catch::Approx(1.0 / kPi).epsilon(1e-12));
  CHECK(class_membership(SymmetricStable{1.5, 1.0}).zeta > 0.0);
}

TEST_CASE("increments: degenerate perturbation is pure sigma W",
          "[levy_models]") {
  Rng rng(11);
  const double sigma = 1.3, delta = 0.01;
  auto s = sample_increments(sigma, GaussianCompoundPoisson{0.0, 1.0, 0.0},
                             2.0, delta, 200000, rng);
  const double m = mean_of(s.chi);
  double var = 0.0;
  for (double x : s.chi) var += (x - m) * (x - m);
  var /= (s.n() - 1);
  const double target = sigma * sigma * delta;
  CHECK(var == Catch::Approx(target).epsilon(0.02));
}

TEST_CASE("increments: second moment matches (sigma^2 + lambda eta) delta",
          "[levy_models]") {
  Rng rng(12);
  const double sigma = 1.0, lam = 1.0, eta = 0.5, delta = 0.01;
  auto s = sample_increments(sigma, GaussianCompoundPoisson{lam, eta, 0.0},
                             2.0, delta, 200000, rng);
  std::vector<double> sq(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) sq[i] = s.chi[i] * s.chi[i];
  const double m2 = mean_of(sq);
  double sd = 0.0;
  for (double x : sq) sd += (x - m2) * (x - m2);
  sd = std::sqrt(sd / (sq.size() - 1));
  const double target = (sigma * sigma + lam * eta) * delta;
  const double se = sd / std::sqrt(static_cast<double>(sq.size()));
  CAPTURE(m2, target, se);
  CHECK(std::abs(m2 - target) < 4.0 * se);
}

TEST_CASE("increments: stable perturbation stays symmetric", "[levy_models]") {
  // third moments do not exist at alpha = 1.5, so symmetry is checked on
  // quantiles rather than the empirical skewness
  Rng rng(13);
  auto s = sample_increments(1.0, SymmetricStable{1.5, 1.0}, 2.0, 0.01,
                             100000, rng);
  CHECK(std::abs(quantile(s.chi, 0.5)) < 5e-3);
  CHECK(std::abs(quantile(s.chi, 0.1) + quantile(s.chi, 0.9)) < 2e-2);
}

TEST_CASE("increments: fixed seed reproduces bit for bit", "[levy_models]") {
  auto a = sample_increments(1.0, GaussianCompoundPoisson{1.0, 0.5, 0.1}, 2.0,
                             1e-3, 5000, std::uint64_t{77});
  auto b = sample_increments(1.0, GaussianCompoundPoisson{1.0, 0.5, 0.1}, 2.0,
                             1e-3, 5000, std::uint64_t{77});
  auto c = sample_increments(1.0, GaussianCompoundPoisson{1.0, 0.5, 0.1}, 2.0,
                             1e-3, 5000, std::uint64_t{78});
  CHECK(a.chi == b.chi);
  CHECK(a.chi != c.chi);
  CHECK(a.meta->seed == 77);
}

TEST_CASE("rescaled perturbation vanishes as delta -> 0", "[levy_models]") {
  // Z_delta(alpha) = delta^{-1/beta} (Y_delta - b' delta) -> 0 in law when
  // the class index is below beta; the exceedance frequency must decay.
  const double beta = 2.0;
  const std::vector<PerturbationLaw> gs = {
      GaussianCompoundPoisson{1.0, 1.0, 0.3}, SymmetricStable{1.0, 1.0}};
  for (const auto& g : gs) {
    const double bp = drift_correction(g, class_membership(g).alpha);
    double prev = 1.1;
    for (double delta : {1e-1, 1e-2, 1e-3}) {
      Rng rng(101);
      std::size_t exceed = 0;
      const std::size_t reps = 20000;
      for (std::size_t i = 0; i < reps; ++i) {
        const double z = (sample_perturbation(g, delta, rng) - bp * delta) /
                         std::pow(delta, 1.0 / beta);
        if (std::abs(z) > 0.1) ++exceed;
      }
      const double p = static_cast<double>(exceed) / reps;
      CAPTURE(perturbation_spec(g), delta, p);
      CHECK(p < prev);
      prev = p;
    }
    CHECK(prev < 0.12);
  }
}

TEST_CASE("fourth moment matches the jump-mixture series", "[levy_models]") {
  // E|X|^4 = 3 sum_j e^{-lam d}(lam d)^j / j! (sigma^2 d + j eta)^2, j <= 10
  Rng rng(14);
  const double sigma = 1.0, lam = 2.0, eta = 0.7, delta = 0.05;
  auto s = sample_increments(sigma, GaussianCompoundPoisson{lam, eta, 0.0},
                             2.0, delta, 300000, rng);
  double expect = 0.0, pj = std::exp(-lam * delta);
  for (int j = 0; j <= 10; ++j) {
    const double v = sigma * sigma * delta + j * eta;
    expect += 3.0 * pj * v * v;
    pj *= lam * delta / (j + 1);
  }
  std::vector<double> p4(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) {
    const double x2 = s.chi[i] * s.chi[i];
    p4[i] = x2 * x2;
  }
  const double m4 = mean_of(p4);
  double sd = 0.0;
  for (double x : p4) sd += (x - m4) * (x - m4);
  sd = std::sqrt(sd / (p4.size() - 1));
  const double se = sd / std::sqrt(static_cast<double>(p4.size()));
  CAPTURE(m4, expect, se);
  CHECK(std::abs(m4 - expect) < 5.0 * se);
}

TEST_CASE("perturbation spec strings round-trip", "[levy_models]") {
  for (const char* spec :
       {"drift:b=0.5", "cpg:lambda=1,eta=0.5,b=0", "stable:alpha=1,scale=1"}) {
    const auto g = parse_perturbation(spec);
    CHECK(parse_perturbation(perturbation_spec(g)).index() == g.index());
  }
  CHECK_THROWS_AS(parse_perturbation("gauss:x=1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_perturbation("cpg:lambda=1,eta=0"), std::domain_error);
  CHECK_THROWS_AS(parse_perturbation("cpg:nope=1"), std::invalid_argument);
}

TEST_CASE("increment csv round-trips", "[levy_models]") {
  auto s = sample_increments(1.5, SymmetricStable{1.2, 0.7}, 1.8, 0.002, 257,
                             std::uint64_t{424242});
  const std::string path = "test_increments_roundtrip.csv";
  write_increments_csv(path, s);
  const auto r = read_increments_csv(path);
  CHECK(r.chi == s.chi);
  CHECK(r.delta == s.delta);
  REQUIRE(r.meta.has_value());
  CHECK(r.meta->sigma == 1.5);
  CHECK(r.meta->beta == 1.8);
  CHECK(r.meta->seed == 424242);
  CHECK(std::get<SymmetricStable>(r.meta->G).alpha == 1.2);
  // sidecar is valid json
  std::ifstream side(path + ".meta.json");
  REQUIRE(side.good());
  nlohmann::json j;
  side >> j;
  CHECK(j["n"] == 257);
  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());
}
