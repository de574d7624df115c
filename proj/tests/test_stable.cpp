#include "levyvol/stable.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "levyvol/quadrature.hpp"
#include "levyvol/rng.hpp"

using namespace levyvol;

namespace {

// Closed-form oracles for beta = 1: W_1 is Cauchy with scale 1/2.
double cauchy_half_density(double w) {
  return 0.5 / (kPi * (0.25 + w * w));
}
double cauchy_half_density_deriv(double w) {
  const double d = 0.25 + w * w;
  return -w / (kPi * d * d);
}
double cauchy_half_tail(double a) {  // P(|W| > a)
  return 1.0 - 2.0 / kPi * std::atan(2.0 * a);
}

double normal_density(double w) {
  return std::exp(-0.5 * w * w) / std::sqrt(2.0 * kPi);
}

}  // namespace

TEST_CASE("construction rejects unsupported indices", "[stable]") {
  CHECK_THROWS_AS(StableLaw(0.0), std::domain_error);
  CHECK_THROWS_AS(StableLaw(-1.0), std::domain_error);
  CHECK_THROWS_AS(StableLaw(2.5), std::domain_error);
  CHECK_THROWS_AS(StableLaw(0.29), std::domain_error);
  CHECK_NOTHROW(StableLaw(0.3));
  CHECK_NOTHROW(StableLaw(2.0));
}

TEST_CASE("density closed-form anchors", "[stable]") {
  StableLaw g(2.0), c(1.0);
  CHECK(stable_density(g, 0.0) == Catch::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(stable_density(c, 0.0) == Catch::Approx(2.0 / kPi).margin(1e-10));
  CHECK_THROWS_AS(stable_density(g, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(stable_density(c, INFINITY), std::domain_error);
}

TEST_CASE("density matches the Cauchy oracle to 1e-10 up to |w| = 50",
          "[stable]") {
  StableLaw law(1.0);
  for (double w : {0.0, 1e-4, 0.03, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0,
                   50.0}) {
    CAPTURE(w);
    CHECK(stable_density(law, w) ==
          Catch::Approx(cauchy_half_density(w)).margin(1e-10));
    CHECK(stable_density_derivative(law, w) ==
          Catch::Approx(cauchy_half_density_deriv(w)).margin(1e-10));
  }
}

TEST_CASE("density is even and positive on the grid", "[stable]") {
  for (double beta : {0.75, 1.0, 1.5, 2.0}) {
    StableLaw law(beta);
    for (double w = 0.0; w <= 30.0; w += 1.5) {
      CAPTURE(beta, w);
      const double hp = stable_density(law, w);
      const double hm = stable_density(law, -w);
      CHECK(hp > 0.0);
      CHECK(hp == Catch::Approx(hm).epsilon(1e-12));
    }
  }
}

TEST_CASE("density integrates to one", "[stable]") {
  for (double beta : {0.75, 1.0, 1.5, 2.0}) {
    StableLaw law(beta);
    const auto f = [&](double w) { return stable_density(law, w); };
    const double total = quad::integrate_real_line(f, 1e-10).value;
    CAPTURE(beta);
    CHECK(total == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("tail envelope h (1 + |w|^{1+beta}) stays bounded for beta < 2",
          "[stable]") {
  for (double beta : {0.75, 1.0, 1.5}) {
    StableLaw law(beta);
    double cmax = 0.0, clast = 0.0;
    for (double w = 0.0; w <= 30.0; w += 0.25) {
      const double e =
          stable_density(law, w) * (1.0 + std::pow(std::abs(w), 1.0 + beta));
      cmax = std::max(cmax, e);
      clast = e;
    }
    CAPTURE(beta, cmax);
    CHECK(cmax < 10.0);
    // far-tail values settle near the Levy-tail constant, well below the max
    CHECK(clast <= cmax * (1.0 + 1e-9));
  }
}

TEST_CASE("derivative anchors and sign convention", "[stable]") {
  StableLaw g(2.0);
  CHECK(stable_density_derivative(g, 1.0) ==
        Catch::Approx(-normal_density(1.0)).epsilon(1e-13));
  for (double beta : {0.75, 1.0, 1.5, 2.0}) {
    StableLaw law(beta);
    CHECK(stable_density_derivative(law, 0.0) == 0.0);
    CHECK(stable_density_derivative(law, 2.0) < 0.0);
    CHECK(stable_density_derivative(law, -2.0) > 0.0);
  }
  // central finite-difference oracle at beta = 1.5
  StableLaw law(1.5);
  const double h = 1e-5;
  const double fd =
      (stable_density(law, 1.0 + h) - stable_density(law, 1.0 - h)) / (2 * h);
  CHECK(stable_density_derivative(law, 1.0) == Catch::Approx(fd).margin(1e-8));
}

TEST_CASE("score functions: gaussian identities hold exactly", "[stable]") {
  StableLaw g(2.0);
  for (double w : {-3.0, -1.0, 0.0, 0.7, 2.5}) {
    const auto s = score_functions(g, w);
    CHECK(s.bar == -w * w);
    CHECK(s.check == Catch::Approx((1.0 - w * w) * normal_density(w)).epsilon(1e-14));
    CHECK(s.tilde >= 0.0);
  }
}

TEST_CASE("integral of the check score vanishes", "[stable]") {
  // check = (w h)' pointwise, so int_{-A}^{A} check = 2 A h(A), which decays
  // to zero as A grows; the identity pins the quadrature, the decay pins the
  // integration-by-parts claim int check = 0.
  for (double beta : {1.0, 1.5, 2.0}) {
    StableLaw law(beta);
    const auto f = [&](double w) { return score_functions(law, w).check; };
    const double a = 20.0;
    const double finite_part = quad::integrate_finite(f, -a, a, 1e-11).value;
    CAPTURE(beta);
    CHECK(finite_part ==
          Catch::Approx(2.0 * a * stable_density(law, a)).margin(1e-8));
    CHECK(std::abs(2.0 * a * stable_density(law, a)) < 0.05);
  }
}

TEST_CASE("bar score is bounded for beta < 2", "[stable]") {
  StableLaw law(1.5);
  for (double w = 0.25; w <= 30.0; w += 0.25)
    CHECK(std::abs(score_functions(law, w).bar) < 10.0);
}

TEST_CASE("fisher constant", "[stable]") {
  CHECK(fisher_info(StableLaw(2.0)) == 2.0);
  CHECK(fisher_info(StableLaw(1.0)) == Catch::Approx(0.5).margin(1e-6));
  for (double beta : {0.75, 1.2, 1.8}) {
    CAPTURE(beta);
    CHECK(fisher_info(StableLaw(beta)) > 0.0);
  }
}

TEST_CASE("tail function anchors", "[stable]") {
  StableLaw g(2.0), c(1.0);
  CHECK(tail_psi(g, 1.0) ==
        Catch::Approx(std::erfc(1.0 / std::sqrt(2.0))).epsilon(1e-12));
  CHECK(tail_psi(g, 1.0) == Catch::Approx(0.31731050786291404).epsilon(1e-10));
  CHECK(tail_psi(c, 2.0) == Catch::Approx(0.5).margin(1e-10));
  CHECK_THROWS_AS(tail_psi(g, 0.0), std::domain_error);
  CHECK_THROWS_AS(tail_psi(c, -1.0), std::domain_error);
}

TEST_CASE("tail function vs the Cauchy oracle and monotonicity", "[stable]") {
  StableLaw c(1.0);
  double prev = 0.0;
  for (double u : {1e-4, 1e-2, 0.3, 1.0, 3.0, 1e2, 1e4}) {
    CAPTURE(u);
    const double p = tail_psi(c, u);
    CHECK(p == Catch::Approx(cauchy_half_tail(1.0 / u)).margin(1e-10));
    CHECK(p > prev);
    prev = p;
  }
  CHECK(tail_psi(c, 1e6) > 0.999);
  CHECK(tail_psi(c, 1e-5) < 1e-3);
}

TEST_CASE("tail inverse roundtrips", "[stable]") {
  for (double beta : {1.0, 1.5, 2.0}) {
    StableLaw law(beta);
    for (double u : {0.5, 1.0, 3.0}) {
      CAPTURE(beta, u);
      const double v = tail_psi(law, u);
      CHECK(tail_psi_inverse(law, v) == Catch::Approx(u).epsilon(1e-8));
      CHECK(tail_psi(law, tail_psi_inverse(law, v)) ==
            Catch::Approx(v).margin(1e-9));
    }
  }
  StableLaw g(2.0);
  CHECK(tail_psi_inverse(g, 0.31731050786291404) ==
        Catch::Approx(1.0).margin(1e-6));
  CHECK(tail_psi_inverse(g, 0.2) < tail_psi_inverse(g, 0.4));
  CHECK_THROWS_AS(tail_psi_inverse(g, 0.0), std::domain_error);
  CHECK_THROWS_AS(tail_psi_inverse(g, 1.0), std::domain_error);
}

TEST_CASE("sampling moments", "[stable]") {
  Rng rng(20260810);
  StableLaw g(2.0);
  auto draws = sample_stable(g, rng, 100000);
  double m = 0, s2 = 0;
  for (double x : draws) m += x;
  m /= draws.size();
  for (double x : draws) s2 += (x - m) * (x - m);
  s2 /= (draws.size() - 1);
  CHECK(s2 == Catch::Approx(1.0).margin(0.02));

  StableLaw c(1.0);
  auto cd = sample_stable(c, rng, 100000);
  std::sort(cd.begin(), cd.end());
  CHECK(std::abs(cd[cd.size() / 2]) < 0.02);
}

TEST_CASE("sampled tail frequencies match the tail function", "[stable]") {
  Rng rng(7);
  StableLaw law(1.5);
  const std::size_t n = 100000;
  auto draws = sample_stable(law, rng, n);
  for (double u : {0.5, 1.0, 2.0}) {
    const double p = tail_psi(law, u);
    std::size_t cnt = 0;
    for (double x : draws)
      if (std::abs(x) > 1.0 / u) ++cnt;
    const double phat = static_cast<double>(cnt) / n;
    const double se = std::sqrt(p * (1.0 - p) / n);
    CAPTURE(u, p, phat);
    CHECK(std::abs(phat - p) < 3.0 * se);
  }
}

TEST_CASE("Kolmogorov-Smirnov: sampler vs integrated density", "[stable]") {
  const std::size_t n = 100000;
  const double crit = 1.5 * 1.6276 / std::sqrt(static_cast<double>(n));  // 1%
  for (double beta : {0.75, 1.0, 1.5, 2.0}) {
    Rng rng(42 + static_cast<std::uint64_t>(beta * 100));
    StableLaw law(beta);
    auto draws = sample_stable(law, rng, n);
    std::sort(draws.begin(), draws.end());
    // symmetric law: F(x) = (1 + P(|W| <= x)) / 2 for x >= 0
    const auto cdf = [&](double x) {
      const double inner =
          x == 0.0 ? 0.0
                   : (law.is_gaussian()
                          ? 1.0 - std::erfc(std::abs(x) / std::sqrt(2.0))
                          : 1.0 - tail_psi(law, 1.0 / std::abs(x)));
      return x >= 0.0 ? 0.5 * (1.0 + inner) : 0.5 * (1.0 - inner);
    };
    double ks = 0.0;
    for (std::size_t i = 0; i < n; i += 97) {  // thinned scan keeps this fast
      const double fx = cdf(draws[i]);
      const double lo = static_cast<double>(i) / n;
      const double hi = static_cast<double>(i + 1) / n;
      ks = std::max(ks, std::max(std::abs(fx - lo), std::abs(fx - hi)));
    }
    CAPTURE(beta, ks, crit);
    CHECK(ks < crit);
  }
}

TEST_CASE("sampling count precondition", "[stable]") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_stable(StableLaw(2.0), rng, 0), std::domain_error);
}

TEST_CASE("cached table matches direct evaluation off the nodes", "[stable]") {
  for (double beta : {0.75, 1.0, 1.5}) {
    StableLaw direct(beta);   // never warmed
    StableLaw cached(beta);
    cached.warm_cache();
    REQUIRE(cached.table() != nullptr);
    for (double w = 0.013; w < 63.0; w *= 1.7) {
      CAPTURE(beta, w);
      CHECK(stable_density(cached, w) ==
            Catch::Approx(stable_density(direct, w)).margin(1e-11));
      CHECK(stable_density_derivative(cached, w) ==
            Catch::Approx(stable_density_derivative(direct, w)).margin(1e-11));
    }
    // copies share the table
    StableLaw copy = cached;
    CHECK(copy.table() == cached.table());
  }
}
