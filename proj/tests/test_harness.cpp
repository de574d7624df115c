#include "levyvol/harness.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace levyvol;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.sigma = 1.0;
  c.beta = 2.0;
  c.G = GaussianCompoundPoisson{1.0, 0.5, 0.0};
  c.schedule = {{4000, 1e-3}};
  c.estimator = "charfn:w=0.5,case=2";
  c.replications = 100;
  c.master_seed = 314;
  return c;
}

std::string summary_string(const ExperimentSummary& s) {
  const std::string path = "tmp_summary_test.csv";
  write_summary_csv(path, s);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  std::remove(path.c_str());
  return ss.str();
}

}  // namespace

TEST_CASE("estimator specs parse", "[harness]") {
  const auto a = parse_estimator_spec("charfn:w=1,case=2");
  CHECK(a.kind == EstimatorSpec::Kind::Charfn);
  CHECK(a.w == 1.0);
  CHECK(a.plan_case == PlanCase::SemiCase2);
  const auto b = parse_estimator_spec("charfn:w=1,case=1,delta=0.2");
  CHECK(b.plan_case == PlanCase::SemiCase1);
  CHECK(b.delta_frac == 0.2);
  const auto c = parse_estimator_spec("semi:case=2,kernel=cos:w=0.5");
  CHECK(c.kind == EstimatorSpec::Kind::Semi);
  CHECK(c.kernel == "cos:w=0.5");
  const auto d = parse_estimator_spec("param:kernel=tpow:r=2,g=3");
  CHECK(d.kind == EstimatorSpec::Kind::Param);
  CHECK(d.kernel == "tpow:r=2,g=3");
  const auto e = parse_estimator_spec("sec8:r=2,c=inf,kappa=0");
  CHECK(e.kind == EstimatorSpec::Kind::Sec8);
  CHECK(std::isinf(e.c));
  CHECK_THROWS_AS(parse_estimator_spec("mle:w=1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_estimator_spec("semi:case=2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_estimator_spec("charfn:w=1,case=3"),
                  std::invalid_argument);
}

TEST_CASE("run_estimator covers every kind", "[harness]") {
  StableLaw law(2.0);
  auto s = sample_increments(1.0, GaussianCompoundPoisson{1.0, 0.5, 0.0}, 2.0,
                             1e-3, 3000, std::uint64_t{9});
  for (const char* spec :
       {"charfn:w=1,case=2", "semi:case=2,kernel=cos:w=1",
        "param:kernel=cos:w=1", "tpow:r=2,g=3,case=2", "sec8:r=2,c=3,kappa=0"}) {
    CAPTURE(spec);
    const auto rep = run_estimator(parse_estimator_spec(spec), s, law);
    CHECK(rep.sigma_hat > 0.0);
  }
}

TEST_CASE("experiment determinism across runs and worker counts",
          "[harness]") {
  const auto cfg = small_config();
  setenv("LEVYVOL_THREADS", "1", 1);
  const auto s1 = run_experiment(cfg);
  const auto s2 = run_experiment(cfg);
  setenv("LEVYVOL_THREADS", "4", 1);
  const auto s4 = run_experiment(cfg);
  unsetenv("LEVYVOL_THREADS");
  CHECK(summary_string(s1) == summary_string(s2));
  CHECK(summary_string(s1) == summary_string(s4));
  REQUIRE(s1.replications.size() == s4.replications.size());
  for (std::size_t i = 0; i < s1.replications.size(); ++i)
    CHECK(s1.replications[i].sigma_hat == s4.replications[i].sigma_hat);
}

TEST_CASE("experiment summary is statistically sane", "[harness]") {
  const auto s = run_experiment(small_config());
  REQUIRE(s.points.size() == 1);
  const auto& p = s.points[0];
  REQUIRE(p.predicted_sd.has_value());
  CHECK(std::abs(p.mean - 1.0) < 0.05);
  CHECK(p.fallback_rate == 0.0);
  // 100 replications: sd of the sd is ~7%, allow a wide band
  CHECK(p.sd_scaled == Catch::Approx(*p.predicted_sd).epsilon(0.30));
  CHECK(std::abs(p.skewness) < 1.0);
  CHECK(std::abs(p.excess_kurtosis) < 2.0);
}

TEST_CASE("gates trip and report", "[harness]") {
  auto cfg = small_config();
  cfg.replications = 50;
  cfg.gates.sd_rel_tol = 1e-6;  // impossible
  const auto s = run_experiment(cfg);
  CHECK_FALSE(s.gates_passed);
  CHECK_FALSE(s.gate_failures.empty());
}

TEST_CASE("rate fitting", "[harness]") {
  // constant RMSE gives slope zero
  std::vector<PointSummary> pts(3);
  pts[0].n = 1000;  pts[0].rmse_trimmed = 0.1;
  pts[1].n = 10000; pts[1].rmse_trimmed = 0.1;
  pts[2].n = 100000; pts[2].rmse_trimmed = 0.1;
  CHECK(fit_rate(pts) == Catch::Approx(0.0).margin(1e-12));
  // exact power law is recovered
  for (auto& p : pts)
    p.rmse_trimmed = 2.0 * std::pow(static_cast<double>(p.n), -0.5);
  CHECK(fit_rate(pts) == Catch::Approx(-0.5).margin(1e-12));
  // errors
  pts.resize(2);
  CHECK_THROWS_AS(fit_rate(pts), std::domain_error);
  std::vector<PointSummary> narrow(3);
  narrow[0].n = 1000; narrow[1].n = 1500; narrow[2].n = 2000;
  for (auto& p : narrow) p.rmse_trimmed = 0.1;
  CHECK_THROWS_AS(fit_rate(narrow), std::domain_error);
}

TEST_CASE("experiment rate slope for the gaussian model", "[harness]") {
  ExperimentConfig c;
  c.sigma = 1.0;
  c.beta = 2.0;
  c.G = GaussianCompoundPoisson{0.0, 1.0, 0.0};
  c.schedule = {{500, 2e-3}, {2000, 5e-4}, {8000, 1.25e-4}};
  c.estimator = "charfn:w=0.5,case=2";
  c.replications = 80;
  c.master_seed = 2718;
  const auto s = run_experiment(c);
  REQUIRE(s.rate_slope.has_value());
  CHECK(*s.rate_slope == Catch::Approx(-0.5).margin(0.15));
}

TEST_CASE("config json round-trip and validation", "[harness]") {
  nlohmann::json j = {
      {"sigma", 1.0},
      {"beta", 2.0},
      {"G", "cpg:lambda=1,eta=0.5,b=0"},
      {"estimator", "charfn:w=0.5,case=2"},
      {"replications", 10},
      {"master_seed", 7},
      {"delta_exponent", 1.2},
      {"schedule", {{{"n", 1000}}, {{"n", 2000}, {"delta", 1e-4}}}},
      {"gates", {{"max_fallback_rate", 0.02}}}};
  const auto c = experiment_config_from_json(j);
  CHECK(c.schedule[0].delta ==
        Catch::Approx(std::pow(1000.0, -1.2)).epsilon(1e-12));
  CHECK(c.schedule[1].delta == 1e-4);
  REQUIRE(c.gates.max_fallback_rate.has_value());

  auto bad = c;
  bad.replications = 1;
  CHECK_THROWS_AS(validate(bad), std::domain_error);
  auto bad2 = c;
  bad2.schedule.clear();
  CHECK_THROWS_AS(validate(bad2), std::domain_error);
}

TEST_CASE("csv writers emit parseable rows", "[harness]") {
  auto cfg = small_config();
  cfg.replications = 5;
  const auto s = run_experiment(cfg);
  write_replications_csv("tmp_reps.csv", s);
  std::ifstream f("tmp_reps.csv");
  std::string header, line;
  std::getline(f, header);
  CHECK(header == "replication,n,delta,sigma_hat,fallback");
  std::size_t rows = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  std::remove("tmp_reps.csv");
}
