// levyvol command line: simulate increments, run estimators on stored
// samples, print asymptotic variances, emit the truncation regime table,
// and drive Monte Carlo experiments.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "levyvol/levyvol.hpp"

namespace {

using namespace levyvol;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(detail::parse_double(item));
  if (out.empty()) throw CLI::ValidationError("empty list");
  return out;
}

int cmd_simulate(const std::string& g_spec, double sigma, double beta,
                 std::size_t n, double delta, std::uint64_t seed,
                 const std::string& out) {
  const auto g = parse_perturbation(g_spec);
  const auto sample = sample_increments(sigma, g, beta, delta, n, seed);
  write_increments_csv(out, sample);
  std::printf("wrote %zu increments to %s\n", sample.n(), out.c_str());
  return 0;
}

int cmd_estimate(const std::string& sample_path, const std::string& est_spec,
                 std::optional<double> beta_opt, const std::string& g_spec) {
  const auto sample = read_increments_csv(sample_path);
  double beta = 0.0;
  if (beta_opt) beta = *beta_opt;
  else if (sample.meta) beta = sample.meta->beta;
  else throw CLI::ValidationError("--beta required (no sample metadata)");
  const StableLaw law(beta);
  std::optional<PerturbationLaw> g;
  if (!g_spec.empty()) g = parse_perturbation(g_spec);
  const auto rep =
      run_estimator(parse_estimator_spec(est_spec), sample, law, g);
  std::cout << to_json(rep).dump(2) << "\n";
  return 0;
}

int cmd_variance(const std::string& kernel_spec, double beta) {
  const StableLaw law(beta);
  const auto k = parse_kernel_spec(kernel_spec, law);
  const auto s2 = sigma2(k, law);
  nlohmann::json j;
  j["kernel"] = kernel_spec;
  j["beta"] = beta;
  if (s2) {
    j["sigma2"] = *s2;
    j["identified"] = true;
    if (k.cos_freq)
      j["sigma2_closed_form"] = sigma2_cos_closed(law, *k.cos_freq);
  } else {
    j["identified"] = false;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_table8(double sigma, double lambda, double eta, const std::string& rs,
               const std::string& kappas, const std::string& cs) {
  std::printf("regime,r,kappa,c,b0,b1,v0,v1,identified\n");
  for (double c : parse_list(cs)) {
    for (double r : parse_list(rs)) {
      const auto emit = [&](std::optional<double> kap) {
        const auto p = section8_profile(r, kap, c, sigma, lambda, eta);
        const char* regime =
            std::isinf(c) ? "no_truncation"
                          : (*kap == 0.0 ? "sqrt_delta"
                                         : (*kap < 0.0 ? "slow" : "fast"));
        const std::string ks = kap ? detail::fmt_g17(*kap) : "";
        const std::string cstr = std::isinf(c) ? "inf" : detail::fmt_g17(c);
        if (p)
          std::printf("%s,%s,%s,%s,%s,%s,%s,%s,1\n", regime,
                      detail::fmt_g17(r).c_str(), ks.c_str(), cstr.c_str(),
                      detail::fmt_g17(p->b0).c_str(),
                      detail::fmt_g17(p->b1).c_str(),
                      detail::fmt_g17(p->v0).c_str(),
                      detail::fmt_g17(p->v1).c_str());
        else
          std::printf("%s,%s,%s,%s,,,,,0\n", regime,
                      detail::fmt_g17(r).c_str(), ks.c_str(), cstr.c_str());
      };
      if (std::isinf(c)) {
        emit(std::nullopt);
      } else {
        for (double kap : parse_list(kappas)) emit(kap);
      }
    }
  }
  return 0;
}

int cmd_experiment(const std::string& config_path,
                   const std::string& out_dir) {
  const auto cfg = load_experiment_config(config_path);
  const auto summary = run_experiment(cfg);
  write_summary_csv(out_dir + "/summary.csv", summary);
  write_replications_csv(out_dir + "/replications.csv", summary);
  for (const auto& p : summary.points) {
    std::printf("n=%zu delta=%g mean=%.6f bias=%.3e sd=%.4f", p.n, p.delta,
                p.mean, p.bias, p.sd_scaled);
    if (p.predicted_sd) std::printf(" predicted=%.4f", *p.predicted_sd);
    std::printf(" fallback=%.3f\n", p.fallback_rate);
  }
  if (summary.rate_slope)
    std::printf("rate slope (log RMSE vs log n): %.4f\n", *summary.rate_slope);
  if (!summary.gates_passed) {
    for (const auto& g : summary.gate_failures)
      std::fprintf(stderr, "gate failed: %s\n", g.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volatility estimators for discretely sampled Levy processes"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "draw and store increments");
  std::string g_spec = "drift:b=0";
  double sigma = 1.0, beta = 2.0, delta = 1e-3;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out = "sample.csv";
  sim->add_option("--G", g_spec,
                  "perturbation spec: drift:b=.. | cpg:lambda=..,eta=..,b=.. |"
                  " stable:alpha=..,scale=..");
  sim->add_option("--sigma", sigma)->check(CLI::PositiveNumber);
  sim->add_option("--beta", beta)->check(CLI::Range(0.3, 2.0));
  sim->add_option("--n", n)->check(CLI::PositiveNumber);
  sim->add_option("--delta", delta)->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed);
  sim->add_option("--out", out);

  auto* est = app.add_subcommand("estimate", "run an estimator on a sample");
  std::string sample_path, est_spec = "charfn:w=1,case=2", est_g;
  std::optional<double> est_beta;
  est->add_option("--sample", sample_path)->required();
  est->add_option("--estimator", est_spec,
                  "charfn:w=..,case=1|2[,delta=..] | semi:case=..,kernel=... |"
                  " param:kernel=... | tpow:r=..,g=..,case=.. |"
                  " sec8:r=..,c=..,kappa=..");
  est->add_option("--beta", est_beta, "override the sample's beta");
  est->add_option("--G", est_g, "perturbation law for param estimators");

  auto* var = app.add_subcommand("variance",
                                 "asymptotic variance of a kernel");
  std::string kernel_spec = "cos:w=1";
  double var_beta = 2.0;
  var->add_option("--kernel", kernel_spec,
                  "cos:w=.. | pow:r=.. | tpow:r=..,g=.. | opt");
  var->add_option("--beta", var_beta)->check(CLI::Range(0.3, 2.0));

  auto* t8 = app.add_subcommand(
      "table8", "bias/variance regime table of the truncated power "
                "estimators under the gaussian jump model");
  double t_sigma = 1.0, t_lambda = 1.0, t_eta = 0.5;
  std::string t_r = "1", t_kappa = "0", t_c = "inf";
  t8->add_option("--sigma", t_sigma)->check(CLI::PositiveNumber);
  t8->add_option("--lambda", t_lambda)->check(CLI::NonNegativeNumber);
  t8->add_option("--eta", t_eta)->check(CLI::PositiveNumber);
  t8->add_option("--r", t_r, "comma list of powers in (0,2]");
  t8->add_option("--kappa", t_kappa, "comma list of truncation exponents");
  t8->add_option("--c", t_c, "comma list of truncation constants (inf ok)");

  auto* exp = app.add_subcommand("experiment", "run a Monte Carlo experiment");
  std::string config_path, out_dir = ".";
  exp->add_option("--config", config_path)->required();
  exp->add_option("--out", out_dir, "directory for summary/replication csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(g_spec, sigma, beta, n, delta, seed, out);
    if (est->parsed())
      return cmd_estimate(sample_path, est_spec, est_beta, est_g);
    if (var->parsed()) return cmd_variance(kernel_spec, var_beta);
    if (t8->parsed())
      return cmd_table8(t_sigma, t_lambda, t_eta, t_r, t_kappa, t_c);
    if (exp->parsed()) return cmd_experiment(config_path, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
