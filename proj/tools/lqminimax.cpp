// Command-line front end: simulate, check-design, fit-rate, pack, rates, counterexample.

#include <cmath>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lqminimax/ballgeom.hpp"
#include "lqminimax/bounds.hpp"
#include "lqminimax/conditions.hpp"
#include "lqminimax/estimators.hpp"
#include "lqminimax/harness.hpp"
#include "lqminimax/io.hpp"
#include "lqminimax/linmodel.hpp"

using namespace lqminimax;
using io::Json;

namespace {

void emit(const Json& j, const std::string& out_path, const std::string& kind, const io::FileMeta& meta) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    io::persist_json(j, kind, out_path, meta);
  }
}

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParameterError("expected key=value in --params, got '" + item + "'");
    try {
      out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ParameterError("non-numeric value in --params entry '" + item + "'");
    }
  }
  return out;
}

BallSpec ball_from_flags(double q, double radius, Index s) {
  if (q == 0.0) return BallSpec::hard(s);
  BallSpec b = BallSpec::soft(q, radius);
  b.validate();
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse linear regression over l_q balls: estimators, design diagnostics, rates and experiments"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate one instance, run an estimator and report the losses");
  Index sim_n = 100, sim_d = 32, sim_s = 4;
  double sim_q = 0.0, sim_radius = 1.0, sim_sigma = 1.0, sim_mag = 1.0, sim_lambda = 0.0, sim_est_radius = 0.0;
  std::uint64_t sim_seed = 0;
  std::string sim_est = "l0", sim_design = "standard_gaussian", sim_out;
  sim->add_option("--n", sim_n, "Number of observations");
  sim->add_option("--d", sim_d, "Dimension");
  sim->add_option("--q", sim_q, "Ball exponent (0 for hard sparsity)");
  sim->add_option("--s", sim_s, "Sparsity (q = 0) and l0 estimator level");
  sim->add_option("--ball-radius", sim_radius, "R_q for q > 0");
  sim->add_option("--sigma", sim_sigma, "Noise standard deviation");
  sim->add_option("--magnitude", sim_mag, "Size of the nonzero entries of beta*");
  sim->add_option("--estimator", sim_est, "l0 | l1 | lq | lasso")->check(CLI::IsMember({"l0", "l1", "lq", "lasso"}));
  sim->add_option("--radius", sim_est_radius, "Constraint radius for l1/lq (defaults to the ball radius)");
  sim->add_option("--lambda", sim_lambda, "Lasso penalty");
  sim->add_option("--design", sim_design, "standard_gaussian | identity")
      ->check(CLI::IsMember({"standard_gaussian", "identity"}));
  sim->add_option("--seed", sim_seed, "Root seed");
  sim->add_option("--out", sim_out, "Write JSON here instead of stdout");

  // check-design
  auto* chk = app.add_subcommand("check-design", "Measure design assumptions; exit 0 iff the required ones hold");
  std::string chk_path, chk_mode = "sampled", chk_require = "kappa_l,re,kernel_trivial", chk_out;
  Index chk_s = 1, chk_samples = 2000;
  double chk_c0 = 1.0, chk_q = 0.0, chk_radius = 1.0, chk_fl = 0.0;
  std::uint64_t chk_seed = 0;
  unsigned chk_workers = 1;
  chk->add_option("--design", chk_path, "Design matrix file (JSON rows or CSV)")->required();
  chk->add_option("--s", chk_s, "Sparsity level");
  chk->add_option("--c0", chk_c0, "RE cone constant");
  chk->add_option("--re-mode", chk_mode, "exact_tiny | sampled")->check(CLI::IsMember({"exact_tiny", "sampled"}));
  chk->add_option("--samples", chk_samples, "Sampled directions for RE and kernel diameter");
  chk->add_option("--q", chk_q, "Ball exponent for the kernel diameter (0: hard)");
  chk->add_option("--radius", chk_radius, "Ball radius for q > 0");
  chk->add_option("--f-l", chk_fl, "Value of the curvature residual f_l (default zero)");
  chk->add_option("--require", chk_require, "Comma list from kappa_l, re, kernel_trivial, ident");
  chk->add_option("--seed", chk_seed, "Seed for sampled quantities");
  chk->add_option("--workers", chk_workers, "Threads for support enumeration");
  chk->add_option("--out", chk_out, "Write JSON here instead of stdout");

  // fit-rate
  auto* fit = app.add_subcommand("fit-rate", "Run an experiment config and fit the log-log rate");
  std::string fit_config, fit_records, fit_format = "csv", fit_loss = "l2", fit_pred = "n", fit_svg, fit_out;
  std::uint64_t fit_seed = 0;
  bool fit_seed_set = false;
  fit->add_option("--config", fit_config, "Experiment config (JSON)")->required();
  fit->add_option("--records", fit_records, "Write trial records here");
  fit->add_option("--format", fit_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  fit->add_option("--loss", fit_loss, "l2 | pred | other configured loss");
  fit->add_option("--predictor", fit_pred, "n | s_logd_over_n | rq_logd_n_pow");
  fit->add_option("--svg", fit_svg, "Write a log-log plot here");
  fit->add_option("--out", fit_out, "Write the fit JSON here instead of stdout");
  auto* seed_opt = fit->add_option("--seed", fit_seed, "Override the config seed_root");

  // pack
  auto* pack = app.add_subcommand("pack", "Build a packing and write it as CSV with a JSON sidecar");
  std::string pack_kind = "hamming", pack_out;
  Index pack_d = 8, pack_s = 2, pack_grid = 9;
  double pack_delta = 0.5, pack_q = 1.0, pack_radius = 1.0, pack_scale = 0.0;
  std::uint64_t pack_seed = 0;
  std::size_t pack_max = 100000;
  pack->add_option("--kind", pack_kind, "hamming | greedy")->check(CLI::IsMember({"hamming", "greedy"}));
  pack->add_option("--d", pack_d, "Dimension");
  pack->add_option("--s", pack_s, "Sparsity (hamming, even)");
  pack->add_option("--delta-n", pack_scale, "Rescale the hamming packing to this delta_n (0: keep ternary)");
  pack->add_option("--delta", pack_delta, "Separation for greedy packing (l2)");
  pack->add_option("--q", pack_q, "Ball exponent for greedy packing");
  pack->add_option("--radius", pack_radius, "Ball radius for greedy packing");
  pack->add_option("--grid", pack_grid, "Grid points per axis for greedy packing");
  pack->add_option("--max-points", pack_max, "Cap on greedy packing size");
  pack->add_option("--seed", pack_seed, "Shuffle seed for greedy packing");
  pack->add_option("--out", pack_out, "CSV output path (sidecar at <path>.json)");

  // rates
  auto* rates = app.add_subcommand("rates", "Evaluate a rate formula");
  std::string rate_theorem, rate_params;
  bool rate_defaults = false;
  rates->add_option("--theorem", rate_theorem, "T1a T1b T2a T2b_plain T2b_sharp T3a T3b T4a T4b Cor1")->required();
  rates->add_option("--params", rate_params, "Comma list key=value (n,d,q,Rq,s,sigma,kappa_c,kappa_u,kappa_l,p,diam,tau,c)");
  rates->add_flag("--default-constants", rate_defaults, "Use 1 for constants that have no numeric value");

  // counterexample
  auto* cex = app.add_subcommand("counterexample", "Run the 2 x 3 design where l0 recovers and l1 does not");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) {
      const BallSpec ball = ball_from_flags(sim_q, sim_radius, sim_s);
      linmodel::DesignSpec ds = sim_design == "identity" ? linmodel::DesignSpec::identity_sequence(sim_n)
                                                         : linmodel::DesignSpec::standard_gaussian(sim_n, sim_d, sim_seed);
      ds.seed = sim_seed;
      const Matrix X = linmodel::generate_design(ds);
      const Vector beta = linmodel::generate_sparse_beta(ball, X.cols(), linmodel::BetaPattern::random_support(),
                                                         sim_mag, sim_seed);
      const auto inst = linmodel::simulate(X, beta, sim_sigma, sim_seed, ball);
      harness::EstimatorSpec spec;
      spec.kind = harness::parse_estimator(sim_est);
      spec.s = sim_s;
      spec.radius = sim_est_radius;
      spec.lambda = sim_lambda;
      const auto est = harness::run_estimator(spec, ball, inst);
      const auto check = estimators::check_basic_inequality(inst, est);
      Json out = {{"instance", io::to_json(inst)},
                  {"estimate", io::to_json(est)},
                  {"loss_l2", linmodel::loss(linmodel::LossSpec::lp(2.0), inst.X, est.beta_hat, inst.beta_star)},
                  {"loss_pred", linmodel::loss(linmodel::LossSpec::prediction(), inst.X, est.beta_hat, inst.beta_star)},
                  {"objective_ok", check.objective_ok},
                  {"basic_inequality_ok", check.eqn_basic_ok}};
      emit(out, sim_out, "simulate", {"none", sim_seed});
      return 0;
    }
    if (*chk) {
      const Matrix X = io::load_design(chk_path);
      conditions::DiagnosticsOptions opts;
      opts.s = chk_s;
      opts.c0 = chk_c0;
      opts.ball = chk_q == 0.0 ? BallSpec::hard(chk_s) : BallSpec::soft(chk_q, chk_radius);
      opts.re_mode = chk_mode == "exact_tiny" ? conditions::REMode::exact_tiny()
                                              : conditions::REMode::sampled(chk_samples, chk_seed);
      opts.kernel = {chk_samples, chk_seed};
      opts.workers = chk_workers;
      conditions::DesignDiagnostics diag = conditions::diagnose(X, opts);
      if (chk_fl != 0.0) diag.f_l = {"constant", {{"value", chk_fl}}};
      Json out = io::to_json(diag);
      bool ok = true;
      Json checks = Json::object();
      std::stringstream ss(chk_require);
      std::string item;
      while (std::getline(ss, item, ',')) {
        bool holds;
        if (item == "kappa_l") holds = diag.kappa_l > 0.0;
        else if (item == "re") holds = diag.re.value > 0.0;
        else if (item == "kernel_trivial") holds = diag.kernel_trivial;
        else if (item == "ident") holds = diag.kappa_l > 0.0 && conditions::ident_consistency(diag.kappa_l, chk_fl, diag.diam2_estimate);
        else throw ParameterError("unknown requirement '" + item + "'");
        checks[item] = holds;
        ok = ok && holds;
      }
      out["required"] = checks;
      out["all_hold"] = ok;
      emit(out, chk_out, "design_diagnostics", {"none", chk_seed});
      return ok ? 0 : 1;
    }
    if (*fit) {
      harness::ExperimentConfig config = io::config_from_json(Json::parse(io::read_text(fit_config)));
      fit_seed_set = seed_opt->count() > 0;
      if (fit_seed_set) config.seed_root = fit_seed;
      const auto result = harness::run_risk_experiment(config);
      const io::FileMeta meta{result.config_hash, result.seed_root};
      if (!fit_records.empty()) io::persist_records(result.records, fit_records, io::parse_format(fit_format), meta);
      const auto rate = harness::fit_rate_slope(result.records, fit_loss, harness::parse_predictor(fit_pred), config.ball);
      if (!fit_svg.empty()) io::write_fit_svg(rate, fit_svg);
      Json out = io::to_json(rate);
      Json excluded = Json::array();
      for (const auto& [n, d] : result.excluded_cells) excluded.push_back({{"n", n}, {"d", d}});
      out["excluded_cells"] = excluded;
      emit(out, fit_out, "rate_fit", meta);
      return 0;
    }
    if (*pack) {
      ballgeom::PackingResult result;
      if (pack_kind == "hamming") {
        result = ballgeom::hamming_packing(pack_d, pack_s);
        if (pack_scale > 0.0) result = ballgeom::rescale_hypercube_packing(result, pack_scale, pack_s);
      } else {
        const BallSpec ball = pack_q == 0.0 ? BallSpec::hard(pack_s) : BallSpec::soft(pack_q, pack_radius);
        result = ballgeom::greedy_pack(ballgeom::grid_sampler(ball, pack_d, pack_grid, pack_seed), pack_delta,
                                       ballgeom::Metric::kL2, pack_max);
      }
      const io::FileMeta meta{"none", pack_seed};
      if (pack_out.empty()) {
        std::cout << io::to_json(result).dump(2) << "\n";
      } else {
        io::persist_packing(result, pack_out, meta);
        Json summary = io::to_json(result);
        summary.erase("points");
        std::cout << summary.dump(2) << "\n";
      }
      return 0;
    }
    if (*rates) {
      auto query = bounds::RateQuery::from_params(bounds::parse_theorem(rate_theorem), parse_params(rate_params));
      query.use_default_constants = rate_defaults;
      const auto value = bounds::evaluate_rate(query);
      const Json out = {{"theorem", rate_theorem},
                        {"value", value.value},
                        {"formula", value.formula},
                        {"constants_used", value.constants_used}};
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*cex) {
      const auto report = harness::counterexample_scenario();
      std::cout << io::to_json(report).dump(2) << "\n";
      return report.all_ok() ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
