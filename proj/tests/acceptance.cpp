// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "lqminimax/ballgeom.hpp"
#include "lqminimax/bounds.hpp"
#include "lqminimax/conditions.hpp"
#include "lqminimax/estimators.hpp"
#include "lqminimax/harness.hpp"
#include "lqminimax/linmodel.hpp"
#include "lqminimax/random.hpp"

using namespace lqminimax;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared by criteria 2 and 4.
harness::ExperimentResult& hard_sparsity_run() {
  static harness::ExperimentResult result = [] {
    harness::ExperimentConfig c;
    c.ball = BallSpec::hard(4);
    c.sigma = 1.0;
    c.n_grid = {100, 200, 400, 800, 1600};
    c.d_rule.d = 32;
    c.trials_per_cell = 50;
    c.estimator.kind = harness::EstimatorKind::kL0;
    c.seed_root = 2024;
    return harness::run_risk_experiment(c);
  }();
  return result;
}

Outcome counterexample() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = harness::counterexample_scenario();
  const double secs = seconds_since(t0);
  Vector want(3);
  want << 0.0, -1.0 / 3.0, -1.0 / 3.0;
  const double interp_err = (rep.l1_interpolant - want).cwiseAbs().maxCoeff();
  const bool ok = rep.all_ok() && rep.l0_error <= 1e-10 && interp_err <= 1e-6 &&
                  std::abs(rep.l1_interpolant_norm - 2.0 / 3.0) <= 1e-6 && secs < 1.0;
  return {ok, fmt("l0 err %.2e, interpolant err %.2e, norm %.9f, %.3f s", rep.l0_error, interp_err,
                  rep.l1_interpolant_norm, secs)};
}

Outcome fit_outcome(const harness::RateFitResult& f, double lo, double hi, double min_r2) {
  const bool ok = f.slope >= lo && f.slope <= hi && f.r_squared >= min_r2;
  return {ok, fmt("slope %.4f in [%.2f, %.2f], r2 %.4f", f.slope, lo, hi, f.r_squared)};
}

Outcome hard_l2_rate() {
  const auto& r = hard_sparsity_run();
  const auto f = harness::fit_rate_slope(r.records, "l2", harness::Predictor::kN, BallSpec::hard(4));
  auto out = fit_outcome(f, -1.15, -0.85, 0.95);
  out.detail += fmt(", %.0f records", static_cast<double>(r.records.size()));
  return out;
}

Outcome soft_l2_rate() {
  harness::ExperimentConfig c;
  c.ball = BallSpec::soft(1.0, 4.0);
  c.sigma = 1.0;
  c.n_grid = {100, 200, 400, 800, 1600};
  c.d_rule.d = 512;
  c.trials_per_cell = 50;
  c.estimator.kind = harness::EstimatorKind::kL1;
  c.estimator.rel_tol = 1e-7;
  c.beta_scale = {harness::BetaScale::Kind::kNoiseLevel, 0.25};
  c.seed_root = 2024;
  const auto r = harness::run_risk_experiment(c);
  Index certified = 0;
  for (const auto& rec : r.records) certified += rec.objective_ok;
  const auto f = harness::fit_rate_slope(r.records, "l2", harness::Predictor::kN, c.ball);
  auto out = fit_outcome(f, -0.65, -0.35, 0.9);
  out.detail += fmt(", d=512, objective checks %.0f/%.0f", static_cast<double>(certified), static_cast<double>(r.records.size()));
  return out;
}

Outcome prediction_rate() {
  const auto f = harness::fit_rate_slope(hard_sparsity_run().records, "pred", harness::Predictor::kN, BallSpec::hard(4));
  return fit_outcome(f, -1.15, -0.85, 0.0);
}

Outcome sequence_model() {
  harness::SequenceModelOptions opt;
  opt.trials = 100;
  opt.seed_root = 7;
  const auto f = harness::corollary1_experiment({256, 512, 1024, 2048}, 1.0, BallSpec::hard(5), opt);
  return {std::abs(f.slope - 1.0) <= 0.2, fmt("slope %.4f vs 1, r2 %.4f", f.slope, f.r_squared)};
}

Outcome hamming() {
  Index configs = 0, pairs = 0;
  bool ok = true;
  for (Index s : {2, 4})
    for (Index d = s + 1; d <= 12; ++d) {
      const auto pack = ballgeom::hamming_packing(d, s);
      ok &= static_cast<double>(pack.size()) >= ballgeom::hamming_packing_bound(d, s) - 1e-9;
      const double delta_n = 0.37;
      const auto scaled = ballgeom::rescale_hypercube_packing(pack, delta_n, s);
      for (std::size_t i = 0; i < pack.size(); ++i)
        for (std::size_t j = i + 1; j < pack.size(); ++j) {
          Index ham = 0;
          for (Index k = 0; k < d; ++k) ham += pack.points[i](k) != pack.points[j](k);
          ok &= 2 * ham >= s;
          const double dist2 = (scaled.points[i] - scaled.points[j]).squaredNorm();
          ok &= dist2 >= delta_n * delta_n * (1 - 1e-12) && dist2 <= 8 * delta_n * delta_n * (1 + 1e-12);
          ++pairs;
        }
      ++configs;
    }
  return {ok, fmt("%.0f (d, s) configurations, %.0f pairs checked", static_cast<double>(configs), static_cast<double>(pairs))};
}

Outcome truncation() {
  Rng rng(derive_seed(11, {7}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 40);
  Index violations = 0, draws = 0;
  for (double q : {0.25, 0.5, 0.75, 1.0})
    for (int i = 0; i < 10000; ++i) {
      const double radius = std::exp(4.0 * unif(rng) - 2.0);
      const double tau = std::exp(6.0 * unif(rng) - 3.0);
      Vector theta = gaussian_vector(dim(rng), rng);
      theta = theta.cwiseProduct(gaussian_vector(theta.size(), rng).cwiseAbs2());  // heavier spread of magnitudes
      if (theta.cwiseAbs().maxCoeff() == 0.0) continue;
      theta = ballgeom::rescale_to_ball(theta, BallSpec::soft(q, 2.0 * radius * unif(rng)));
      violations += !ballgeom::truncation_inequality(theta, radius, q, tau).holds;
      ++draws;
    }
  return {violations == 0, fmt("%.0f violations in %.0f draws", static_cast<double>(violations), static_cast<double>(draws))};
}

Outcome prop1() {
  const Index n = 200, d = 400;
  Matrix cov = Matrix::Identity(d, d);
  cov(0, 0) = 4.0;
  Index lower = 0, upper = 0, checks = 0;
  double worst_l = INFINITY, worst_u = INFINITY;
  for (const auto& spec : {linmodel::DesignSpec::standard_gaussian(n, d, 31),
                           linmodel::DesignSpec::correlated_gaussian(n, cov, 32)}) {
    const auto rep = conditions::verify_prop1(spec, 10, 1000, 33);
    lower += rep.lower_violations;
    upper += rep.upper_violations;
    checks += rep.checks;
    worst_l = std::min(worst_l, rep.worst_lower_margin);
    worst_u = std::min(worst_u, rep.worst_upper_margin);
  }
  return {lower == 0 && upper == 0,
          fmt("%.0f checks, violations lower %.0f upper %.0f, min margin %.3f", static_cast<double>(checks),
              static_cast<double>(lower), static_cast<double>(upper), std::min(worst_l, worst_u))};
}

Outcome chi_square() {
  bool ok = true;
  std::string detail;
  const int draws = 100000;
  auto within = [&](int hits, double bound) {
    const double se = std::sqrt(std::max(bound * (1 - bound), 0.0) / draws);
    return hits / double(draws) <= bound + 3 * se;
  };
  for (auto [m, x] : {std::pair{10.0, 1.0}, {50.0, 2.0}, {20.0, 1.0}}) {
    const auto t = bounds::chi_square_tails(m, x);
    Rng rng(derive_seed(5, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(x)}));
    std::chi_squared_distribution<double> chi(m);
    int up = 0, low = 0, big = 0;
    for (int i = 0; i < draws; ++i) {
      const double z = chi(rng) - m;
      up += z >= t.upper_threshold;
      low += z <= -t.lower_threshold;
      big += z / m >= 4 * t.t;
    }
    ok &= within(up, t.upper_dev_bound) && within(low, t.lower_dev_bound);
    if (t.simplified_valid) ok &= within(big, t.simplified_4t_bound);
    detail += fmt("(%g,%g) up %.4f/%.4f ", m, x, up / double(draws), t.upper_dev_bound);
    detail += fmt("low %.4f/%.4f; ", low / double(draws), t.lower_dev_bound);
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

Outcome re_ordering() {
  bool ok = true;
  double worst = INFINITY;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Matrix X = linmodel::generate_design(linmodel::DesignSpec::standard_gaussian(60, 10, derive_seed(41, {k})));
    const double kappa_l = conditions::sparse_spectrum(X, 2).kappa_l;
    for (double c0 : {1.0, 3.0}) {
      const auto re = conditions::re_constant(X, {2, c0}, conditions::REMode::sampled(2000, derive_seed(42, {k})));
      ok &= re.value <= kappa_l;
      worst = std::min(worst, kappa_l - re.value);
    }
  }
  return {ok, fmt("40 runs, min kappa_l - RE %.2e", worst)};
}

// Independent exhaustive best-subset search: every support of size <= s,
// each solved by SVD least squares.
double brute_force_l0(const Matrix& X, const Vector& y, Index s) {
  double best = y.squaredNorm();
  Support S;
  std::function<void(Index)> rec = [&](Index start) {
    if (!S.empty()) {
      Matrix xs(X.rows(), static_cast<Index>(S.size()));
      for (std::size_t j = 0; j < S.size(); ++j) xs.col(j) = X.col(S[j]);
      Eigen::JacobiSVD<Matrix> svd(xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector b = svd.solve(y);
      best = std::min(best, (y - xs * b).squaredNorm());
    }
    if (static_cast<Index>(S.size()) == s) return;
    for (Index j = start; j < X.cols(); ++j) {
      S.push_back(j);
      rec(j + 1);
      S.pop_back();
    }
  };
  rec(0);
  return best;
}

Outcome oracles() {
  Rng rng(derive_seed(51, {1}));
  std::uniform_int_distribution<int> pick_d(3, 14), pick_s(1, 4), pick_n(3, 25);
  double worst_rel = 0.0;
  int instances = 0;
  while (instances < 100) {
    const Index d = pick_d(rng), s = std::min<Index>(pick_s(rng), d), n = pick_n(rng);
    if (choose(d, s) > 1e4) continue;
    const Matrix X = gaussian_matrix(n, d, rng);
    const Vector y = gaussian_vector(n, rng);
    const double fast = estimators::l0_least_squares(X, y, s).objective;
    const double slow = brute_force_l0(X, y, s);
    // Interpolating instances (n <= s) sit at rounding level; scale those by ||y||^2.
    worst_rel = std::max(worst_rel, std::abs(fast - slow) / std::max(slow, 1e-12 * y.squaredNorm()));
    ++instances;
  }
  bool ok = worst_rel <= 1e-10;

  // Dense random feasible directions approach both suprema from below.
  double worst_gap = 0.0, worst_excess = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const Index n = 8, d = 4 + inst % 3, s = 1 + inst % 2;
    const Matrix X = gaussian_matrix(n, d, rng);
    const Vector w = gaussian_vector(n, rng);
    const double r = 1.5;
    const double exact = bounds::sup_correlation_exact(X, w, s, r);
    const double exact_pred = bounds::sup_correlation_pred_exact(X, w, s, r);
    double sampled = 0.0, sampled_pred = 0.0;
    std::uniform_int_distribution<Index> coord(0, d - 1);
    for (int k = 0; k < 40000; ++k) {
      Vector theta = Vector::Zero(d);
      for (Index j = 0; j < 2 * s; ++j) theta(coord(rng)) = std::normal_distribution<double>()(rng);
      if (theta.norm() == 0.0) continue;
      const double corr = std::abs(w.dot(X * theta)) / n;
      sampled = std::max(sampled, corr * r / theta.norm());
      const double pnorm = (X * theta).norm() / std::sqrt(double(n));
      if (pnorm > 0) sampled_pred = std::max(sampled_pred, corr * r / pnorm);
    }
    worst_excess = std::max({worst_excess, sampled - exact, sampled_pred - exact_pred});
    worst_gap = std::max({worst_gap, 1 - sampled / exact, 1 - sampled_pred / exact_pred});
  }
  ok = ok && worst_excess <= 1e-12 && worst_gap <= 0.05;
  return {ok, fmt("l0 max rel diff %.2e over 100 instances; sampled sup gap %.4f, excess %.1e", worst_rel, worst_gap,
                  worst_excess)};
}

Outcome rates() {
  using bounds::RateQuery;
  using bounds::Theorem;
  const auto a = RateQuery::from_params(Theorem::kT2a, {{"Rq", 1}, {"q", 1}, {"kappa_c", 1}, {"kappa_l", 1},
                                                        {"sigma", 1}, {"n", 100}, {"d", std::exp(1.0)}});
  const auto b = RateQuery::from_params(Theorem::kT4b, {{"sigma", 1}, {"s", 2}, {"d", 8}, {"n", 100}});
  const double va = bounds::minimax_rate(a), vb = bounds::minimax_rate(b);
  const double want_b = 81.0 * 2.0 * std::log(4.0) / 100.0;
  const double ea = std::abs(va - 2.4) / 2.4, eb = std::abs(vb - want_b) / want_b;
  return {ea <= 1e-12 && eb <= 1e-12, fmt("T2a %.15g (rel %.1e), T4b %.15g (rel %.1e)", va, ea, vb, eb)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"counterexample exactness", counterexample},
      {"q=0 l2 rate shape", hard_l2_rate},
      {"q=1 l2 rate shape", soft_l2_rate},
      {"q=0 prediction rate shape", prediction_rate},
      {"sequence model rate", sequence_model},
      {"Hamming packing", hamming},
      {"truncation inequality", truncation},
      {"restricted curvature Monte Carlo", prop1},
      {"chi-square tails", chi_square},
      {"RE below sparse kappa_l", re_ordering},
      {"oracle equivalence", oracles},
      {"explicit-constant rates", rates},
  };
  int failures = 0, index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("%s %2d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", index, name, out.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
