#include "lqminimax/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "lqminimax/ballgeom.hpp"
#include "lqminimax/conditions.hpp"
#include "lqminimax/io.hpp"
#include "lqminimax/random.hpp"

namespace lqminimax::harness {

namespace {

// Calls fn(i) for i in [0, count) on up to `workers` threads; rethrows the
// first exception after all threads finish.
template <typename Fn>
void parallel_jobs(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kL0: return "l0";
    case EstimatorKind::kL1: return "l1";
    case EstimatorKind::kLq: return "lq";
    case EstimatorKind::kLasso: return "lasso";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "l0") return EstimatorKind::kL0;
  if (name == "l1") return EstimatorKind::kL1;
  if (name == "lq") return EstimatorKind::kLq;
  if (name == "lasso") return EstimatorKind::kLasso;
  throw ParameterError("unknown estimator '" + name + "' (expected l0, l1, lq or lasso)");
}

estimators::EstimateResult run_estimator(const EstimatorSpec& spec, const BallSpec& ball,
                                         const linmodel::ProblemInstance& instance) {
  estimators::IterativeOptions iter;
  iter.max_iter = spec.max_iter;
  iter.tol = spec.rel_tol * std::max(1.0, instance.y.squaredNorm());
  switch (spec.kind) {
    case EstimatorKind::kL0: {
      Index s = spec.s;
      if (s <= 0) {
        if (!ball.is_hard()) throw ParameterError("l0 estimator needs s or a hard-sparsity ball");
        s = ball.sparsity();
      }
      estimators::L0Options opts;
      opts.workers = spec.l0_workers;
      return estimators::l0_least_squares(instance.X, instance.y, s, opts);
    }
    case EstimatorKind::kL1: {
      double radius = spec.radius;
      if (radius <= 0.0) {
        if (ball.q != 1.0) throw ParameterError("l1 estimator needs a radius or an l1 ball");
        radius = ball.radius;
      }
      return estimators::l1_constrained_ls(instance.X, instance.y, radius, iter);
    }
    case EstimatorKind::kLq: {
      BallSpec target = ball;
      if (spec.radius > 0.0) target.radius = spec.radius;
      const std::vector<Vector> starts{instance.beta_star, Vector::Zero(instance.d())};
      return estimators::lq_constrained_ls(instance.X, instance.y, target, starts, iter);
    }
    case EstimatorKind::kLasso:
      return estimators::lasso(instance.X, instance.y, spec.lambda, iter);
  }
  throw ParameterError("unknown estimator");
}

Index DRule::d_for(Index n) const {
  if (kind == Kind::kFixed) return d;
  return std::max<Index>(1, static_cast<Index>(std::llround(ratio * static_cast<double>(n))));
}

double BetaScale::magnitude(double sigma, Index n, Index d) const {
  if (kind == Kind::kFixed) return value;
  return value * sigma * std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(n));
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ParameterError("config: n_grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ParameterError("config: n_grid entries must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ParameterError("config: n_grid must be strictly increasing");
  }
  if (trials_per_cell < 1) throw ParameterError("config: trials_per_cell must be >= 1");
  if (!(sigma >= 0.0)) throw ParameterError("config: sigma must be >= 0");
  if (d_rule.kind == DRule::Kind::kFixed && d_rule.d < 1) throw ParameterError("config: fixed d must be >= 1");
  if (d_rule.kind == DRule::Kind::kProportional && !(d_rule.ratio > 0.0))
    throw ParameterError("config: d ratio must be > 0");
  for (Index n : n_grid) ball.validate(d_rule.d_for(n));
  if (design_kind == linmodel::DesignKind::kExplicit) throw ParameterError("config: explicit designs are not supported");
  if (design_kind == linmodel::DesignKind::kCorrelatedGaussian) {
    for (Index n : n_grid)
      if (covariance.rows() != d_rule.d_for(n) || covariance.cols() != covariance.rows())
        throw DimensionError("config: covariance must be d x d for every cell");
  }
  if (design_kind == linmodel::DesignKind::kIdentitySequence)
    for (Index n : n_grid)
      if (d_rule.d_for(n) != n) throw DimensionError("config: identity design needs d = n");
  if (!(beta_scale.value > 0.0)) throw ParameterError("config: beta magnitude must be > 0");
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = io::to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t trial_seed(std::uint64_t seed_root, Index n, Index d, Index trial) {
  return derive_seed(seed_root, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d),
                                 static_cast<std::uint64_t>(trial)});
}

linmodel::ProblemInstance trial_instance(const ExperimentConfig& config, Index n, std::uint64_t seed) {
  const Index d = config.d_rule.d_for(n);
  linmodel::DesignSpec design;
  design.kind = config.design_kind;
  design.n = n;
  design.d = d;
  design.seed = seed;
  design.covariance = config.covariance;
  Matrix X = linmodel::generate_design(design);
  const double magnitude = config.beta_scale.magnitude(config.sigma, n, d);
  const Vector beta = linmodel::generate_sparse_beta(config.ball, d, linmodel::BetaPattern{config.beta_pattern, {}},
                                                     magnitude, seed);
  return linmodel::simulate(std::move(X), beta, config.sigma, seed, config.ball);
}

ExperimentResult run_risk_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config_hash = config_hash(config);
  result.seed_root = config.seed_root;

  struct Job {
    Index n, d, trial;
  };
  std::vector<Job> jobs;
  for (Index n : config.n_grid) {
    const Index d = config.d_rule.d_for(n);
    if (config.scaling_check.enforce) {
      const double rq = config.ball.radius;
      const double lhs = static_cast<double>(d) / (rq * std::pow(static_cast<double>(n), config.ball.q / 2.0));
      if (lhs < std::pow(static_cast<double>(d), config.scaling_check.kappa_exponent)) {
        result.excluded_cells.emplace_back(n, d);
        continue;
      }
    }
    for (Index t = 0; t < config.trials_per_cell; ++t) jobs.push_back({n, d, t});
  }

  result.records.resize(jobs.size());
  parallel_jobs(jobs.size(), config.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto start = std::chrono::steady_clock::now();
    TrialRecord rec;
    rec.n = job.n;
    rec.d = job.d;
    rec.trial = job.trial;
    rec.seed = trial_seed(config.seed_root, job.n, job.d, job.trial);
    const linmodel::ProblemInstance inst = trial_instance(config, job.n, rec.seed);
    const estimators::EstimateResult est = run_estimator(config.estimator, config.ball, inst);
    const auto check = estimators::check_basic_inequality(inst, est);
    rec.objective_ok = check.objective_ok;
    if (config.estimator.kind == EstimatorKind::kL0 && !rec.objective_ok)
      throw ConsistencyError("run_risk_experiment: exact l0 solution is worse than beta* at n=" +
                             std::to_string(job.n) + " trial=" + std::to_string(job.trial));
    rec.loss_l2 = linmodel::loss(linmodel::LossSpec::lp(2.0), inst.X, est.beta_hat, inst.beta_star);
    rec.loss_pred = linmodel::loss(linmodel::LossSpec::prediction(), inst.X, est.beta_hat, inst.beta_star);
    for (const auto& spec : config.losses) {
      const std::string name = spec.name();
      if (name == "l2" || name == "pred") continue;
      rec.extra_losses[name] = linmodel::loss(spec, inst.X, est.beta_hat, inst.beta_star);
    }
    rec.wall_ms = elapsed_ms(start);
    result.records[i] = std::move(rec);
  });
  return result;
}

std::string predictor_name(Predictor p) {
  switch (p) {
    case Predictor::kN: return "n";
    case Predictor::kSLogDOverN: return "s_logd_over_n";
    case Predictor::kRqLogDNPow: return "rq_logd_n_pow";
  }
  return "unknown";
}

Predictor parse_predictor(const std::string& name) {
  if (name == "n") return Predictor::kN;
  if (name == "s_logd_over_n") return Predictor::kSLogDOverN;
  if (name == "rq_logd_n_pow") return Predictor::kRqLogDNPow;
  throw ParameterError("unknown predictor '" + name + "'");
}

double trimmed_mean(std::vector<double> values, double fraction) {
  if (values.empty()) throw ParameterError("trimmed_mean: no values");
  std::sort(values.begin(), values.end());
  auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(values.size())));
  if (2 * drop >= values.size()) drop = 0;
  double total = 0.0;
  for (std::size_t i = drop; i < values.size() - drop; ++i) total += values[i];
  return total / static_cast<double>(values.size() - 2 * drop);
}

RateFitResult fit_log_log(const std::vector<CellSummary>& cells) {
  RateFitResult fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& c : cells) {
    if (!(c.trimmed_mean > 0.0)) {
      fit.zero_cells.emplace_back(c.n, c.d);
      continue;
    }
    if (!(c.predictor > 0.0)) throw ParameterError("fit: predictor must be positive");
    xs.push_back(std::log(c.predictor));
    ys.push_back(std::log(c.trimmed_mean));
  }
  fit.cells = cells;
  fit.n_points = static_cast<Index>(xs.size());
  if (xs.size() < 3)
    throw ParameterError("fit: need at least 3 cells with positive mean loss, have " + std::to_string(xs.size()));
  const double k = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ParameterError("fit: predictor is constant across cells");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

RateFitResult fit_rate_slope(const std::vector<TrialRecord>& records, const std::string& loss_kind,
                             Predictor predictor, const BallSpec& ball) {
  std::map<std::pair<Index, Index>, std::vector<double>> by_cell;
  for (const auto& r : records) {
    double v;
    if (loss_kind == "l2") v = r.loss_l2;
    else if (loss_kind == "pred") v = r.loss_pred;
    else {
      auto it = r.extra_losses.find(loss_kind);
      if (it == r.extra_losses.end()) throw ParameterError("fit_rate_slope: records carry no loss '" + loss_kind + "'");
      v = it->second;
    }
    by_cell[{r.n, r.d}].push_back(v);
  }
  std::vector<CellSummary> cells;
  for (const auto& [key, values] : by_cell) {
    CellSummary c;
    c.n = key.first;
    c.d = key.second;
    c.count = static_cast<Index>(values.size());
    c.trimmed_mean = trimmed_mean(values);
    double total = 0.0;
    for (double v : values) total += v;
    c.raw_mean = total / static_cast<double>(values.size());
    const double n = static_cast<double>(c.n);
    const double logd_n = std::log(static_cast<double>(c.d)) / n;
    switch (predictor) {
      case Predictor::kN: c.predictor = n; break;
      case Predictor::kSLogDOverN: c.predictor = ball.radius * logd_n; break;
      case Predictor::kRqLogDNPow: c.predictor = ball.radius * std::pow(logd_n, 1.0 - ball.q / 2.0); break;
    }
    cells.push_back(c);
  }
  RateFitResult fit = fit_log_log(cells);
  fit.loss_kind = loss_kind;
  fit.predictor = predictor_name(predictor);
  fit.theoretical_slope = predictor == Predictor::kN ? -(1.0 - ball.q / 2.0) : 1.0;
  return fit;
}

CounterexampleReport counterexample_scenario() {
  const auto start = std::chrono::steady_clock::now();
  CounterexampleReport rep;
  rep.X.resize(2, 3);
  rep.X << 1.0, -2.0, -1.0, 2.0, -3.0, -3.0;
  rep.beta_star = Vector::Zero(3);
  rep.beta_star(0) = 1.0;
  rep.delta.resize(3);
  rep.delta << 1.0, 1.0 / 3.0, 1.0 / 3.0;
  const Vector y = rep.X * rep.beta_star;

  rep.delta_in_kernel = (rep.X * rep.delta).norm() <= 1e-12;
  rep.delta_in_cone_not_sparse = conditions::in_re_cone(rep.delta, 1, 1.0) && lq_mass(rep.delta, 0.0) > 2.0;

  const auto l0 = estimators::l0_least_squares(rep.X, y, 1);
  rep.l0_estimate = l0.beta_hat;
  rep.l0_error = (l0.beta_hat - rep.beta_star).norm();
  rep.l0_recovers = rep.l0_error <= 1e-10;

  rep.l1_interpolant = estimators::min_l1_interpolant(rep.X, y);
  rep.l1_interpolant_norm = rep.l1_interpolant.lpNorm<1>();
  Vector expected(3);
  expected << 0.0, -1.0 / 3.0, -1.0 / 3.0;
  rep.l1_interpolant_ok = (rep.l1_interpolant - expected).lpNorm<Eigen::Infinity>() <= 1e-6 &&
                          std::abs(rep.l1_interpolant_norm - 2.0 / 3.0) <= 1e-6 &&
                          rep.l1_interpolant_norm < rep.beta_star.lpNorm<1>();
  rep.elapsed_ms = elapsed_ms(start);
  return rep;
}

RateFitResult corollary1_experiment(const std::vector<Index>& n_grid, double tau, const BallSpec& ball,
                                    const SequenceModelOptions& options) {
  if (n_grid.size() < 3) throw ParameterError("corollary1_experiment: need at least 3 grid points");
  if (!(tau > 0.0)) throw ParameterError("corollary1_experiment: tau must be > 0");
  if (ball.q != 0.0 && ball.q != 1.0) throw ParameterError("corollary1_experiment: q must be 0 or 1");
  if (options.trials < 1) throw ParameterError("corollary1_experiment: trials must be >= 1");

  std::vector<CellSummary> cells;
  for (Index n : n_grid) {
    std::vector<double> losses(static_cast<std::size_t>(options.trials));
    parallel_jobs(losses.size(), options.workers, [&](std::size_t t) {
      const std::uint64_t seed = trial_seed(options.seed_root, n, n, static_cast<Index>(t));
      const auto inst = linmodel::sequence_model_instance(n, tau, ball, seed, options.magnitude);
      Vector estimate;
      if (ball.is_hard())
        estimate = estimators::l0_least_squares(inst.X, inst.y, inst.ball.sparsity()).beta_hat;
      else
        estimate = ballgeom::project_l1(inst.y, ball.radius);  // constrained LS with X = I
      losses[t] = (estimate - inst.beta_star).squaredNorm();
    });
    CellSummary c;
    c.n = n;
    c.d = n;
    c.count = options.trials;
    c.trimmed_mean = trimmed_mean(losses);
    double total = 0.0;
    for (double v : losses) total += v;
    c.raw_mean = total / static_cast<double>(losses.size());
    c.predictor = 2.0 * std::log(static_cast<double>(n)) / static_cast<double>(n);
    cells.push_back(c);
  }
  RateFitResult fit = fit_log_log(cells);
  fit.loss_kind = "l2";
  fit.predictor = "2logn_over_n";
  fit.theoretical_slope = 1.0 - ball.q / 2.0;
  return fit;
}

}  // namespace lqminimax::harness
