#pragma once

// Risk experiments over (n, d) grids, log-log rate fits, the sequence-model
// and counterexample scenarios, and persistence of their outputs.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lqminimax/core.hpp"
#include "lqminimax/estimators.hpp"
#include "lqminimax/linmodel.hpp"

namespace lqminimax::harness {

enum class EstimatorKind { kL0, kL1, kLq, kLasso };

std::string estimator_name(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);

/// Estimator settings. Unset s / radius fall back to the experiment's ball.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::kL0;
  Index s = 0;
  double radius = 0.0;
  double lambda = 0.0;
  Index max_iter = 20000;
  double rel_tol = 1e-10;  // iterative solvers stop at tol = rel_tol * max(1, ||y||^2)
  unsigned l0_workers = 1;
};

/// Runs the estimator on one instance. lq starts from beta* and from 0.
estimators::EstimateResult run_estimator(const EstimatorSpec& spec, const BallSpec& ball,
                                         const linmodel::ProblemInstance& instance);

struct DRule {
  enum class Kind { kFixed, kProportional } kind = Kind::kFixed;
  Index d = 0;        // kFixed
  double ratio = 1.0; // kProportional: d = round(ratio * n)

  Index d_for(Index n) const;
};

struct ScalingCheck {
  double kappa_exponent = 0.0;
  bool enforce = false;
};

/// Magnitude of the nonzero entries of beta*: a fixed value, or a multiple of
/// the per-coordinate noise level sigma sqrt(log d / n) of the cell.
struct BetaScale {
  enum class Kind { kFixed, kNoiseLevel } kind = Kind::kFixed;
  double value = 1.0;

  double magnitude(double sigma, Index n, Index d) const;
};

struct ExperimentConfig {
  linmodel::DesignKind design_kind = linmodel::DesignKind::kStandardGaussian;
  Matrix covariance;  // kCorrelatedGaussian only
  BallSpec ball = BallSpec::hard(1);
  double sigma = 1.0;
  std::vector<Index> n_grid;
  DRule d_rule;
  Index trials_per_cell = 1;
  EstimatorSpec estimator;
  std::vector<linmodel::LossSpec> losses;  // extra losses beyond l2 and prediction
  std::uint64_t seed_root = 0;
  ScalingCheck scaling_check;
  linmodel::BetaPatternKind beta_pattern = linmodel::BetaPatternKind::kRandomSupport;
  BetaScale beta_scale;
  unsigned workers = 1;

  /// ParameterError on an unsorted grid, zero trials, bad ball or design.
  void validate() const;
};

/// FNV-1a 64 over the canonical (sorted-key) JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct TrialRecord {
  Index n = 0;
  Index d = 0;
  Index trial = 0;
  std::uint64_t seed = 0;
  double loss_l2 = 0.0;    // ||beta_hat - beta*||_2^2
  double loss_pred = 0.0;  // ||X (beta_hat - beta*)||_2^2 / n
  std::map<std::string, double> extra_losses;
  bool objective_ok = false;
  double wall_ms = 0.0;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;                    // sorted by (n, d, trial)
  std::vector<std::pair<Index, Index>> excluded_cells; // failed the scaling gate
  std::string config_hash;
  std::uint64_t seed_root = 0;
};

/// seed(cell, trial) = derive_seed(seed_root, {n, d, trial}).
std::uint64_t trial_seed(std::uint64_t seed_root, Index n, Index d, Index trial);

/// Builds the instance for one trial (design, beta*, noise) from its seed.
linmodel::ProblemInstance trial_instance(const ExperimentConfig& config, Index n, std::uint64_t seed);

/**
 * Runs every (cell, trial) job on `config.workers` threads. Records come back
 * in canonical order regardless of scheduling, and losses are bit-identical
 * for a given config. A failed objective check under the exact l0 solver
 * throws ConsistencyError.
 */
ExperimentResult run_risk_experiment(const ExperimentConfig& config);

enum class Predictor { kN, kSLogDOverN, kRqLogDNPow };

std::string predictor_name(Predictor p);
Predictor parse_predictor(const std::string& name);

struct CellSummary {
  Index n = 0;
  Index d = 0;
  Index count = 0;
  double trimmed_mean = 0.0;  // 2% dropped from each end
  double raw_mean = 0.0;
  double predictor = 0.0;
};

struct RateFitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  Index n_points = 0;
  std::string loss_kind;
  std::string predictor;
  double theoretical_slope = 0.0;
  std::vector<CellSummary> cells;
  std::vector<std::pair<Index, Index>> zero_cells;  // excluded: mean loss 0
};

/// Mean over the middle 96% of the sorted values.
double trimmed_mean(std::vector<double> values, double fraction = 0.02);

/**
 * OLS of log(trimmed mean loss) on log(predictor) across cells. The predictor
 * is n, s log(d)/n, or R_q (log(d)/n)^(1-q/2). The theoretical slope against n
 * is -1 for q = 0 and -(1 - q/2) otherwise; against the other two it is 1.
 * Throws ParameterError with fewer than 3 usable cells.
 */
RateFitResult fit_rate_slope(const std::vector<TrialRecord>& records, const std::string& loss_kind,
                             Predictor predictor, const BallSpec& ball);

/// Fits log y on log x directly (exposed for the sequence-model fit and tests).
RateFitResult fit_log_log(const std::vector<CellSummary>& cells);

struct CounterexampleReport {
  Matrix X;
  Vector beta_star;
  Vector delta;
  bool delta_in_kernel = false;
  bool delta_in_cone_not_sparse = false;
  bool l0_recovers = false;
  bool l1_interpolant_ok = false;
  double l0_error = 0.0;
  Vector l0_estimate;
  Vector l1_interpolant;
  double l1_interpolant_norm = 0.0;
  double elapsed_ms = 0.0;

  bool all_ok() const { return delta_in_kernel && delta_in_cone_not_sparse && l0_recovers && l1_interpolant_ok; }
};

/// The 2 x 3 design whose kernel meets the RE cone: l0 recovers every
/// 1-sparse vector while the minimum-l1 interpolant does not.
CounterexampleReport counterexample_scenario();

struct SequenceModelOptions {
  Index trials = 200;
  std::uint64_t seed_root = 0;
  double magnitude = -1.0;  // negative: sigma sqrt(2 log n)
  unsigned workers = 1;
};

/**
 * Normal sequence model (X = I_n, sigma = tau / sqrt(n)) at each n, estimated
 * by l0 (q = 0) or the l1-ball projection (q = 1), with a fit of log mean l2
 * risk on log(2 log(n) / n). Theoretical slope 1 - q/2; tau enters only the
 * intercept, as (2 - q) log(tau).
 */
RateFitResult corollary1_experiment(const std::vector<Index>& n_grid, double tau, const BallSpec& ball,
                                    const SequenceModelOptions& options = {});

}  // namespace lqminimax::harness
