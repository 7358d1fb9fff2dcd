#pragma once

// Closed-form minimax rates, Fano and chi-square tail bounds, and exact
// small-scale oracles for the Gaussian complexity suprema.

#include <limits>
#include <map>
#include <string>

#include "lqminimax/core.hpp"

namespace lqminimax::bounds {

enum class Theorem { kT1a, kT1b, kT2a, kT2bPlain, kT2bSharp, kT3a, kT3b, kT4a, kT4b, kCor1 };

std::string theorem_name(Theorem t);
/// Parses "T1a", "T2b_plain", "Cor1", ... (ParameterError otherwise).
Theorem parse_theorem(const std::string& name);

/**
 * Inputs for a rate formula. `rq_or_s` is R_q for the soft-sparsity rates and
 * s for the hard-sparsity ones. Fields a theorem does not use may stay unset
 * (NaN). `constants["c"]` supplies the generic constant of the rates whose
 * constant is not numerically specified (T1a, T1b, T3a, T3b, T4a, Cor1); it
 * is required unless `use_default_constants` is set, in which case it is 1.
 */
struct RateQuery {
  Theorem theorem = Theorem::kT2a;
  double n = std::numeric_limits<double>::quiet_NaN();
  double d = std::numeric_limits<double>::quiet_NaN();
  double q = std::numeric_limits<double>::quiet_NaN();
  double rq_or_s = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double kappa_c = std::numeric_limits<double>::quiet_NaN();
  double kappa_u = std::numeric_limits<double>::quiet_NaN();
  double kappa_l = std::numeric_limits<double>::quiet_NaN();
  double p = 2.0;
  double diam_term = 0.0;
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> constants;
  bool use_default_constants = false;

  /// Builds a query from key=value pairs (n, d, q, Rq, s, sigma, kappa_c,
  /// kappa_u, kappa_l, p, diam, tau, c). Unknown keys are rejected.
  static RateQuery from_params(Theorem theorem, const std::map<std::string, double>& params);
};

struct RateValue {
  double value = 0.0;
  std::string formula;
  std::map<std::string, double> constants_used;
};

/// Evaluates the rate in log space. ParameterError names any missing or
/// non-positive input.
RateValue evaluate_rate(const RateQuery& query);

inline double minimax_rate(const RateQuery& query) { return evaluate_rate(query).value; }

struct FanoParams {
  double delta_n = 1.0;
  double epsilon_n = 0.0;
  double log_pack = 0.0;   // log M(delta_n)
  double log_cover = 0.0;  // log N_2(epsilon_n)
  double n = 1.0;
  double sigma = 1.0;
  double kappa_c = 1.0;
  double c_route = 1.0;
};

/// 1 - (log N + c n kappa_c^2 eps^2 / sigma^2 + log 2) / log M, clamped to [0,1].
double fano_error_bound(const FanoParams& params);

struct ChiSquareTails {
  double m = 0.0;
  double x = 0.0;
  double upper_threshold = 0.0;  // Z - m >= 2 sqrt(m x) + 2x
  double upper_dev_bound = 0.0;
  double lower_threshold = 0.0;  // Z - m <= -2 sqrt(m x)
  double lower_dev_bound = 0.0;
  double t = 0.0;                // (Z - m)/m >= 4t
  double simplified_4t_bound = 0.0;
  bool simplified_valid = false;  // requires t >= 1
};

/// Deviation bounds for a chi-square variable with m degrees of freedom. The
/// simplified bound uses t = x and is flagged invalid when x < 1.
ChiSquareTails chi_square_tails(double m, double x);

/**
 * sup |w^T X theta| / n over ||theta||_0 <= 2s, ||theta||_2 <= r. Equal to
 * (r/n) times the l2 norm of the 2s largest |X_j^T w|, which is the maximum of
 * ||X_S^T w|| over supports of size 2s.
 */
double sup_correlation_exact(const Matrix& X, const Vector& w, Index s, double r);

/**
 * sup |w^T X theta| / n over ||theta||_0 <= 2s, ||X theta||_2 / sqrt(n) <= r.
 * Per support the image X theta ranges over the column span of X_S with norm
 * at most r sqrt(n), so the value is r ||P_S w|| / sqrt(n), maximized over
 * supports of size 2s. Throws EnumerationError above `budget` supports.
 */
double sup_correlation_pred_exact(const Matrix& X, const Vector& w, Index s, double r, double budget = 1e6);

/// 6 sigma r kappa_u sqrt(s log(d/s) / n).
double sup_correlation_bound(double sigma, double r, double kappa_u, Index s, Index d, Index n);
/// 9 r sigma sqrt(s log(d/s) / n).
double sup_correlation_pred_bound(double sigma, double r, Index s, Index d, Index n);

struct LogBinomial {
  double value = 0.0;
  double lower = 0.0;  // s log(d/s)
  double upper = 0.0;  // s log(d e / s)
};

LogBinomial log_binomial(Index d, Index s);

}  // namespace lqminimax::bounds
