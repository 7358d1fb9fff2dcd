#pragma once

// Constrained least-squares estimators over l_q balls and the Lasso baseline.

#include <string>
#include <vector>

#include "lqminimax/core.hpp"
#include "lqminimax/linmodel.hpp"

namespace lqminimax::estimators {

struct EstimateResult {
  Vector beta_hat;
  double objective = 0.0;  // ||y - X beta_hat||_2^2
  Support support;
  Index iterations = 0;
  bool converged = false;
  bool feasible = false;

  // Solver-specific diagnostics.
  double duality_gap = 0.0;           // l1-constrained: Frank-Wolfe gap at exit
  double kkt_residual = 0.0;          // lasso: max KKT violation
  std::vector<Index> skipped_columns; // lasso: zero columns never updated
  std::vector<double> objective_trace;
  std::string method;
};

/// ||y - X b||^2 evaluated from the residual.
double residual_objective(const Matrix& X, const Vector& y, const Vector& beta);

struct L0Options {
  double budget = 1e7;  // maximum number of supports C(d,s)
  unsigned workers = 1;
};

/**
 * Exact minimizer of ||y - X b||^2 over ||b||_0 <= s.
 *
 * Supports of size s are enumerated in lexicographic order; each is scored
 * through the Gram matrix and the near-best ones are re-solved directly on X_S
 * (minimum-norm least squares, 1e-12 relative singular-value cutoff). Among
 * equal objectives the lexicographically smallest support wins. Designs whose
 * columns have pairwise disjoint row supports (identity, sequence model) are
 * solved exactly without enumeration since the objective separates.
 */
EstimateResult l0_least_squares(const Matrix& X, const Vector& y, Index s, const L0Options& options = {});

struct IterativeOptions {
  Index max_iter = 20000;
  double tol = 1e-8;
  bool record_trace = false;
};

/**
 * min ||y - X b||^2 subject to ||b||_1 <= radius by monotone accelerated
 * projected gradient (step 1/L, L the top squared singular value of X).
 * Converged means the Frank-Wolfe duality gap, which upper-bounds the
 * suboptimality, is at most tol.
 */
EstimateResult l1_constrained_ls(const Matrix& X, const Vector& y, double radius, const IterativeOptions& options = {});

/// Multi-start projected gradient over B_q(R_q), q in (0,1), keeping the best feasible iterate.
EstimateResult lq_constrained_ls(const Matrix& X, const Vector& y, const BallSpec& ball,
                                 const std::vector<Vector>& starts, const IterativeOptions& options = {});

/// Cyclic coordinate descent on (1/2n)||y - X b||^2 + lambda ||b||_1.
EstimateResult lasso(const Matrix& X, const Vector& y, double lambda, const IterativeOptions& options = {});

/// Smallest lambda for which the Lasso solution is zero: max_j |X_j^T y| / n.
double lasso_lambda_max(const Matrix& X, const Vector& y);

/**
 * Minimum l1-norm solution of X b = y by enumerating basic solutions
 * (column subsets of size rank(X) with full column rank). Exact for the
 * small designs it is meant for; throws EnumerationError above `budget`.
 */
Vector min_l1_interpolant(const Matrix& X, const Vector& y, double budget = 1e6);

struct BasicInequalityCheck {
  bool objective_ok = false;
  bool eqn_basic_ok = false;
  double lhs = 0.0;  // ||X delta||^2 / n
  double rhs = 0.0;  // 2 |w^T X delta| / n
};

/// Compares the estimate with the truth: objective no worse than at beta*, and
/// ||X delta||^2/n <= 2|w^T X delta|/n with w = y - X beta*.
BasicInequalityCheck check_basic_inequality(const linmodel::ProblemInstance& instance, const EstimateResult& result);

/// Largest squared singular value of X by power iteration on X^T X.
double top_squared_singular_value(const Matrix& X, double rel_tol = 1e-6, Index max_iter = 1000);

}  // namespace lqminimax::estimators
