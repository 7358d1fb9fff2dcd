#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lqminimax {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using Support = std::vector<Index>;

// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class CovarianceError : public Error {
 public:
  using Error::Error;
};

class MembershipError : public Error {
 public:
  using Error::Error;
};

/// Raised when an exhaustive enumeration would exceed its budget.
class EnumerationError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/**
 * The sparsity class: an l_q ball of radius R_q for q in (0,1], or the set of
 * s-sparse vectors when q == 0 (radius holds s).
 */
struct BallSpec {
  double q = 0.0;
  double radius = 1.0;

  static BallSpec hard(Index s) { return {0.0, static_cast<double>(s)}; }
  static BallSpec soft(double q, double radius) { return {q, radius}; }

  bool is_hard() const { return q == 0.0; }
  Index sparsity() const { return static_cast<Index>(radius); }

  /// Throws ParameterError unless the ball is well formed; with d > 0 also
  /// checks that a hard ball's s fits the dimension.
  void validate(Index d = 0) const;
};

/// Sum_j |theta_j|^q for q > 0, or the support size for q == 0.
double lq_mass(const Vector& theta, double q, double zero_tol = 0.0);

double lp_norm(const Vector& v, double p);

Support support_of(const Vector& v, double tol = 0.0);

/// log of the binomial coefficient via lgamma.
double log_choose(Index n, Index k);

/// Binomial coefficient as a double (exact below 2^53).
double choose(Index n, Index k);

/**
 * Visits every k-subset of {0,...,n-1} in lexicographic order. The callback
 * receives the current subset; returning false stops the walk.
 */
template <typename Fn>
void for_each_subset(Index n, Index k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    if (!fn(static_cast<const std::vector<Index>&>(idx))) return;
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

Matrix select_columns(const Matrix& X, const Support& cols);

}  // namespace lqminimax
