#pragma once

// Problem generation for the linear observation model y = X beta* + w.

#include <cstdint>
#include <optional>
#include <string>

#include "lqminimax/core.hpp"

namespace lqminimax::linmodel {

enum class DesignKind { kExplicit, kStandardGaussian, kCorrelatedGaussian, kIdentitySequence };

struct DesignSpec {
  DesignKind kind = DesignKind::kStandardGaussian;
  Index n = 0;
  Index d = 0;
  std::uint64_t seed = 0;
  Matrix explicit_matrix;  // kExplicit
  Matrix covariance;       // kCorrelatedGaussian, d x d symmetric PSD

  static DesignSpec standard_gaussian(Index n, Index d, std::uint64_t seed);
  static DesignSpec correlated_gaussian(Index n, Matrix covariance, std::uint64_t seed);
  static DesignSpec identity_sequence(Index n);
  static DesignSpec from_matrix(Matrix X);
};

/// Symmetric PSD square root through an eigendecomposition. Eigenvalues below
/// 1e-12 (relative to the largest) are clamped to zero; clearly negative ones
/// raise CovarianceError.
Matrix symmetric_sqrt(const Matrix& sigma);

Matrix generate_design(const DesignSpec& spec);

enum class BetaPatternKind { kRandomSupport, kFirstCoordinates, kExplicit };

struct BetaPattern {
  BetaPatternKind kind = BetaPatternKind::kRandomSupport;
  Vector values;  // kExplicit

  static BetaPattern random_support() { return {}; }
  static BetaPattern first_coordinates() { return {BetaPatternKind::kFirstCoordinates, {}}; }
  static BetaPattern explicit_vector(Vector v) { return {BetaPatternKind::kExplicit, std::move(v)}; }
};

/**
 * Builds a member of `ball` in R^d.
 *
 * For q = 0 the vector carries s entries of size `magnitude` (random signs for
 * the random-support pattern). For q > 0 it carries k = floor(R_q / m^q) equal
 * entries (at least one; the magnitude is capped at R_q^{1/q}), which places
 * the vector on or just inside the ball boundary. Membership is verified by
 * direct evaluation before returning.
 */
Vector generate_sparse_beta(const BallSpec& ball, Index d, const BetaPattern& pattern, double magnitude,
                            std::uint64_t seed);

struct ProblemInstance {
  Matrix X;
  Vector beta_star;
  double sigma = 0.0;
  Vector y;
  std::uint64_t seed = 0;
  BallSpec ball;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  /// The realized noise w = y - X beta*.
  Vector noise() const { return y - X * beta_star; }
};

/// y = X beta* + w with w ~ N(0, sigma^2 I) drawn from the noise stream of `seed`.
ProblemInstance simulate(Matrix X, const Vector& beta_star, double sigma, std::uint64_t seed,
                         BallSpec ball = BallSpec::hard(1));

/**
 * Normal sequence model with n observations: X = I_n, sigma^2 = tau^2 / n and
 * beta* drawn from `ball`. A negative magnitude selects the noise-level
 * magnitude sigma * sqrt(2 log n).
 */
ProblemInstance sequence_model_instance(Index n, double tau, const BallSpec& ball, std::uint64_t seed,
                                        double magnitude = -1.0);

struct LossSpec {
  enum class Kind { kLp, kL2Prediction } kind = Kind::kLp;
  double p = 2.0;

  static LossSpec lp(double p) { return {Kind::kLp, p}; }
  static LossSpec prediction() { return {Kind::kL2Prediction, 2.0}; }
  std::string name() const;
};

/// lp: sum_j |b_j - b*_j|^p.  prediction: ||X (b - b*)||^2 / n.
double loss(const LossSpec& spec, const Matrix& X, const Vector& beta_hat, const Vector& beta_star);

}  // namespace lqminimax::linmodel
