#pragma once

// Measurements of the design-matrix assumptions used by the risk bounds.

#include <cstdint>
#include <map>
#include <string>

#include "lqminimax/core.hpp"
#include "lqminimax/linmodel.hpp"

namespace lqminimax::conditions {

/// max_j ||X_j||_2 / sqrt(n).
double column_norm_constant(const Matrix& X);

struct SparseSpectrum {
  double kappa_l = 0.0;
  double kappa_u = 0.0;
  Index level = 0;  // support size the extremes were taken over
};

/**
 * Extreme singular values of X_S / sqrt(n) over every support of size
 * `level` (clipped to d). When level > n the minimum is 0 by rank.
 * Throws EnumerationError when C(d, level) exceeds `budget`.
 */
SparseSpectrum sparse_spectrum_at_level(const Matrix& X, Index level, double budget = 1e6, unsigned workers = 1);

/// Sparse spectrum at level 2s.
SparseSpectrum sparse_spectrum(const Matrix& X, Index s, double budget = 1e6, unsigned workers = 1);

struct REParams {
  Index s = 1;
  double c0 = 1.0;
};

enum class REMethod { kExactTiny, kSampledUpper };

struct REMode {
  REMethod method = REMethod::kSampledUpper;
  Index n_samples = 2000;
  std::uint64_t seed = 0;

  static REMode exact_tiny() { return {REMethod::kExactTiny, 0, 0}; }
  static REMode sampled(Index n_samples, std::uint64_t seed) { return {REMethod::kSampledUpper, n_samples, seed}; }
};

struct REEstimate {
  double value = 0.0;
  REMethod method = REMethod::kSampledUpper;
  Index directions_evaluated = 0;

  /// "exact_tiny" or "sampled_upper". Neither is a certified lower bound.
  std::string tag() const;
};

/// True when theta lies in the cone where the l1 mass outside the top-s
/// coordinates is at most c0 times the mass of the top s.
bool in_re_cone(const Vector& theta, Index s, double c0, double tol = 0.0);

/**
 * Estimates min ||X theta|| / (sqrt(n) ||theta||) over the RE cone.
 *
 * Both modes start from the bottom singular vectors of every column subset of
 * size min(d, floor(s (1 + c0))), all of which lie in the cone. Sampled mode
 * adds random cone directions drawn from a proposal that does not depend on
 * c0, so on a fixed seed the estimate is non-increasing in c0. exact_tiny
 * (d <= 12) instead refines projected-gradient runs on every sign piece of the
 * cone. Both return upper estimates of the true constant.
 */
REEstimate re_constant(const Matrix& X, const REParams& params, const REMode& mode);

/// True iff every column subset of size min(2s, d) has full column rank
/// (SVD, cutoff 1e-10 relative to the largest singular value).
bool kernel_trivial_zero(const Matrix& X, Index s, double budget = 1e6);

struct KernelSampler {
  Index n_samples = 2000;
  std::uint64_t seed = 0;
};

/**
 * Lower estimate of max ||theta||_p over ker(X) intersected with the ball.
 * 0 when the kernel is trivial. For q = 0 the kernel meets the s-sparse set
 * either only at 0 (returns 0) or along a ray (returns +inf); the test uses
 * supports of size 2s, matching differences of two ball members.
 */
double kernel_diameter(const Matrix& X, const BallSpec& ball, double p, const KernelSampler& sampler = {});

struct Prop1Report {
  Index lower_violations = 0;
  Index upper_violations = 0;
  Index checks = 0;
  double worst_lower_margin = 0.0;  // min of lhs - lower bound
  double worst_upper_margin = 0.0;  // min of upper bound - lhs
};

/**
 * Monte Carlo check of the two-sided restricted-curvature inequality
 *   1/2 ||S^{1/2} v|| - 6 sqrt(rho log d / n) ||v||_1 <= ||X v|| / sqrt(n)
 *   <= 3 ||S^{1/2} v|| + 6 sqrt(rho log d / n) ||v||_1
 * where rho is the largest diagonal entry of the covariance S. Directions mix
 * dense Gaussian vectors and k-sparse ones (k = 1..10).
 */
Prop1Report verify_prop1(const linmodel::DesignSpec& spec, Index n_draws, Index n_directions, std::uint64_t seed);

/// diam2 <= f_l / kappa_l + 1e-10. Throws ConsistencyError when kappa_l <= 0.
bool ident_consistency(double kappa_l, double f_l_value, double diam2_estimate);

struct ResidualDescriptor {
  std::string name = "zero";
  std::map<std::string, double> params;
};

struct DesignDiagnostics {
  Index n = 0;
  Index d = 0;
  Index s = 0;
  double kappa_c = 0.0;
  double kappa_l = 0.0;
  double kappa_u = 0.0;
  Index spectrum_level = 0;
  ResidualDescriptor f_l;
  REEstimate re;
  double re_c0 = 0.0;
  bool kernel_trivial = false;
  double diam2_estimate = 0.0;
  BallSpec ball;
};

struct DiagnosticsOptions {
  Index s = 1;  // sparsity level for the spectrum, RE and kernel tests
  BallSpec ball = BallSpec::hard(1);  // ball for the kernel diameter
  double c0 = 1.0;
  REMode re_mode;
  KernelSampler kernel;
  double budget = 1e6;
  unsigned workers = 1;
};

/// Runs every measurement. Checks the cone-nesting invariant (re at most the
/// sparse-spectrum minimum at level s) and throws ConsistencyError if it fails.
DesignDiagnostics diagnose(const Matrix& X, const DiagnosticsOptions& options);

}  // namespace lqminimax::conditions
