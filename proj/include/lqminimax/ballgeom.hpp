#pragma once

// Geometry of l_q balls: membership, projections, the l1/l2 truncation
// inequality, packing constructions and metric-entropy bound formulas.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lqminimax/core.hpp"

namespace lqminimax::ballgeom {

bool ball_contains(const BallSpec& ball, const Vector& theta, double tol = 0.0);

/// Euclidean projection onto {x : ||x||_1 <= radius}.
Vector project_l1(const Vector& theta, double radius);

/**
 * Feasibility restoration onto B_q(R_q) for q in (0,1). Exact projection is
 * nonconvex; this returns the best of several feasible candidates: magnitude
 * clipping, global rescaling, per-coordinate Lagrangian shrinkage and top-k
 * clipping. The result is feasible at 1e-10 and never farther from theta than
 * the clipping or rescaling candidates.
 */
Vector project_lq_heuristic(const Vector& theta, const BallSpec& ball);

/// Clip |theta_j| at the level t solving sum_j min(|theta_j|, t)^q = R_q.
/// For a hard ball, keep the s largest entries (also what project_lq_heuristic returns).
Vector truncate_to_ball(const Vector& theta, const BallSpec& ball);
/// theta * c with c chosen so that sum |c theta_j|^q = R_q.
Vector rescale_to_ball(const Vector& theta, const BallSpec& ball);

struct TruncationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// ||theta||_1 <= sqrt(2 R_q) tau^{-q/2} ||theta||_2 + 2 R_q tau^{1-q}, for theta in B_q(2 R_q).
TruncationCheck truncation_inequality(const Vector& theta, double radius, double q, double tau);

enum class Metric { kL2, kLp, kHamming };

struct PackingResult {
  std::vector<Vector> points;
  double min_pairwise_distance = 0.0;
  Metric metric = Metric::kL2;
  double p = 2.0;  // used when metric == kLp
  double delta = 0.0;

  std::size_t size() const { return points.size(); }
};

double metric_distance(Metric metric, const Vector& a, const Vector& b, double p = 2.0);

/// Exact minimum over all distinct pairs (+inf for fewer than two points).
double min_pairwise(const std::vector<Vector>& points, Metric metric, double p = 2.0);

/// exp((s/2) log((d - s)/(s/2))), the guaranteed cardinality of the Hamming packing.
double hamming_packing_bound(Index d, Index s);

/**
 * Ternary vectors with exactly s nonzeros, pairwise Hamming distance >= s/2,
 * built by first-fit over the full candidate set in lexicographic order.
 * `max_candidates` bounds C(d,s) 2^s.
 */
PackingResult hamming_packing(Index d, Index s, double max_candidates = 5e6);

/// Scales a Hamming packing by sqrt(2/s) delta_n and certifies
/// delta_n^2 <= ||b - b'||^2 <= 8 delta_n^2 on every pair.
PackingResult rescale_hypercube_packing(const PackingResult& packing, double delta_n, Index s);

/// Source of candidate points for greedy packing; returns nullopt when exhausted.
using CandidateSampler = std::function<std::optional<Vector>()>;

/// First-fit packing from a candidate stream.
PackingResult greedy_pack(const CandidateSampler& sampler, double delta, Metric metric, std::size_t max_points,
                          double p = 2.0);

/// Candidate stream over a regular grid of B_q(R) in dimension d, shuffled with `seed`.
CandidateSampler grid_sampler(const BallSpec& ball, Index d, Index points_per_axis, std::uint64_t seed,
                              bool shuffle = true);

struct EntropyBoundParams {
  double upper_const = 1.0;
  double lower_const = 1.0;
  double nu = 0.5;
};

struct EntropyBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_valid = false;
};

/// Metric entropy of B_q(R_q) in l_p, up to the unspecified constants U and L.
EntropyBounds entropy_bounds(double p, double q, double radius, Index d, double epsilon,
                             const EntropyBoundParams& params = {});

/// Entropy bound for the q-convex hull of the columns of X / sqrt(n).
double qconvex_entropy_bound(double q, double radius, Index d, double epsilon, double kappa_c, double u2 = 1.0);

}  // namespace lqminimax::ballgeom
