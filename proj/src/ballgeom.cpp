#include "lqminimax/ballgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "lqminimax/random.hpp"

namespace lqminimax::ballgeom {

bool ball_contains(const BallSpec& ball, const Vector& theta, double tol) {
  if (ball.is_hard()) return lq_mass(theta, 0.0, tol) <= ball.radius;
  return lq_mass(theta, ball.q) <= ball.radius + tol;
}

Vector project_l1(const Vector& theta, double radius) {
  if (!(radius > 0.0)) throw ParameterError("project_l1: radius must be positive");
  if (theta.lpNorm<1>() <= radius) return theta;
  std::vector<double> mags(static_cast<std::size_t>(theta.size()));
  for (Index j = 0; j < theta.size(); ++j) mags[static_cast<std::size_t>(j)] = std::abs(theta(j));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0;
  double level = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cumsum += mags[k];
    const double candidate = (cumsum - radius) / static_cast<double>(k + 1);
    if (mags[k] > candidate) level = candidate;
  }
  Vector out(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    const double a = std::abs(theta(j)) - level;
    out(j) = a > 0.0 ? std::copysign(a, theta(j)) : 0.0;
  }
  return out;
}

namespace {

void require_soft(const BallSpec& ball, const char* who) {
  if (!(ball.q > 0.0 && ball.q <= 1.0)) throw ParameterError(std::string(who) + ": requires q in (0,1]");
  if (!(ball.radius > 0.0)) throw ParameterError(std::string(who) + ": radius must be positive");
}

// Scales x down until sum |x_j|^q <= R holds exactly in floating point.
Vector enforce_feasible(Vector x, const BallSpec& ball) {
  for (int guard = 0; guard < 64; ++guard) {
    const double mass = lq_mass(x, ball.q);
    if (mass <= ball.radius) return x;
    x *= std::pow(ball.radius / mass, 1.0 / ball.q) * (1.0 - 1e-15);
  }
  return x;
}

// argmin_{x >= 0} (x - a)^2 + mu x^q for a >= 0.
double scalar_lq_shrink(double a, double mu, double q) {
  if (a <= 0.0) return 0.0;
  if (mu <= 0.0) return a;
  if (q == 1.0) return std::max(a - mu / 2.0, 0.0);
  auto grad = [&](double x) { return 2.0 * (x - a) + mu * q * std::pow(x, q - 1.0); };
  const double inflection = std::pow(mu * q * (1.0 - q) / 2.0, 1.0 / (2.0 - q));
  if (inflection >= a || grad(inflection) >= 0.0) return 0.0;
  double lo = inflection;
  double hi = a;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * a; ++it) {
    const double mid = 0.5 * (lo + hi);
    (grad(mid) < 0.0 ? lo : hi) = mid;
  }
  const double x = hi;
  const double h_x = (x - a) * (x - a) + mu * std::pow(x, q);
  return h_x < a * a ? x : 0.0;
}

Vector lagrangian_shrink(const Vector& theta, const BallSpec& ball) {
  auto apply = [&](double mu) {
    Vector x(theta.size());
    for (Index j = 0; j < theta.size(); ++j)
      x(j) = std::copysign(scalar_lq_shrink(std::abs(theta(j)), mu, ball.q), theta(j));
    return x;
  };
  double hi = 1.0;
  for (int it = 0; it < 200 && lq_mass(apply(hi), ball.q) > ball.radius; ++it) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lq_mass(apply(mid), ball.q) > ball.radius ? lo : hi) = mid;
  }
  return apply(hi);
}

}  // namespace

namespace {

// Euclidean projection onto the s-sparse vectors; ties go to the lower index.
Vector keep_largest(const Vector& theta, Index s) {
  if (theta.size() <= s) return theta;
  std::vector<Index> order(static_cast<std::size_t>(theta.size()));
  for (Index j = 0; j < theta.size(); ++j) order[static_cast<std::size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(theta(a)) > std::abs(theta(b)); });
  Vector out = Vector::Zero(theta.size());
  for (Index k = 0; k < s; ++k) out(order[static_cast<std::size_t>(k)]) = theta(order[static_cast<std::size_t>(k)]);
  return out;
}

}  // namespace

Vector truncate_to_ball(const Vector& theta, const BallSpec& ball) {
  ball.validate();
  if (ball.is_hard()) return keep_largest(theta, ball.sparsity());
  if (lq_mass(theta, ball.q) <= ball.radius) return theta;
  const double q = ball.q;
  std::vector<double> mags(static_cast<std::size_t>(theta.size()));
  for (Index j = 0; j < theta.size(); ++j) mags[static_cast<std::size_t>(j)] = std::abs(theta(j));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  // tail[k] = sum_{j >= k} a_j^q over the sorted magnitudes.
  std::vector<double> tail(mags.size() + 1, 0.0);
  for (std::size_t k = mags.size(); k-- > 0;) tail[k] = tail[k + 1] + std::pow(mags[k], q);
  double level = 0.0;
  for (std::size_t k = 1; k <= mags.size(); ++k) {
    const double rest = ball.radius - tail[k];
    if (rest <= 0.0) continue;
    const double t = std::pow(rest / static_cast<double>(k), 1.0 / q);
    const double upper = mags[k - 1];
    const double lower = k < mags.size() ? mags[k] : 0.0;
    if (t <= upper && t >= lower) {
      level = t;
      break;
    }
  }
  Vector out(theta.size());
  for (Index j = 0; j < theta.size(); ++j) out(j) = std::copysign(std::min(std::abs(theta(j)), level), theta(j));
  return enforce_feasible(out, ball);
}

Vector rescale_to_ball(const Vector& theta, const BallSpec& ball) {
  require_soft(ball, "rescale_to_ball");
  const double mass = lq_mass(theta, ball.q);
  if (mass <= ball.radius) return theta;
  return enforce_feasible(theta * std::pow(ball.radius / mass, 1.0 / ball.q), ball);
}

Vector project_lq_heuristic(const Vector& theta, const BallSpec& ball) {
  ball.validate();
  if (ball.is_hard()) return keep_largest(theta, ball.sparsity());
  if (lq_mass(theta, ball.q) <= ball.radius) return theta;

  std::vector<Vector> candidates;
  candidates.push_back(truncate_to_ball(theta, ball));
  candidates.push_back(rescale_to_ball(theta, ball));
  candidates.push_back(enforce_feasible(lagrangian_shrink(theta, ball), ball));

  // Top-k clipping: keep the k largest magnitudes, clip them to feasibility.
  std::vector<Index> order(static_cast<std::size_t>(theta.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(theta(a)) > std::abs(theta(b)); });
  Vector kept = Vector::Zero(theta.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    kept(order[k]) = theta(order[k]);
    if (theta(order[k]) == 0.0) break;
    candidates.push_back(truncate_to_ball(kept, ball));
  }

  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double dist = (candidates[i] - theta).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return candidates[best];
}

TruncationCheck truncation_inequality(const Vector& theta, double radius, double q, double tau) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("truncation_inequality: q must lie in (0,1]");
  if (!(tau > 0.0)) throw ParameterError("truncation_inequality: tau must be positive");
  if (!(radius > 0.0)) throw ParameterError("truncation_inequality: radius must be positive");
  if (lq_mass(theta, q) > 2.0 * radius * (1.0 + 1e-12))
    throw ParameterError("truncation_inequality: theta must lie in B_q(2 R_q)");
  TruncationCheck out;
  out.lhs = theta.lpNorm<1>();
  out.rhs = std::sqrt(2.0 * radius) * std::pow(tau, -q / 2.0) * theta.norm() + 2.0 * radius * std::pow(tau, 1.0 - q);
  out.holds = out.lhs <= out.rhs + 1e-12;
  return out;
}

double metric_distance(Metric metric, const Vector& a, const Vector& b, double p) {
  switch (metric) {
    case Metric::kL2:
      return (a - b).norm();
    case Metric::kLp:
      return lp_norm(a - b, p);
    case Metric::kHamming: {
      double count = 0.0;
      for (Index j = 0; j < a.size(); ++j)
        if (a(j) != b(j)) count += 1.0;
      return count;
    }
  }
  return 0.0;
}

double min_pairwise(const std::vector<Vector>& points, Metric metric, double p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::min(best, metric_distance(metric, points[i], points[j], p));
  return best;
}

double hamming_packing_bound(Index d, Index s) {
  const double half = static_cast<double>(s) / 2.0;
  return std::exp(half * std::log(static_cast<double>(d - s) / half));
}

PackingResult hamming_packing(Index d, Index s, double max_candidates) {
  if (s < 2 || s % 2 != 0) throw ParameterError("hamming_packing: s must be an even integer >= 2");
  if (s > d) throw ParameterError("hamming_packing: s must not exceed d");
  const double total = choose(d, s) * std::pow(2.0, static_cast<double>(s));
  if (total > max_candidates)
    throw EnumerationError("hamming_packing: candidate set C(d,s) 2^s = " + std::to_string(total) +
                           " exceeds the budget");

  const std::size_t du = static_cast<std::size_t>(d);
  const Index min_dist = s / 2;
  std::vector<std::vector<signed char>> chosen;
  std::vector<signed char> z(du);
  for_each_subset(d, s, [&](const std::vector<Index>& supp) {
    const std::uint64_t patterns = std::uint64_t{1} << static_cast<unsigned>(s);
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      std::fill(z.begin(), z.end(), 0);
      for (Index k = 0; k < s; ++k)
        z[static_cast<std::size_t>(supp[static_cast<std::size_t>(k)])] =
            (mask >> static_cast<unsigned>(k)) & 1U ? -1 : 1;
      bool ok = true;
      for (const auto& c : chosen) {
        Index dist = 0;
        for (std::size_t j = 0; j < du && dist < min_dist; ++j) dist += c[j] != z[j];
        if (dist < min_dist) {
          ok = false;
          break;
        }
      }
      if (ok) chosen.push_back(z);
    }
    return true;
  });

  PackingResult out;
  out.metric = Metric::kHamming;
  out.delta = static_cast<double>(min_dist);
  out.points.reserve(chosen.size());
  for (const auto& c : chosen) {
    Vector v(d);
    for (std::size_t j = 0; j < du; ++j) v(static_cast<Index>(j)) = c[j];
    out.points.push_back(std::move(v));
  }
  out.min_pairwise_distance = min_pairwise(out.points, Metric::kHamming);
  return out;
}

PackingResult rescale_hypercube_packing(const PackingResult& packing, double delta_n, Index s) {
  if (packing.metric != Metric::kHamming) throw ParameterError("rescale_hypercube_packing: expects a Hamming packing");
  if (s < 2) throw ParameterError("rescale_hypercube_packing: s must be >= 2");
  if (!(delta_n >= 0.0)) throw ParameterError("rescale_hypercube_packing: delta_n must be >= 0");

  // Integer certificate on the ternary points: s/2 <= ||z - z'||^2 <= 4s.
  for (std::size_t i = 0; i < packing.points.size(); ++i) {
    for (std::size_t j = i + 1; j < packing.points.size(); ++j) {
      const double sq = (packing.points[i] - packing.points[j]).squaredNorm();
      if (sq < static_cast<double>(s) / 2.0 || sq > 4.0 * static_cast<double>(s))
        throw ConsistencyError("rescale_hypercube_packing: ternary pair violates s/2 <= ||z-z'||^2 <= 4s");
    }
  }

  const double scale = std::sqrt(2.0 / static_cast<double>(s)) * delta_n;
  PackingResult out;
  out.metric = Metric::kL2;
  out.delta = delta_n;
  out.points.reserve(packing.points.size());
  for (const auto& z : packing.points) out.points.push_back(z * scale);

  const double lo = delta_n * delta_n;
  const double hi = 8.0 * delta_n * delta_n;
  const double slack = 1e-12 * std::max(hi, 1e-300);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    for (std::size_t j = i + 1; j < out.points.size(); ++j) {
      const double sq = (out.points[i] - out.points[j]).squaredNorm();
      if (sq < lo - slack || sq > hi + slack)
        throw ConsistencyError("rescale_hypercube_packing: pair outside [delta^2, 8 delta^2]");
    }
  }
  out.min_pairwise_distance = min_pairwise(out.points, Metric::kL2);
  return out;
}

PackingResult greedy_pack(const CandidateSampler& sampler, double delta, Metric metric, std::size_t max_points,
                          double p) {
  if (!(delta > 0.0)) throw ParameterError("greedy_pack: delta must be positive");
  PackingResult out;
  out.metric = metric;
  out.p = p;
  out.delta = delta;
  while (out.points.size() < max_points) {
    auto cand = sampler();
    if (!cand) break;
    bool ok = true;
    for (const auto& pt : out.points) {
      if (metric_distance(metric, pt, *cand, p) < delta) {
        ok = false;
        break;
      }
    }
    if (ok) out.points.push_back(std::move(*cand));
  }
  out.min_pairwise_distance = min_pairwise(out.points, metric, p);
  return out;
}

CandidateSampler grid_sampler(const BallSpec& ball, Index d, Index points_per_axis, std::uint64_t seed,
                              bool shuffle) {
  ball.validate(d);
  if (points_per_axis < 2) throw ParameterError("grid_sampler: need at least two points per axis");
  const double half_width = ball.is_hard() ? 1.0 : std::pow(ball.radius, 1.0 / ball.q);
  const double total = std::pow(static_cast<double>(points_per_axis), static_cast<double>(d));
  if (total > 5e6) throw EnumerationError("grid_sampler: grid too large");

  auto points = std::make_shared<std::vector<Vector>>();
  const std::size_t count = static_cast<std::size_t>(total);
  for (std::size_t idx = 0; idx < count; ++idx) {
    Vector v(d);
    std::size_t rem = idx;
    for (Index j = 0; j < d; ++j) {
      const auto k = static_cast<double>(rem % static_cast<std::size_t>(points_per_axis));
      rem /= static_cast<std::size_t>(points_per_axis);
      v(j) = -half_width + 2.0 * half_width * k / static_cast<double>(points_per_axis - 1);
    }
    if (ball_contains(ball, v, 1e-12)) points->push_back(std::move(v));
  }
  if (shuffle) {
    Rng rng(seed);
    for (std::size_t i = points->size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap((*points)[i - 1], (*points)[pick(rng)]);
    }
  }
  auto cursor = std::make_shared<std::size_t>(0);
  return [points, cursor]() -> std::optional<Vector> {
    if (*cursor >= points->size()) return std::nullopt;
    return (*points)[(*cursor)++];
  };
}

namespace {

// Exponents p/(p-q) and pq/(p-q), with the p = infinity limits.
std::pair<double, double> entropy_exponents(double p, double q) {
  if (std::isinf(p)) return {1.0, q};
  return {p / (p - q), p * q / (p - q)};
}

}  // namespace

EntropyBounds entropy_bounds(double p, double q, double radius, Index d, double epsilon,
                             const EntropyBoundParams& params) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("entropy_bounds: requires 0 < q <= 1");
  if (!(p >= 1.0)) throw ParameterError("entropy_bounds: requires p >= 1");
  if (!(p > q)) throw ParameterError("entropy_bounds: requires p > q");
  if (d < 2) throw ParameterError("entropy_bounds: requires dimension d >= 2");
  if (!(radius > 0.0)) throw ParameterError("entropy_bounds: requires R_q > 0");
  if (!(epsilon > 0.0 && epsilon < std::pow(radius, 1.0 / q)))
    throw ParameterError("entropy_bounds: requires epsilon in (0, R_q^{1/q})");
  if (!(params.upper_const > 0.0 && params.lower_const > 0.0))
    throw ParameterError("entropy_bounds: constants must be positive");
  if (params.lower_const > params.upper_const) throw ParameterError("entropy_bounds: requires L <= U");
  if (!(params.nu > 0.0 && params.nu < 1.0)) throw ParameterError("entropy_bounds: requires nu in (0,1)");

  const auto [radius_exp, eps_exp] = entropy_exponents(p, q);
  const double log_d = std::log(static_cast<double>(d));
  const double log_shape = radius_exp * std::log(radius) - eps_exp * std::log(epsilon) + std::log(log_d);
  EntropyBounds out;
  out.upper = params.upper_const * std::exp(log_shape);
  out.lower = params.lower_const * std::exp(log_shape);
  if (epsilon < 1.0) {
    const double range_exp = std::isinf(p) ? INFINITY : (p - q) / q;
    const double log_lhs = std::isinf(p) ? 0.0 : p * std::log(epsilon);
    const double base = log_d / std::pow(static_cast<double>(d), params.nu);
    if (std::isinf(p)) {
      // epsilon^p -> 0 < 1 and base^inf -> 0 when base < 1.
      out.lower_valid = base < 1.0;
    } else {
      out.lower_valid = log_lhs >= range_exp * std::log(base);
    }
  }
  return out;
}

double qconvex_entropy_bound(double q, double radius, Index d, double epsilon, double kappa_c, double u2) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("qconvex_entropy_bound: requires q in (0,1]");
  if (!(kappa_c > 0.0)) throw ParameterError("qconvex_entropy_bound: requires kappa_c > 0");
  if (!(epsilon > 0.0) || !(radius > 0.0) || d < 2)
    throw ParameterError("qconvex_entropy_bound: requires epsilon > 0, R_q > 0, d >= 2");
  const double log_d = std::log(static_cast<double>(d));
  const double log_value = (2.0 / (2.0 - q)) * std::log(radius) +
                           (2.0 * q / (2.0 - q)) * (std::log(kappa_c) - std::log(epsilon)) + std::log(log_d);
  return u2 * std::exp(log_value);
}

}  // namespace lqminimax::ballgeom
