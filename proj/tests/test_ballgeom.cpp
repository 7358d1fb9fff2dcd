#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lqminimax/ballgeom.hpp"
#include "lqminimax/random.hpp"

using namespace lqminimax;
using namespace lqminimax::ballgeom;

namespace {

// l1-ball projection by bisection on the soft threshold.
Vector project_l1_bisect(const Vector& v, double r) {
  if (v.lpNorm<1>() <= r) return v;
  double lo = 0.0, hi = v.cwiseAbs().maxCoeff();
  auto mass = [&](double t) { return (v.cwiseAbs().array() - t).max(0.0).sum(); };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > r ? lo : hi) = mid;
  }
  Vector out(v.size());
  for (Index j = 0; j < v.size(); ++j) out(j) = std::copysign(std::max(std::abs(v(j)) - hi, 0.0), v(j));
  return out;
}

}  // namespace

TEST_CASE("l1 projection matches a bisection oracle") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Vector v = gaussian_vector(12, rng, 2.0);
    const double r = 0.5 + 0.1 * t;
    CHECK((project_l1(v, r) - project_l1_bisect(v, r)).norm() < 1e-10);
  }
  Vector inside(3);
  inside << 0.1, -0.2, 0.3;
  CHECK(project_l1(inside, 1.0) == inside);
}

TEST_CASE("truncation and rescaling land in the ball") {
  Rng rng(8);
  for (double q : {0.0, 0.3, 0.7, 1.0}) {
    const BallSpec ball = q == 0.0 ? BallSpec::hard(3) : BallSpec::soft(q, 1.5);
    for (int t = 0; t < 20; ++t) {
      const Vector v = gaussian_vector(10, rng, 1.5);
      CHECK(ball_contains(ball, truncate_to_ball(v, ball), 1e-9));
      if (!ball.is_hard()) CHECK(ball_contains(ball, rescale_to_ball(v, ball), 1e-9));
      const Vector h = project_lq_heuristic(v, ball);
      CHECK(ball_contains(ball, h, 1e-9));
      CHECK((h - v).norm() <= (truncate_to_ball(v, ball) - v).norm() + 1e-12);
    }
  }
}

TEST_CASE("hard-ball truncation keeps the s largest entries") {
  Vector v(5);
  v << 0.1, -3.0, 2.0, 0.5, -0.2;
  const Vector t = truncate_to_ball(v, BallSpec::hard(2));
  Vector expected = Vector::Zero(5);
  expected(1) = -3.0;
  expected(2) = 2.0;
  CHECK(t == expected);
}

TEST_CASE("truncation inequality values and domain") {
  Vector theta(2);
  theta << 1.0, 1.0;  // l1 mass 2 = 2 R with R = 1
  const auto c = truncation_inequality(theta, 1.0, 1.0, 0.5);
  CHECK(c.lhs == doctest::Approx(2.0));
  CHECK(c.rhs == doctest::Approx(std::sqrt(2.0) * std::pow(0.5, -0.5) * std::sqrt(2.0) + 2.0));
  CHECK(c.holds);
  Vector big(2);
  big << 2.0, 2.0;
  CHECK_THROWS_AS(truncation_inequality(big, 1.0, 1.0, 0.5), ParameterError);
}

TEST_CASE("Hamming packing separation, cardinality and rescaling") {
  for (Index s : {2, 4}) {
    for (Index d = s + 1; d <= 9; ++d) {
      const auto pack = hamming_packing(d, s);
      CHECK(static_cast<double>(pack.size()) >= hamming_packing_bound(d, s));
      CHECK(min_pairwise(pack.points, Metric::kHamming) >= static_cast<double>(s) / 2.0);
      for (const auto& z : pack.points) CHECK(lq_mass(z, 0.0) == static_cast<double>(s));
      const double delta_n = 0.3;
      const auto scaled = rescale_hypercube_packing(pack, delta_n, s);
      for (std::size_t i = 0; i < scaled.points.size(); ++i)
        for (std::size_t j = i + 1; j < scaled.points.size(); ++j) {
          const double sq = (scaled.points[i] - scaled.points[j]).squaredNorm();
          CHECK(sq >= delta_n * delta_n * (1 - 1e-12));
          CHECK(sq <= 8 * delta_n * delta_n * (1 + 1e-12));
        }
    }
  }
  CHECK_THROWS_AS(hamming_packing(8, 3), ParameterError);
  CHECK_THROWS_AS(hamming_packing(3, 4), ParameterError);
}

TEST_CASE("greedy packing on a delta-spaced grid takes every point") {
  const auto pack = greedy_pack(grid_sampler(BallSpec::soft(1.0, 1.0), 2, 5, 1), 0.5, Metric::kL2, 1000);
  CHECK(pack.size() == 13);
  CHECK(pack.min_pairwise_distance == doctest::Approx(0.5));
  const auto fine = greedy_pack(grid_sampler(BallSpec::soft(1.0, 1.0), 2, 21, 1), 0.5, Metric::kL2, 1000);
  CHECK(fine.min_pairwise_distance >= 0.5);
  CHECK(fine.size() >= 5);
}

TEST_CASE("entropy bounds follow the closed form and name violated hypotheses") {
  const auto b = entropy_bounds(2.0, 1.0, 1.0, 100, 0.1);
  const double shape = std::pow(1.0, 2.0) * std::pow(0.1, -2.0) * std::log(100.0);  // R^{p/(p-q)} eps^{-pq/(p-q)} log d
  CHECK(b.upper == doctest::Approx(shape).epsilon(1e-12));
  CHECK(b.lower == doctest::Approx(shape).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(entropy_bounds(2.0, 1.0, 1.0, 100, 2.0), doctest::Contains("epsilon"), ParameterError);
  CHECK_THROWS_WITH_AS(entropy_bounds(0.5, 1.0, 1.0, 100, 0.1), doctest::Contains("p >= 1"), ParameterError);
  // Lower bound hypothesis: eps^p >= (log d / d^nu)^{(p-q)/q}.
  const double base = std::log(1e6) / std::pow(1e6, 0.5);
  CHECK(entropy_bounds(2.0, 1.0, 1.0, 1000000, 0.5).lower_valid == (0.25 >= base));
  CHECK_FALSE(entropy_bounds(2.0, 1.0, 1.0, 1000000, 1e-4).lower_valid);
}

TEST_CASE("q-convex hull entropy bound") {
  const double v = qconvex_entropy_bound(1.0, 2.0, 50, 0.5, 1.0);
  CHECK(v == doctest::Approx(std::pow(2.0, 2.0) * std::pow(2.0, 2.0) * std::log(50.0)).epsilon(1e-12));
}
