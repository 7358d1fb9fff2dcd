#include <doctest.h>

#include <cmath>
#include <limits>

#include "lqminimax/ballgeom.hpp"
#include "lqminimax/estimators.hpp"
#include "lqminimax/linmodel.hpp"
#include "lqminimax/random.hpp"

using namespace lqminimax;
using namespace lqminimax::estimators;

namespace {

// Best subset by recursion over all subsets of size <= s, solved with a
// complete orthogonal decomposition (independent of the Gram path).
double brute_force_l0(const Matrix& X, const Vector& y, Index s) {
  double best = y.squaredNorm();
  const Index d = X.cols();
  std::vector<Index> cur;
  std::function<void(Index)> rec = [&](Index start) {
    if (!cur.empty()) {
      Matrix xs(X.rows(), static_cast<Index>(cur.size()));
      for (std::size_t k = 0; k < cur.size(); ++k) xs.col(static_cast<Index>(k)) = X.col(cur[k]);
      const Vector coef = xs.completeOrthogonalDecomposition().solve(y);
      best = std::min(best, (y - xs * coef).squaredNorm());
    }
    if (static_cast<Index>(cur.size()) == s) return;
    for (Index j = start; j < d; ++j) {
      cur.push_back(j);
      rec(j + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return best;
}

linmodel::ProblemInstance random_instance(Index n, Index d, Index s, double sigma, std::uint64_t seed) {
  const Matrix X = linmodel::generate_design(linmodel::DesignSpec::standard_gaussian(n, d, seed));
  const Vector b = linmodel::generate_sparse_beta(BallSpec::hard(s), d, linmodel::BetaPattern::random_support(), 1.0, seed);
  return linmodel::simulate(X, b, sigma, seed, BallSpec::hard(s));
}

}  // namespace

TEST_CASE("l0 matches brute force on random instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index d = 6 + static_cast<Index>(seed % 5);
    const Index s = 1 + static_cast<Index>(seed % 3);
    const auto inst = random_instance(12, d, s, 0.5, seed);
    const auto r = l0_least_squares(inst.X, inst.y, s);
    const double oracle = brute_force_l0(inst.X, inst.y, s);
    CHECK(std::abs(r.objective - oracle) <= 1e-10 * std::max(1.0, oracle));
    CHECK(r.feasible);
    CHECK(static_cast<Index>(r.support.size()) <= s);
  }
}

TEST_CASE("l0 handles rank-deficient supports and breaks ties lexicographically") {
  Matrix X(4, 3);
  X << 1, 1, 0, 2, 2, 1, 0, 0, 1, 1, 1, 0;
  Vector y = X.col(0) * 2.0;
  const auto r = l0_least_squares(X, y, 1);
  CHECK(r.support == Support{0});
  CHECK(r.objective < 1e-20);
  const auto r2 = l0_least_squares(X, y, 2);  // support {0,1} is singular
  CHECK(r2.objective < 1e-20);
  CHECK(r2.support == Support{0, 1});
}

TEST_CASE("l0 recovers noiselessly and is stable across worker counts") {
  const auto inst = random_instance(30, 12, 3, 0.0, 41);
  const auto r = l0_least_squares(inst.X, inst.y, 3);
  CHECK((r.beta_hat - inst.beta_star).norm() < 1e-10);
  const auto noisy = random_instance(30, 12, 3, 1.0, 42);
  L0Options two;
  two.workers = 2;
  const auto a = l0_least_squares(noisy.X, noisy.y, 3);
  const auto b = l0_least_squares(noisy.X, noisy.y, 3, two);
  CHECK(a.support == b.support);
  CHECK(a.objective == b.objective);
}

TEST_CASE("l0 disjoint-column fast path agrees with enumeration") {
  Matrix X = Matrix::Zero(8, 8);
  Rng rng(5);
  const Vector scale = gaussian_vector(8, rng).cwiseAbs().array() + 0.5;
  X.diagonal() = scale;
  const Vector y = gaussian_vector(8, rng);
  const auto fast = l0_least_squares(X, y, 3);
  CHECK(fast.method == "l0_disjoint");
  CHECK(fast.objective == doctest::Approx(brute_force_l0(X, y, 3)).epsilon(1e-12));
}

TEST_CASE("l0 enforces its budget and argument checks") {
  const auto inst = random_instance(10, 30, 2, 1.0, 1);
  L0Options tiny;
  tiny.budget = 100;
  CHECK_THROWS_AS(l0_least_squares(inst.X, inst.y, 3, tiny), EnumerationError);
  CHECK_THROWS_AS(l0_least_squares(inst.X, inst.y, 0), ParameterError);
  CHECK_THROWS_AS(l0_least_squares(inst.X, Vector::Zero(3), 1), DimensionError);
}

TEST_CASE("l1-constrained least squares with an orthonormal design is the l1 projection") {
  Rng rng(9);
  const Vector y = gaussian_vector(10, rng, 2.0);
  const auto r = l1_constrained_ls(Matrix::Identity(10, 10), y, 1.5);
  CHECK(r.converged);
  CHECK((r.beta_hat - ballgeom::project_l1(y, 1.5)).norm() < 1e-6);
}

TEST_CASE("l1-constrained least squares reaches its gap certificate") {
  const auto inst = random_instance(40, 80, 4, 0.5, 3);
  IterativeOptions opts;
  opts.tol = 1e-9;
  opts.record_trace = true;
  const auto r = l1_constrained_ls(inst.X, inst.y, 4.0, opts);
  CHECK(r.converged);
  CHECK(r.feasible);
  CHECK(r.duality_gap <= 1e-9);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
  // No feasible perturbation does better.
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const Vector cand = ballgeom::project_l1(r.beta_hat + 0.05 * gaussian_vector(80, rng), 4.0);
    CHECK(residual_objective(inst.X, inst.y, cand) >= r.objective - 1e-9);
  }
}

TEST_CASE("lq multi-start returns a feasible iterate no worse than its starts") {
  const auto inst = random_instance(30, 20, 3, 0.3, 6);
  const BallSpec ball = BallSpec::soft(0.5, 3.0);
  const Vector start = ballgeom::project_lq_heuristic(inst.beta_star, ball);
  const auto r = lq_constrained_ls(inst.X, inst.y, ball, {start, Vector::Zero(20)});
  CHECK(r.feasible);
  CHECK(r.objective <= residual_objective(inst.X, inst.y, start) + 1e-12);
  CHECK_THROWS_AS(lq_constrained_ls(inst.X, inst.y, ball, {}), ParameterError);
  CHECK_THROWS_AS(lq_constrained_ls(inst.X, inst.y, BallSpec::soft(1.0, 1.0), {start}), ParameterError);
}

TEST_CASE("lasso on a scaled orthonormal design soft-thresholds") {
  const Index n = 16;
  Rng rng(12);
  const Matrix X = Matrix::Identity(n, n) * std::sqrt(static_cast<double>(n));
  const Vector y = gaussian_vector(n, rng, 3.0);
  const double lambda = 0.4;
  const auto r = lasso(X, y, lambda);
  CHECK(r.converged);
  for (Index j = 0; j < n; ++j) {
    const double z = y(j) / std::sqrt(static_cast<double>(n));
    const double expected = std::copysign(std::max(std::abs(z) - lambda, 0.0), z);
    CHECK(r.beta_hat(j) == doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK(r.kkt_residual < 1e-10);
}

TEST_CASE("lasso is zero at lambda_max, flags zero columns, and meets KKT") {
  auto inst = random_instance(40, 15, 3, 0.5, 8);
  inst.X.col(4).setZero();
  const double lmax = lasso_lambda_max(inst.X, inst.y);
  CHECK(lasso(inst.X, inst.y, lmax * 1.0001).beta_hat.norm() == 0.0);
  const auto r = lasso(inst.X, inst.y, 0.1 * lmax);
  CHECK(r.skipped_columns == std::vector<Index>{4});
  CHECK(r.beta_hat(4) == 0.0);
  CHECK(r.kkt_residual < 1e-6);
  CHECK_THROWS_AS(lasso(inst.X, inst.y, -1.0), ParameterError);
}

TEST_CASE("minimum l1 interpolant of the 2x3 design") {
  Matrix X(2, 3);
  X << 1, -2, -1, 2, -3, -3;
  Vector y(2);
  y << 1, 2;
  const Vector b = min_l1_interpolant(X, y);
  CHECK(b(0) == doctest::Approx(0.0));
  CHECK(b(1) == doctest::Approx(-1.0 / 3.0));
  CHECK(b(2) == doctest::Approx(-1.0 / 3.0));
  // Every interpolant is b + t (1, 1/3, 1/3); none has smaller l1 norm.
  Vector k(3);
  k << 1, 1.0 / 3.0, 1.0 / 3.0;
  for (double t = -2.0; t <= 2.0; t += 0.01) CHECK((b + t * k).lpNorm<1>() >= b.lpNorm<1>() - 1e-12);
}

TEST_CASE("basic inequality holds for the exact l0 solution") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = random_instance(25, 10, 2, 1.0, seed);
    const auto r = l0_least_squares(inst.X, inst.y, 2);
    const auto c = check_basic_inequality(inst, r);
    CHECK(c.objective_ok);
    CHECK(c.eqn_basic_ok);
  }
}

TEST_CASE("power iteration matches the SVD") {
  const auto inst = random_instance(30, 12, 2, 1.0, 2);
  Eigen::JacobiSVD<Matrix> svd(inst.X);
  const double top = svd.singularValues()(0) * svd.singularValues()(0);
  CHECK(top_squared_singular_value(inst.X, 1e-12, 5000) == doctest::Approx(top).epsilon(1e-8));
}
