#include <doctest.h>

#include <cmath>
#include <random>

#include "lqminimax/bounds.hpp"
#include "lqminimax/conditions.hpp"
#include "lqminimax/linmodel.hpp"
#include "lqminimax/random.hpp"

using namespace lqminimax;
using namespace lqminimax::bounds;

namespace {

RateQuery query(Theorem t, std::map<std::string, double> p) { return RateQuery::from_params(t, p); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// max over supports |S| = 2s of ||X_S^T w||, by enumeration.
double sup_by_enumeration(const Matrix& X, const Vector& w, Index s, double r) {
  double best = 0.0;
  for_each_subset(X.cols(), std::min<Index>(2 * s, X.cols()), [&](const Support& S) {
    best = std::max(best, (select_columns(X, S).transpose() * w).norm());
    return true;
  });
  return r * best / static_cast<double>(X.rows());
}

// Same supremum for the prediction constraint, through the pseudo-inverse projector.
double sup_pred_by_pinv(const Matrix& X, const Vector& w, Index s, double r) {
  double best = 0.0;
  for_each_subset(X.cols(), std::min<Index>(2 * s, X.cols()), [&](const Support& S) {
    const Matrix xs = select_columns(X, S);
    const Matrix proj = xs * xs.completeOrthogonalDecomposition().pseudoInverse();
    best = std::max(best, (proj * w).norm());
    return true;
  });
  return r * best / std::sqrt(static_cast<double>(X.rows()));
}

}  // namespace

TEST_CASE("explicit-constant rates") {
  const double d = std::exp(1.0);  // log d / n = 0.01 with n = 100
  const auto t2a = query(Theorem::kT2a, {{"Rq", 1}, {"q", 1}, {"kappa_c", 1}, {"kappa_l", 1}, {"sigma", 1}, {"n", 100}, {"d", d}});
  CHECK(rel(minimax_rate(t2a), 2.4) < 1e-12);
  const auto t4b = query(Theorem::kT4b, {{"sigma", 1}, {"s", 2}, {"d", 8}, {"n", 100}});
  CHECK(rel(minimax_rate(t4b), 81.0 * 2.0 * std::log(4.0) / 100.0) < 1e-12);
  const auto plain = query(Theorem::kT2bPlain, {{"s", 3}, {"kappa_c", 2}, {"kappa_l", 0.5}, {"sigma", 1.5}, {"n", 50}, {"d", 40}});
  CHECK(rel(minimax_rate(plain), 6.0 * 16.0 * (2.25 / 0.25) * 3.0 * std::log(40.0) / 50.0) < 1e-12);
  const auto sharp = query(Theorem::kT2bSharp, {{"s", 3}, {"kappa_u", 2}, {"kappa_l", 0.5}, {"sigma", 1.5}, {"n", 50}, {"d", 40}});
  CHECK(rel(minimax_rate(sharp), 144.0 * 16.0 * 9.0 * 3.0 * std::log(40.0 / 3.0) / 50.0) < 1e-12);
}

TEST_CASE("generic constants must be explicit unless defaults are requested") {
  auto q = query(Theorem::kT1a, {{"Rq", 1}, {"q", 0.5}, {"sigma", 1}, {"kappa_c", 1}, {"n", 100}, {"d", 50}});
  CHECK_THROWS_WITH_AS(evaluate_rate(q), doctest::Contains("constant"), ParameterError);
  q.use_default_constants = true;
  const auto v = evaluate_rate(q);
  CHECK(v.constants_used.at("c") == 1.0);
  CHECK(rel(v.value, std::pow(std::log(50.0) / 100.0, 0.75)) < 1e-12);  // (p - q)/2 = 0.75
  q.constants["c"] = 3.0;
  CHECK(rel(evaluate_rate(q).value, 3.0 * v.value) < 1e-12);
  q.diam_term = 10.0;
  CHECK(rel(evaluate_rate(q).value, 30.0) < 1e-12);
  CHECK_THROWS_AS(query(Theorem::kT2a, {{"bogus", 1}}), ParameterError);
  CHECK_THROWS_WITH_AS(evaluate_rate(query(Theorem::kT4b, {{"s", 2}, {"d", 8}})), doctest::Contains("sigma"),
                       ParameterError);
  CHECK(parse_theorem("T2b_sharp") == Theorem::kT2bSharp);
  CHECK_THROWS_AS(parse_theorem("T9"), ParameterError);
}

TEST_CASE("remaining rate shapes") {
  std::map<std::string, double> base{{"sigma", 2}, {"kappa_c", 1.5}, {"kappa_u", 1.2}, {"kappa_l", 0.6},
                                     {"n", 400}, {"d", 1000}, {"c", 1}};
  auto with = [&](std::map<std::string, double> extra) {
    auto m = base;
    m.insert(extra.begin(), extra.end());
    return m;
  };
  const double ld = std::log(1000.0) / 400.0;
  const double lds = std::log(1000.0 / 5.0) / 400.0;
  CHECK(rel(minimax_rate(query(Theorem::kT1b, with({{"s", 5}, {"p", 2}}))), 5.0 * (4.0 / 1.44) * lds) < 1e-12);
  CHECK(rel(minimax_rate(query(Theorem::kT3a, with({{"Rq", 2}, {"q", 0.5}}))),
            2.0 * 0.36 * std::pow(4.0 / 2.25 * ld, 0.75)) < 1e-12);
  CHECK(rel(minimax_rate(query(Theorem::kT3b, with({{"s", 5}}))), 0.36 * 4.0 / 1.44 * 5.0 * lds) < 1e-12);
  CHECK(rel(minimax_rate(query(Theorem::kT4a, with({{"Rq", 2}, {"q", 0.5}}))),
            2.25 * 2.0 * std::pow(4.0 / 2.25 * ld, 0.75)) < 1e-12);
  CHECK(rel(minimax_rate(query(Theorem::kCor1, {{"n", 256}, {"tau", 1}, {"q", 0}, {"c", 5}})),
            5.0 * 2.0 * std::log(256.0) / 256.0) < 1e-12);
}

TEST_CASE("q = 0 limit of the soft rate matches the hard rate shape") {
  for (double n : {100.0, 1000.0, 1e5}) {
    for (double d : {50.0, 5000.0}) {
      std::map<std::string, double> p{{"Rq", 4}, {"s", 4}, {"q", 0}, {"kappa_c", 1.3}, {"kappa_l", 0.7},
                                      {"sigma", 1.1}, {"n", n}, {"d", d}};
      p.erase("s");
      const double soft = minimax_rate(query(Theorem::kT2a, p));
      p.erase("q");
      const double hard = minimax_rate(query(Theorem::kT2bPlain, p));
      CHECK(rel(soft / hard, 4.0) < 1e-12);
    }
  }
}

TEST_CASE("lower rates sit below upper rates, and T1b/T2b_sharp differ by a constant factor") {
  double ratio0 = -1.0;
  for (double n : {100.0, 400.0, 5000.0})
    for (double d : {64.0, 512.0, 4096.0})
      for (double s : {2.0, 8.0}) {
        for (double q : {0.25, 0.5, 1.0}) {
          std::map<std::string, double> p{{"Rq", 2}, {"q", q}, {"sigma", 1}, {"kappa_c", 1.2}, {"kappa_l", 0.8},
                                          {"n", n}, {"d", d}, {"c", 1}};
          const double upper = minimax_rate(query(Theorem::kT2a, p));
          p.erase("kappa_l");
          CHECK(minimax_rate(query(Theorem::kT1a, p)) <= upper);
        }
        std::map<std::string, double> h{{"s", s}, {"sigma", 1}, {"kappa_u", 1.3}, {"kappa_l", 0.8},
                                        {"n", n}, {"d", d}, {"c", 1}, {"p", 2}};
        const double sharp = minimax_rate(query(Theorem::kT2bSharp, h));
        h.erase("kappa_l");
        const double lower = minimax_rate(query(Theorem::kT1b, h));
        CHECK(lower <= sharp);
        if (ratio0 < 0) ratio0 = sharp / lower;
        CHECK(rel(sharp / lower, ratio0) < 1e-10);
        h.erase("p");
        h["kappa_l"] = 0.8;
        CHECK(minimax_rate(query(Theorem::kT3b, h)) <= minimax_rate(query(Theorem::kT4b, h)));
      }
}

TEST_CASE("sequence-model substitution into the soft rate") {
  for (double q : {0.0, 0.5, 1.0})
    for (double n : {256.0, 2048.0}) {
      const double tau = 1.7;
      const double rq = 3.0;
      const double kappa = 1.0 / std::sqrt(n);  // column norm of I over sqrt(n)
      const double t2a = minimax_rate(query(Theorem::kT2a, {{"Rq", rq}, {"q", q}, {"n", n}, {"d", n},
                                                            {"sigma", tau / std::sqrt(n)}, {"kappa_c", kappa},
                                                            {"kappa_l", kappa}}));
      const double c = 24.0 * rq / std::pow(2.0, 1.0 - q / 2.0);
      const double cor = minimax_rate(query(Theorem::kCor1, {{"n", n}, {"tau", tau}, {"q", q}, {"c", c}}));
      CHECK(rel(t2a, cor) < 1e-12);
    }
}

TEST_CASE("Fano bound arithmetic") {
  FanoParams f;
  f.log_pack = std::log(4.0);
  CHECK(fano_error_bound(f) == doctest::Approx(0.5));
  for (double L : {std::log(2.0), 1.0, 5.0}) {
    FanoParams g;
    g.log_cover = L;
    g.log_pack = 4.0 * L;
    g.n = 100;
    g.kappa_c = 1.0;
    g.sigma = 1.0;
    g.epsilon_n = std::sqrt(L / 100.0);  // mutual-information term equals log N
    CHECK(fano_error_bound(g) >= 0.25 - 1e-12);
  }
  FanoParams big;
  big.log_pack = 1.0;
  big.epsilon_n = 10.0;
  big.n = 100;
  CHECK(fano_error_bound(big) == 0.0);
  big.log_pack = 0.0;
  CHECK_THROWS_AS(fano_error_bound(big), ParameterError);
}

TEST_CASE("chi-square tail bounds") {
  const auto t = chi_square_tails(10, 1);
  CHECK(t.upper_threshold == doctest::Approx(2.0 * std::sqrt(10.0) + 2.0));
  CHECK(t.upper_dev_bound == doctest::Approx(std::exp(-1.0)));
  CHECK(t.lower_threshold == doctest::Approx(2.0 * std::sqrt(10.0)));
  CHECK(t.simplified_valid);
  CHECK(chi_square_tails(20, 1).simplified_4t_bound == doctest::Approx(std::exp(-20.0)));
  CHECK(chi_square_tails(5, 1e-9).upper_dev_bound == doctest::Approx(1.0));
  CHECK_FALSE(chi_square_tails(5, 0.5).simplified_valid);
  CHECK_THROWS_AS(chi_square_tails(0.5, 1.0), ParameterError);

  Rng rng(1);
  std::chi_squared_distribution<double> chi(10.0);
  int upper = 0, lower = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const double z = chi(rng) - 10.0;
    upper += z >= t.upper_threshold;
    lower += z <= -t.lower_threshold;
  }
  const double se = std::sqrt(t.upper_dev_bound * (1 - t.upper_dev_bound) / draws);
  CHECK(upper / double(draws) <= t.upper_dev_bound + 3 * se);
  CHECK(lower / double(draws) <= t.lower_dev_bound + 3 * se);
}

TEST_CASE("correlation suprema against enumeration") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix X = linmodel::generate_design(linmodel::DesignSpec::standard_gaussian(12, 7, trial));
    const Vector w = gaussian_vector(12, rng);
    for (Index s : {1, 2, 3}) {
      CHECK(sup_correlation_exact(X, w, s, 1.3) == doctest::Approx(sup_by_enumeration(X, w, s, 1.3)).epsilon(1e-12));
      CHECK(sup_correlation_pred_exact(X, w, s, 0.7) == doctest::Approx(sup_pred_by_pinv(X, w, s, 0.7)).epsilon(1e-9));
    }
  }
}

TEST_CASE("correlation suprema special cases") {
  const Index n = 16;
  Matrix X = Matrix::Zero(n, 4);
  X.topRows(4) = Matrix::Identity(4, 4);
  Vector w = Vector::Zero(n);
  w.tail(5).setOnes();  // orthogonal to every column
  CHECK(sup_correlation_exact(X, w, 1, 1.0) == 0.0);
  CHECK(sup_correlation_pred_exact(X, w, 1, 1.0) == doctest::Approx(0.0));

  Rng rng(2);
  const Matrix G = linmodel::generate_design(linmodel::DesignSpec::standard_gaussian(n, 4, 3));
  const Vector v = gaussian_vector(n, rng);
  CHECK(sup_correlation_exact(G, v, 2, 2.0) == doctest::Approx(2.0 / n * (G.transpose() * v).norm()));
  CHECK(sup_correlation_exact(G, 3.0 * v, 2, 2.0) == doctest::Approx(3.0 * sup_correlation_exact(G, v, 2, 1.0) * 2.0));

  const Matrix S = Matrix::Identity(n, n) * std::sqrt(double(n));
  const Vector u = gaussian_vector(n, rng);
  CHECK(sup_correlation_pred_exact(S, u, n / 2, 1.5, 1e7) == doctest::Approx(1.5 * u.norm() / std::sqrt(double(n))));
}

TEST_CASE("correlation suprema sit below their high-probability bounds") {
  const Index n = 50, d = 20, s = 2;
  const Matrix X = linmodel::generate_design(linmodel::DesignSpec::standard_gaussian(n, d, 8));
  const double kappa_u = conditions::sparse_spectrum(X, s).kappa_u;
  const double sigma = 1.0;
  const double r = 1.0;
  Rng rng(9);
  int within = 0, pred_exceed = 0;
  for (int i = 0; i < 100; ++i) {
    const Vector w = gaussian_vector(n, rng, sigma);
    within += sup_correlation_exact(X, w, s, r) <= sup_correlation_bound(sigma, r, kappa_u, s, d, n);
    pred_exceed += sup_correlation_pred_exact(X, w, s, r) > sup_correlation_pred_bound(sigma, r, s, d, n);
  }
  CHECK(within >= 95);
  CHECK(pred_exceed == 0);
}

TEST_CASE("log binomial and its bracket") {
  CHECK(log_binomial(5, 0).value == 0.0);
  const auto b = log_binomial(8, 2);
  CHECK(b.value == doctest::Approx(std::log(28.0)));
  CHECK(b.lower == doctest::Approx(2.0 * std::log(4.0)));
  CHECK(b.upper == doctest::Approx(2.0 * std::log(4.0 * std::exp(1.0))));
  for (Index d = 1; d < 40; d += 3)
    for (Index s = 0; s <= d; ++s) {
      const auto v = log_binomial(d, s);
      CHECK(v.value == doctest::Approx(log_binomial(d, d - s).value));
      CHECK(v.lower <= v.value + 1e-12);
      CHECK(v.value <= v.upper + 1e-12);
    }
  CHECK_THROWS_AS(log_binomial(3, 4), ParameterError);
}
