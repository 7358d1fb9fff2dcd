#include "lqminimax/core.hpp"

#include <cmath>

#include "lqminimax/random.hpp"

namespace lqminimax {

void BallSpec::validate(Index d) const {
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("ball: q must lie in [0,1], got " + std::to_string(q));
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ParameterError("ball: radius must be positive and finite");
  if (is_hard()) {
    if (radius != std::floor(radius)) throw ParameterError("ball: q=0 requires an integer sparsity s");
    if (d > 0 && sparsity() > d)
      throw ParameterError("ball: sparsity s=" + std::to_string(sparsity()) + " exceeds dimension d=" +
                           std::to_string(d));
  }
}

double lq_mass(const Vector& theta, double q, double zero_tol) {
  if (q == 0.0) {
    double count = 0.0;
    for (Index j = 0; j < theta.size(); ++j)
      if (std::abs(theta(j)) > zero_tol) count += 1.0;
    return count;
  }
  double total = 0.0;
  for (Index j = 0; j < theta.size(); ++j) total += std::pow(std::abs(theta(j)), q);
  return total;
}

double lp_norm(const Vector& v, double p) {
  if (p == 1.0) return v.lpNorm<1>();
  if (p == 2.0) return v.norm();
  if (std::isinf(p)) return v.lpNorm<Eigen::Infinity>();
  double total = 0.0;
  for (Index j = 0; j < v.size(); ++j) total += std::pow(std::abs(v(j)), p);
  return std::pow(total, 1.0 / p);
}

Support support_of(const Vector& v, double tol) {
  Support s;
  for (Index j = 0; j < v.size(); ++j)
    if (std::abs(v(j)) > tol) s.push_back(j);
  return s;
}

double log_choose(Index n, Index k) {
  if (k < 0 || k > n) return -INFINITY;
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double choose(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

Matrix select_columns(const Matrix& X, const Support& cols) {
  Matrix out(X.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = X.col(cols[c]);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(root);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t));
  return h;
}

Vector gaussian_vector(Index n, Rng& rng, double stddev) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = stddev * nd(rng);
  return v;
}

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  // Row-major fill so that row i depends only on the first i rows' draws.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

}  // namespace lqminimax
