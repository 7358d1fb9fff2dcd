#include "lqminimax/linmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lqminimax/random.hpp"

namespace lqminimax::linmodel {

DesignSpec DesignSpec::standard_gaussian(Index n, Index d, std::uint64_t seed) {
  DesignSpec s;
  s.kind = DesignKind::kStandardGaussian;
  s.n = n;
  s.d = d;
  s.seed = seed;
  return s;
}

DesignSpec DesignSpec::correlated_gaussian(Index n, Matrix covariance, std::uint64_t seed) {
  DesignSpec s;
  s.kind = DesignKind::kCorrelatedGaussian;
  s.n = n;
  s.d = covariance.rows();
  s.seed = seed;
  s.covariance = std::move(covariance);
  return s;
}

DesignSpec DesignSpec::identity_sequence(Index n) {
  DesignSpec s;
  s.kind = DesignKind::kIdentitySequence;
  s.n = n;
  s.d = n;
  return s;
}

DesignSpec DesignSpec::from_matrix(Matrix X) {
  DesignSpec s;
  s.kind = DesignKind::kExplicit;
  s.n = X.rows();
  s.d = X.cols();
  s.explicit_matrix = std::move(X);
  return s;
}

Matrix symmetric_sqrt(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
    throw CovarianceError("covariance must be a non-empty square matrix");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if (asym > 1e-12 * scale) throw CovarianceError("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success) throw CovarianceError("eigendecomposition of covariance failed");
  Vector evals = eig.eigenvalues();
  const double top = std::max(evals.maxCoeff(), 0.0);
  const double cutoff = 1e-12 * std::max(top, 1.0);
  for (Index i = 0; i < evals.size(); ++i) {
    if (evals(i) < -1e-8 * std::max(top, 1.0))
      throw CovarianceError("covariance is not positive semidefinite (eigenvalue " + std::to_string(evals(i)) +
                            ")");
    evals(i) = evals(i) < cutoff ? 0.0 : std::sqrt(evals(i));
  }
  return eig.eigenvectors() * evals.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix generate_design(const DesignSpec& spec) {
  switch (spec.kind) {
    case DesignKind::kExplicit:
      if (spec.explicit_matrix.size() == 0) throw DimensionError("explicit design is empty");
      return spec.explicit_matrix;
    case DesignKind::kIdentitySequence:
      if (spec.n <= 0) throw DimensionError("identity design needs n >= 1");
      if (spec.d != spec.n) throw DimensionError("identity design requires n == d");
      return Matrix::Identity(spec.n, spec.n);
    case DesignKind::kStandardGaussian: {
      if (spec.n <= 0 || spec.d <= 0) throw DimensionError("design dimensions must be positive");
      Rng rng(derive_seed(spec.seed, {kDesignStream}));
      return gaussian_matrix(spec.n, spec.d, rng);
    }
    case DesignKind::kCorrelatedGaussian: {
      if (spec.n <= 0 || spec.covariance.rows() <= 0) throw DimensionError("design dimensions must be positive");
      if (spec.d != spec.covariance.rows()) throw DimensionError("covariance size does not match d");
      const Matrix root = symmetric_sqrt(spec.covariance);
      Rng rng(derive_seed(spec.seed, {kDesignStream}));
      const Matrix W = gaussian_matrix(spec.n, spec.d, rng);
      return W * root;
    }
  }
  throw ParameterError("unknown design kind");
}

namespace {

bool member_exact(const BallSpec& ball, const Vector& v) {
  if (ball.is_hard()) return lq_mass(v, 0.0) <= ball.radius;
  return lq_mass(v, ball.q) <= ball.radius;
}

Support random_subset(Index d, Index k, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, d - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

Vector generate_sparse_beta(const BallSpec& ball, Index d, const BetaPattern& pattern, double magnitude,
                            std::uint64_t seed) {
  if (d <= 0) throw DimensionError("dimension must be positive");
  ball.validate(d);

  if (pattern.kind == BetaPatternKind::kExplicit) {
    if (pattern.values.size() != d) throw DimensionError("explicit beta has the wrong length");
    if (!member_exact(ball, pattern.values))
      throw MembershipError("explicit beta is not a member of the ball (mass " +
                            std::to_string(lq_mass(pattern.values, ball.q)) + " > " + std::to_string(ball.radius) +
                            ")");
    return pattern.values;
  }
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) throw ParameterError("beta magnitude must be positive");

  Index k = 0;
  double m = magnitude;
  if (ball.is_hard()) {
    k = ball.sparsity();
  } else {
    const double cap = std::pow(ball.radius, 1.0 / ball.q);
    m = std::min(m, cap);
    k = static_cast<Index>(std::floor(ball.radius / std::pow(m, ball.q) * (1.0 + 1e-12)));
    k = std::clamp<Index>(k, 1, d);
  }

  Rng rng(derive_seed(seed, {kBetaStream}));
  Vector beta = Vector::Zero(d);
  if (pattern.kind == BetaPatternKind::kFirstCoordinates) {
    beta.head(k).setConstant(m);
  } else {
    const Support supp = random_subset(d, k, rng);
    std::bernoulli_distribution coin(0.5);
    for (Index j : supp) beta(j) = coin(rng) ? m : -m;
  }
  if (!ball.is_hard()) {
    // pow() rounding can push k * m^q a hair above R_q; shrink until exact.
    for (int guard = 0; guard < 64 && !member_exact(ball, beta); ++guard) {
      const double mass = lq_mass(beta, ball.q);
      beta *= std::pow(ball.radius / mass, 1.0 / ball.q) * (1.0 - 1e-15);
    }
  }
  if (!member_exact(ball, beta)) throw ConsistencyError("generated beta failed ball membership");
  return beta;
}

ProblemInstance simulate(Matrix X, const Vector& beta_star, double sigma, std::uint64_t seed, BallSpec ball) {
  if (X.cols() != beta_star.size())
    throw DimensionError("simulate: X has " + std::to_string(X.cols()) + " columns but beta has length " +
                         std::to_string(beta_star.size()));
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("simulate: sigma must be >= 0");
  ProblemInstance inst;
  inst.X = std::move(X);
  inst.beta_star = beta_star;
  inst.sigma = sigma;
  inst.seed = seed;
  inst.ball = ball;
  inst.y = inst.X * beta_star;
  if (sigma > 0.0) {
    Rng rng(derive_seed(seed, {kNoiseStream}));
    inst.y += gaussian_vector(inst.X.rows(), rng, sigma);
  }
  return inst;
}

ProblemInstance sequence_model_instance(Index n, double tau, const BallSpec& ball, std::uint64_t seed,
                                        double magnitude) {
  if (n < 1) throw DimensionError("sequence model needs n >= 1");
  if (!(tau > 0.0)) throw ParameterError("sequence model needs tau > 0");
  const double sigma = tau / std::sqrt(static_cast<double>(n));
  if (magnitude < 0.0) magnitude = sigma * std::sqrt(2.0 * std::log(std::max<double>(static_cast<double>(n), 2.0)));
  BallSpec b = ball;
  if (b.is_hard() && b.sparsity() > n) b.radius = static_cast<double>(n);
  const Vector beta = generate_sparse_beta(b, n, BetaPattern::random_support(), magnitude, seed);
  return simulate(Matrix::Identity(n, n), beta, sigma, seed, b);
}

std::string LossSpec::name() const {
  if (kind == Kind::kL2Prediction) return "pred";
  if (p == 2.0) return "l2";
  if (p == 1.0) return "l1";
  return "l" + std::to_string(p);
}

double loss(const LossSpec& spec, const Matrix& X, const Vector& beta_hat, const Vector& beta_star) {
  if (beta_hat.size() != beta_star.size()) throw DimensionError("loss: estimate and truth lengths differ");
  const Vector delta = beta_hat - beta_star;
  if (spec.kind == LossSpec::Kind::kL2Prediction) {
    if (X.cols() != delta.size()) throw DimensionError("loss: design and vector lengths differ");
    return (X * delta).squaredNorm() / static_cast<double>(X.rows());
  }
  if (!(spec.p >= 1.0)) throw ParameterError("loss: p must be >= 1");
  if (spec.p == 2.0) return delta.squaredNorm();
  double total = 0.0;
  for (Index j = 0; j < delta.size(); ++j) total += std::pow(std::abs(delta(j)), spec.p);
  return total;
}

}  // namespace lqminimax::linmodel
