#include "lqminimax/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "lqminimax/random.hpp"

namespace lqminimax::conditions {

double column_norm_constant(const Matrix& X) {
  if (X.rows() == 0 || X.cols() == 0) throw DimensionError("column_norm_constant: empty design");
  return X.colwise().norm().maxCoeff() / std::sqrt(static_cast<double>(X.rows()));
}

namespace {

void check_budget(Index d, Index k, double budget, const char* who, const char* hint) {
  const double count = choose(d, k);
  if (count > budget)
    throw EnumerationError(std::string(who) + ": C(" + std::to_string(d) + "," + std::to_string(k) +
                           ") = " + std::to_string(count) + " exceeds the budget of " + std::to_string(budget) + hint);
}

// Runs fn(support) over all k-subsets, striped across workers.
template <typename Fn>
void parallel_subsets(Index d, Index k, unsigned workers, Fn&& fn) {
  workers = std::max(1U, workers);
  if (workers == 1) {
    for_each_subset(d, k, [&](const Support& supp) {
      fn(0U, supp);
      return true;
    });
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      std::size_t counter = 0;
      for_each_subset(d, k, [&](const Support& supp) {
        if (counter++ % workers == w) fn(w, supp);
        return true;
      });
    });
  }
  for (auto& t : pool) t.join();
}

Support random_subset(Index d, Index k, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, d - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  Support out(idx.begin(), idx.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

double rayleigh_ratio(const Matrix& X, const Vector& theta) {
  const double nrm = theta.norm();
  if (nrm == 0.0) return std::numeric_limits<double>::infinity();
  return (X * theta).norm() / (std::sqrt(static_cast<double>(X.rows())) * nrm);
}

}  // namespace

SparseSpectrum sparse_spectrum_at_level(const Matrix& X, Index level, double budget, unsigned workers) {
  if (X.cols() == 0 || X.rows() == 0) throw DimensionError("sparse_spectrum: empty design");
  if (level < 1) throw ParameterError("sparse_spectrum: level must be >= 1");
  const Index d = X.cols();
  const Index k = std::min(level, d);
  check_budget(d, k, budget, "sparse_spectrum", "; use re_constant in sampled mode for large designs");
  const double root_n = std::sqrt(static_cast<double>(X.rows()));
  const bool rank_forced = k > X.rows();

  std::vector<double> lo(std::max(1U, workers), std::numeric_limits<double>::infinity());
  std::vector<double> hi(std::max(1U, workers), 0.0);
  parallel_subsets(d, k, workers, [&](unsigned w, const Support& supp) {
    Eigen::JacobiSVD<Matrix> svd(select_columns(X, supp));
    const Vector& sv = svd.singularValues();
    hi[w] = std::max(hi[w], sv(0) / root_n);
    lo[w] = std::min(lo[w], rank_forced ? 0.0 : sv(sv.size() - 1) / root_n);
  });
  SparseSpectrum out;
  out.kappa_l = *std::min_element(lo.begin(), lo.end());
  out.kappa_u = *std::max_element(hi.begin(), hi.end());
  out.level = k;
  return out;
}

SparseSpectrum sparse_spectrum(const Matrix& X, Index s, double budget, unsigned workers) {
  if (s < 1) throw ParameterError("sparse_spectrum: s must be >= 1");
  return sparse_spectrum_at_level(X, 2 * s, budget, workers);
}

std::string REEstimate::tag() const { return method == REMethod::kExactTiny ? "exact_tiny" : "sampled_upper"; }

bool in_re_cone(const Vector& theta, Index s, double c0, double tol) {
  Vector mags = theta.cwiseAbs();
  const Index k = std::min<Index>(s, mags.size());
  std::nth_element(mags.data(), mags.data() + k, mags.data() + mags.size(), std::greater<double>());
  const double top = mags.head(k).sum();
  const double tail = mags.sum() - top;
  return tail <= c0 * top + tol;
}

namespace {

struct ConeSearch {
  double best = std::numeric_limits<double>::infinity();
  Index evaluated = 0;

  void offer(double value) {
    best = std::min(best, value);
    ++evaluated;
  }
};

// Bottom singular values of all column subsets of size k (each such subset
// spans directions inside the cone).
void cone_anchors(const Matrix& X, Index k, Rng& rng, Index fallback_samples, ConeSearch& search,
                  std::vector<Vector>* directions) {
  const Index d = X.cols();
  const Index n = X.rows();
  const double root_n = std::sqrt(static_cast<double>(n));
  auto visit = [&](const Support& supp) {
    const Matrix xs = select_columns(X, supp);
    Eigen::JacobiSVD<Matrix> svd(xs, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double value = k > n ? 0.0 : sv(sv.size() - 1) / root_n;
    search.offer(value);
    if (directions != nullptr) {
      Vector theta = Vector::Zero(d);
      const Vector bottom = svd.matrixV().col(k - 1);
      for (std::size_t j = 0; j < supp.size(); ++j) theta(supp[j]) = bottom(static_cast<Index>(j));
      directions->push_back(theta);
    }
  };
  if (choose(d, k) <= 1e5) {
    for_each_subset(d, k, [&](const Support& supp) {
      visit(supp);
      return true;
    });
  } else {
    for (Index i = 0; i < fallback_samples; ++i) visit(random_subset(d, k, rng));
  }
}

// Euclidean projection onto {sign_S * theta_S >= 0, ||theta_{S^c}||_1 <= c0 * sign_S^T theta_S}.
Vector project_piece(const Vector& theta, const Support& supp, const std::vector<double>& signs,
                     const std::vector<char>& in_supp, double c0) {
  const Index d = theta.size();
  std::vector<double> a(supp.size());
  for (std::size_t j = 0; j < supp.size(); ++j) a[j] = signs[j] * theta(supp[j]);
  std::vector<double> b;
  std::vector<Index> tail_idx;
  for (Index j = 0; j < d; ++j)
    if (!in_supp[static_cast<std::size_t>(j)]) {
      b.push_back(theta(j));
      tail_idx.push_back(j);
    }
  auto head_mass = [&](double mu) {
    double total = 0.0;
    for (double v : a) total += std::max(v + mu * c0, 0.0);
    return total;
  };
  auto tail_mass = [&](double mu) {
    double total = 0.0;
    for (double v : b) total += std::max(std::abs(v) - mu, 0.0);
    return total;
  };
  double mu = 0.0;
  if (tail_mass(0.0) > c0 * head_mass(0.0)) {
    double lo = 0.0;
    double hi = 0.0;
    for (double v : b) hi = std::max(hi, std::abs(v));
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (tail_mass(mid) > c0 * head_mass(mid)) lo = mid; else hi = mid;
    }
    mu = hi;
  }
  Vector out = Vector::Zero(d);
  for (std::size_t j = 0; j < supp.size(); ++j) out(supp[j]) = signs[j] * std::max(a[j] + mu * c0, 0.0);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double m = std::max(std::abs(b[j]) - mu, 0.0);
    out(tail_idx[j]) = std::copysign(m, b[j]);
  }
  return out;
}

double refine_exact_tiny(const Matrix& X, const REParams& params, std::vector<Vector> seeds, Rng& rng,
                         ConeSearch& search) {
  const Index d = X.cols();
  const Matrix A = X.transpose() * X / static_cast<double>(X.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const double lmax = std::max(eig.eigenvalues().maxCoeff(), std::numeric_limits<double>::min());
  const double step = 1.0 / lmax;
  seeds.push_back(eig.eigenvectors().col(0));
  seeds.push_back(-eig.eigenvectors().col(0));
  for (int r = 0; r < 4; ++r) seeds.push_back(gaussian_vector(d, rng));

  const Index s = std::min(params.s, d);
  double best_quad = std::numeric_limits<double>::infinity();
  for_each_subset(d, s, [&](const Support& supp) {
    std::vector<char> in_supp(static_cast<std::size_t>(d), 0);
    for (Index j : supp) in_supp[static_cast<std::size_t>(j)] = 1;
    const Index masks = Index{1} << (s - 1);
    for (Index mask = 0; mask < masks; ++mask) {
      std::vector<double> signs(static_cast<std::size_t>(s), 1.0);
      for (Index j = 1; j < s; ++j)
        if (mask & (Index{1} << (j - 1))) signs[static_cast<std::size_t>(j)] = -1.0;
      std::vector<Vector> starts;
      Vector corner = Vector::Zero(d);
      for (std::size_t j = 0; j < supp.size(); ++j) corner(supp[j]) = signs[j];
      starts.push_back(corner);
      for (const auto& seed : seeds) starts.push_back(project_piece(seed, supp, signs, in_supp, params.c0));
      for (auto& theta : starts) {
        double nrm = theta.norm();
        if (nrm == 0.0) continue;
        theta /= nrm;
        double quad = theta.dot(A * theta);
        for (int it = 0; it < 400; ++it) {
          Vector next = project_piece(theta - step * (A * theta), supp, signs, in_supp, params.c0);
          nrm = next.norm();
          if (nrm == 0.0) break;
          next /= nrm;
          const double q_next = next.dot(A * next);
          const double moved = (next - theta).norm();
          theta = std::move(next);
          quad = std::min(quad, q_next);
          if (moved < 1e-13) break;
        }
        best_quad = std::min(best_quad, quad);
        search.evaluated++;
      }
    }
    return true;
  });
  return std::sqrt(std::max(best_quad, 0.0));
}

}  // namespace

REEstimate re_constant(const Matrix& X, const REParams& params, const REMode& mode) {
  if (X.rows() == 0 || X.cols() == 0) throw DimensionError("re_constant: empty design");
  if (params.s < 1) throw ParameterError("re_constant: s must be >= 1");
  if (!(params.c0 >= 0.0)) throw ParameterError("re_constant: c0 must be >= 0");
  const Index d = X.cols();
  const Index s = std::min(params.s, d);
  const auto k = std::min<Index>(d, static_cast<Index>(std::floor(static_cast<double>(s) * (1.0 + params.c0) + 1e-12)));

  REEstimate out;
  out.method = mode.method;
  ConeSearch search;
  Rng rng(derive_seed(mode.seed, {0x7265ULL}));

  if (mode.method == REMethod::kExactTiny) {
    if (d > 12) throw ParameterError("re_constant: exact_tiny mode requires d <= 12");
    std::vector<Vector> anchors;
    cone_anchors(X, k, rng, 0, search, &anchors);
    const double refined = refine_exact_tiny(X, params, anchors, rng, search);
    search.best = std::min(search.best, refined);
  } else {
    if (mode.n_samples < 0) throw ParameterError("re_constant: n_samples must be >= 0");
    Rng anchor_rng(derive_seed(mode.seed, {0x616eULL}));
    cone_anchors(X, k, anchor_rng, mode.n_samples, search, nullptr);
    for (Index i = 0; i < mode.n_samples; ++i) {
      Vector theta = Vector::Zero(d);
      const Support supp = random_subset(d, s, rng);
      std::vector<char> in_supp(static_cast<std::size_t>(d), 0);
      double head = 0.0;
      for (Index j : supp) {
        theta(j) = std::normal_distribution<double>()(rng);
        head += std::abs(theta(j));
        in_supp[static_cast<std::size_t>(j)] = 1;
      }
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      if (s < d) {
        Vector tail = gaussian_vector(d, rng);
        for (Index j : supp) tail(j) = 0.0;
        const double tail_l1 = tail.lpNorm<1>();
        const double ratio = u / (1.0 - u);
        if (tail_l1 > 0.0 && std::isfinite(ratio)) theta += tail * (ratio * head / tail_l1);
      }
      if (in_re_cone(theta, s, params.c0)) search.offer(rayleigh_ratio(X, theta));
    }
  }
  out.value = search.best;
  out.directions_evaluated = search.evaluated;
  return out;
}

bool kernel_trivial_zero(const Matrix& X, Index s, double budget) {
  if (X.rows() == 0 || X.cols() == 0) throw DimensionError("kernel_trivial_zero: empty design");
  if (s < 1) throw ParameterError("kernel_trivial_zero: s must be >= 1");
  const Index d = X.cols();
  const Index k = std::min(2 * s, d);
  if (k > X.rows()) return false;
  check_budget(d, k, budget, "kernel_trivial_zero", "");
  bool trivial = true;
  for_each_subset(d, k, [&](const Support& supp) {
    Eigen::JacobiSVD<Matrix> svd(select_columns(X, supp));
    svd.setThreshold(1e-10);
    if (svd.rank() < k) trivial = false;
    return trivial;
  });
  return trivial;
}

double kernel_diameter(const Matrix& X, const BallSpec& ball, double p, const KernelSampler& sampler) {
  if (X.rows() == 0 || X.cols() == 0) throw DimensionError("kernel_diameter: empty design");
  ball.validate(X.cols());
  if (!(p >= 1.0)) throw ParameterError("kernel_diameter: p must be >= 1");
  const Index d = X.cols();
  if (ball.is_hard()) return kernel_trivial_zero(X, ball.sparsity()) ? 0.0 : std::numeric_limits<double>::infinity();

  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeFullV);
  svd.setThreshold(1e-10);
  const Index rank = svd.rank();
  if (rank == d) return 0.0;
  const Matrix basis = svd.matrixV().rightCols(d - rank);

  double best = 0.0;
  auto consider = [&](const Vector& theta) {
    const double mass = lq_mass(theta, ball.q);
    if (!(mass > 0.0)) return;
    const double scale = std::pow(ball.radius / mass, 1.0 / ball.q);
    best = std::max(best, scale * lp_norm(theta, p));
  };
  for (Index j = 0; j < basis.cols(); ++j) consider(basis.col(j));
  Rng rng(derive_seed(sampler.seed, {0x6b6572ULL}));
  for (Index i = 0; i < sampler.n_samples; ++i) consider(basis * gaussian_vector(basis.cols(), rng));
  return best;
}

Prop1Report verify_prop1(const linmodel::DesignSpec& spec, Index n_draws, Index n_directions, std::uint64_t seed) {
  if (spec.kind != linmodel::DesignKind::kCorrelatedGaussian && spec.kind != linmodel::DesignKind::kStandardGaussian)
    throw ParameterError("verify_prop1: requires a Gaussian design spec");
  const Index n = spec.n;
  const Index d = spec.d;
  const Matrix sigma = spec.kind == linmodel::DesignKind::kCorrelatedGaussian ? spec.covariance
                                                                              : Matrix(Matrix::Identity(d, d));
  if (sigma.rows() != d) throw DimensionError("verify_prop1: covariance does not match d");
  const Matrix root = linmodel::symmetric_sqrt(sigma);
  const double rho = sigma.diagonal().maxCoeff();
  const double radius = 6.0 * std::sqrt(rho * std::log(static_cast<double>(d)) / static_cast<double>(n));
  const double root_n = std::sqrt(static_cast<double>(n));

  Prop1Report report;
  report.worst_lower_margin = std::numeric_limits<double>::infinity();
  report.worst_upper_margin = std::numeric_limits<double>::infinity();
  for (Index draw = 0; draw < n_draws; ++draw) {
    linmodel::DesignSpec local = spec;
    local.seed = derive_seed(seed, {static_cast<std::uint64_t>(draw), kDesignStream});
    const Matrix X = linmodel::generate_design(local);

    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(draw), 0x646972ULL}));
    Matrix V = Matrix::Zero(d, n_directions);
    for (Index i = 0; i < n_directions; ++i) {
      if (i % 2 == 0) {
        V.col(i) = gaussian_vector(d, rng);
      } else {
        const Index k = std::min<Index>(d, 1 + (i / 2) % 10);
        for (Index j : random_subset(d, k, rng)) V(j, i) = std::normal_distribution<double>()(rng);
      }
    }
    const Matrix XV = X * V;
    const Matrix SV = root * V;
    for (Index i = 0; i < n_directions; ++i) {
      const double lhs = XV.col(i).norm() / root_n;
      const double a = SV.col(i).norm();
      const double l1 = V.col(i).lpNorm<1>();
      const double lower_margin = lhs - (0.5 * a - radius * l1);
      const double upper_margin = (3.0 * a + radius * l1) - lhs;
      const double slack = 1e-12 * std::max(1.0, lhs);
      if (lower_margin < -slack) ++report.lower_violations;
      if (upper_margin < -slack) ++report.upper_violations;
      report.worst_lower_margin = std::min(report.worst_lower_margin, lower_margin);
      report.worst_upper_margin = std::min(report.worst_upper_margin, upper_margin);
      ++report.checks;
    }
  }
  return report;
}

bool ident_consistency(double kappa_l, double f_l_value, double diam2_estimate) {
  if (!(kappa_l > 0.0))
    throw ConsistencyError("ident_consistency: kappa_l must be positive; the diameter bound is vacuous at kappa_l = 0");
  return diam2_estimate <= f_l_value / kappa_l + 1e-10;
}

DesignDiagnostics diagnose(const Matrix& X, const DiagnosticsOptions& options) {
  DesignDiagnostics out;
  out.n = X.rows();
  out.d = X.cols();
  out.s = options.s;
  out.ball = options.ball;
  out.kappa_c = column_norm_constant(X);
  const SparseSpectrum spec2 = sparse_spectrum(X, options.s, options.budget, options.workers);
  out.kappa_l = spec2.kappa_l;
  out.kappa_u = spec2.kappa_u;
  out.spectrum_level = spec2.level;
  out.re_c0 = options.c0;
  out.re = re_constant(X, {options.s, options.c0}, options.re_mode);
  const SparseSpectrum spec1 = sparse_spectrum_at_level(X, options.s, options.budget, options.workers);
  if (out.re.value > spec1.kappa_l + 1e-10 * std::max(1.0, spec1.kappa_l))
    throw ConsistencyError("diagnose: RE estimate " + std::to_string(out.re.value) +
                           " exceeds the sparse-spectrum minimum " + std::to_string(spec1.kappa_l) + " at level s");
  out.kernel_trivial = kernel_trivial_zero(X, options.s, options.budget);
  out.diam2_estimate = kernel_diameter(X, options.ball, 2.0, options.kernel);
  return out;
}

}  // namespace lqminimax::conditions
