#include "lqminimax/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "lqminimax/ballgeom.hpp"

namespace lqminimax::estimators {

double residual_objective(const Matrix& X, const Vector& y, const Vector& beta) {
  return (y - X * beta).squaredNorm();
}

namespace {

void check_dims(const Matrix& X, const Vector& y, const char* who) {
  if (X.rows() != y.size())
    throw DimensionError(std::string(who) + ": X has " + std::to_string(X.rows()) + " rows but y has length " +
                         std::to_string(y.size()));
  if (X.cols() == 0) throw DimensionError(std::string(who) + ": design has no columns");
}

Vector min_norm_solve(const Matrix& A, const Vector& y) {
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  return svd.solve(y);
}

// Each row holding at most one nonzero makes the columns mutually orthogonal
// with disjoint supports, so the l0 objective separates across coordinates.
bool has_disjoint_column_supports(const Matrix& X) {
  std::vector<char> taken(static_cast<std::size_t>(X.rows()), 0);
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) {
      if (X(i, j) == 0.0) continue;
      if (taken[static_cast<std::size_t>(i)]) return false;
      taken[static_cast<std::size_t>(i)] = 1;
    }
  return true;
}

struct Candidate {
  double score;
  Support support;
};

// Keeps every support whose Gram score is within `margin` of the best seen,
// capped at `cap` entries (dropping the worst, then the lexicographically last).
class NearBest {
 public:
  NearBest(double margin, std::size_t cap) : margin_(margin), cap_(cap) {}

  double best() const { return best_; }

  void offer(double score, const Support& supp) {
    if (score > best_ + margin_) return;
    if (score < best_) {
      best_ = score;
      const double limit = best_ + margin_;
      std::erase_if(items_, [&](const Candidate& c) { return c.score > limit; });
    }
    items_.push_back({score, supp});
    if (items_.size() > cap_) {
      auto worst = std::max_element(items_.begin(), items_.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.support < b.support;
      });
      items_.erase(worst);
    }
  }

  void merge(const NearBest& other) {
    for (const auto& c : other.items_) offer(c.score, c.support);
  }

  const std::vector<Candidate>& items() const { return items_; }

 private:
  double margin_;
  std::size_t cap_;
  double best_ = std::numeric_limits<double>::infinity();
  std::vector<Candidate> items_;
};

EstimateResult l0_disjoint(const Matrix& X, const Vector& y, Index s) {
  const Index d = X.cols();
  Vector gain(d);
  Vector coef = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    const double g = X.col(j).squaredNorm();
    const double b = X.col(j).dot(y);
    coef(j) = g > 0.0 ? b / g : 0.0;
    gain(j) = g > 0.0 ? b * b / g : 0.0;
  }
  std::vector<Index> order(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) order[static_cast<std::size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return gain(a) > gain(b); });
  Support supp(order.begin(), order.begin() + s);
  std::sort(supp.begin(), supp.end());

  EstimateResult out;
  out.beta_hat = Vector::Zero(d);
  for (Index j : supp) out.beta_hat(j) = coef(j);
  out.support = supp;
  out.method = "l0_disjoint";
  return out;
}

}  // namespace

EstimateResult l0_least_squares(const Matrix& X, const Vector& y, Index s, const L0Options& options) {
  check_dims(X, y, "l0_least_squares");
  const Index d = X.cols();
  if (s < 1 || s > d) throw ParameterError("l0_least_squares: requires 1 <= s <= d");

  EstimateResult out;
  if (has_disjoint_column_supports(X)) {
    out = l0_disjoint(X, y, s);
  } else {
    const double count = choose(d, s);
    if (count > options.budget)
      throw EnumerationError("l0_least_squares: C(" + std::to_string(d) + "," + std::to_string(s) +
                             ") = " + std::to_string(count) + " supports exceeds the budget of " +
                             std::to_string(options.budget));

    const Matrix gram = X.transpose() * X;
    const Vector xty = X.transpose() * y;
    const double yy = y.squaredNorm();
    const double margin = 1e-8 * std::max(yy, std::numeric_limits<double>::min());
    constexpr std::size_t kCap = 64;

    auto scan = [&](unsigned worker, unsigned workers, NearBest& near) {
      Matrix g_ss(s, s);
      Vector b_s(s);
      Eigen::LLT<Matrix> llt(s);
      std::size_t counter = 0;
      for_each_subset(d, s, [&](const Support& supp) {
        if (counter++ % workers != worker) return true;
        for (Index a = 0; a < s; ++a) {
          b_s(a) = xty(supp[static_cast<std::size_t>(a)]);
          for (Index b = 0; b < s; ++b) g_ss(a, b) = gram(supp[static_cast<std::size_t>(a)], supp[static_cast<std::size_t>(b)]);
        }
        llt.compute(g_ss);
        double score;
        bool ok = llt.info() == Eigen::Success;
        if (ok) {
          const Vector ldiag = llt.matrixLLT().diagonal();
          const double dmax = g_ss.diagonal().maxCoeff();
          ok = ldiag.minCoeff() * ldiag.minCoeff() > 1e-10 * dmax;
        }
        if (ok) {
          score = yy - b_s.dot(llt.solve(b_s));
        } else {
          const Matrix xs = select_columns(X, supp);
          score = (y - xs * min_norm_solve(xs, y)).squaredNorm();
        }
        near.offer(score, supp);
        return true;
      });
    };

    const unsigned workers = std::max(1U, options.workers);
    NearBest near(margin, kCap);
    if (workers == 1) {
      scan(0, 1, near);
    } else {
      std::vector<NearBest> partial(workers, NearBest(margin, kCap));
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back([&, w] { scan(w, workers, partial[w]); });
      for (auto& t : pool) t.join();
      for (const auto& p : partial) near.merge(p);
    }

    // Re-solve the near-best supports on X_S directly and pick the winner.
    std::vector<Candidate> items = near.items();
    std::sort(items.begin(), items.end(), [](const Candidate& a, const Candidate& b) { return a.support < b.support; });
    double best_obj = std::numeric_limits<double>::infinity();
    const double tie = 1e-12 * std::max(yy, std::numeric_limits<double>::min());
    for (const auto& c : items) {
      const Matrix xs = select_columns(X, c.support);
      const Vector coef = min_norm_solve(xs, y);
      const double obj = (y - xs * coef).squaredNorm();
      if (obj < best_obj - tie) {
        best_obj = obj;
        out.beta_hat = Vector::Zero(d);
        for (std::size_t k = 0; k < c.support.size(); ++k) out.beta_hat(c.support[k]) = coef(static_cast<Index>(k));
        out.support = c.support;
      }
    }
    out.method = "l0_enumeration";
    out.iterations = static_cast<Index>(count);
  }
  out.objective = residual_objective(X, y, out.beta_hat);
  out.converged = true;
  out.feasible = ballgeom::ball_contains(BallSpec::hard(s), out.beta_hat, 1e-8);
  return out;
}

double top_squared_singular_value(const Matrix& X, double rel_tol, Index max_iter) {
  const Index d = X.cols();
  Vector v(d);
  for (Index j = 0; j < d; ++j) v(j) = 1.0 + 0.5 * std::sin(static_cast<double>(j) + 1.0);
  v.normalize();
  double lambda = 0.0;
  for (Index it = 0; it < max_iter; ++it) {
    Vector w = X.transpose() * (X * v);
    const double next = v.dot(w);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

namespace {

// Gradient of (1/2)||y - X b||^2, through the Gram matrix when that is cheaper.
class LeastSquaresGradient {
 public:
  LeastSquaresGradient(const Matrix& X, const Vector& y) : X_(X), y_(y) {
    use_gram_ = X.cols() < 2 * X.rows();
    if (use_gram_) {
      gram_ = X.transpose() * X;
      xty_ = X.transpose() * y;
    }
  }
  Vector operator()(const Vector& b) const {
    if (use_gram_) return gram_ * b - xty_;
    return X_.transpose() * (X_ * b - y_);
  }

 private:
  const Matrix& X_;
  const Vector& y_;
  bool use_gram_ = false;
  Matrix gram_;
  Vector xty_;
};

}  // namespace

EstimateResult l1_constrained_ls(const Matrix& X, const Vector& y, double radius, const IterativeOptions& options) {
  check_dims(X, y, "l1_constrained_ls");
  if (!(radius > 0.0)) throw ParameterError("l1_constrained_ls: radius must be positive");
  const Index d = X.cols();
  const LeastSquaresGradient grad(X, y);
  const double lipschitz = std::max(top_squared_singular_value(X) * 1.01, std::numeric_limits<double>::min());

  auto objective = [&](const Vector& b) { return residual_objective(X, y, b); };
  // Frank-Wolfe gap for ||y - Xb||^2 (twice the gap of the halved objective).
  auto fw_gap = [&](const Vector& b, const Vector& g) { return 2.0 * (g.dot(b) + radius * g.lpNorm<Eigen::Infinity>()); };

  EstimateResult out;
  out.method = "l1_projected_gradient";
  Vector x = Vector::Zero(d);
  Vector v = x;
  double fx = objective(x);
  double t = 1.0;
  if (options.record_trace) out.objective_trace.push_back(fx);

  Index it = 0;
  for (; it < options.max_iter; ++it) {
    const Vector gx = grad(x);
    out.duality_gap = fw_gap(x, gx);
    if (out.duality_gap <= options.tol) {
      out.converged = true;
      break;
    }
    const Vector z = ballgeom::project_l1(v - grad(v) / lipschitz, radius);
    const double fz = objective(z);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Vector x_next = fz <= fx ? z : x;
    const double f_next = std::min(fz, fx);
    v = x_next + (t / t_next) * (z - x_next) + ((t - 1.0) / t_next) * (x_next - x);
    x = std::move(x_next);
    fx = f_next;
    t = t_next;
    if (options.record_trace) out.objective_trace.push_back(fx);
  }
  if (!out.converged) out.duality_gap = fw_gap(x, grad(x));
  out.converged = out.duality_gap <= options.tol;
  out.iterations = it;
  out.beta_hat = x;
  out.objective = fx;
  out.support = support_of(x);
  out.feasible = ballgeom::ball_contains(BallSpec::soft(1.0, radius), x, 1e-8);
  return out;
}

EstimateResult lq_constrained_ls(const Matrix& X, const Vector& y, const BallSpec& ball,
                                 const std::vector<Vector>& starts, const IterativeOptions& options) {
  check_dims(X, y, "lq_constrained_ls");
  if (!(ball.q > 0.0 && ball.q < 1.0)) throw ParameterError("lq_constrained_ls: requires q in (0,1)");
  ball.validate(X.cols());
  if (starts.empty()) throw ParameterError("lq_constrained_ls: at least one start is required");
  const LeastSquaresGradient grad(X, y);
  const double lipschitz = std::max(top_squared_singular_value(X) * 1.01, std::numeric_limits<double>::min());
  auto objective = [&](const Vector& b) { return residual_objective(X, y, b); };

  EstimateResult out;
  out.method = "lq_multistart_projected_gradient";
  out.objective = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    if (start.size() != X.cols()) throw DimensionError("lq_constrained_ls: start has the wrong length");
    Vector x = ballgeom::project_lq_heuristic(start, ball);
    double fx = objective(x);
    bool stationary = false;
    Index it = 0;
    for (; it < options.max_iter; ++it) {
      const Vector g = grad(x);
      double step = 1.0 / lipschitz;
      bool moved = false;
      for (int halving = 0; halving < 30; ++halving) {
        const Vector z = ballgeom::project_lq_heuristic(x - step * g, ball);
        const double fz = objective(z);
        if (fz < fx) {
          const double change = (z - x).norm();
          x = z;
          const double drop = fx - fz;
          fx = fz;
          moved = true;
          if (change <= options.tol * std::max(1.0, x.norm()) || drop <= options.tol * std::max(1.0, fx))
            stationary = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) stationary = true;
      if (stationary) break;
    }
    out.iterations += it;
    if (fx < out.objective) {
      out.objective = fx;
      out.beta_hat = x;
      out.converged = stationary;
    }
  }
  out.support = support_of(out.beta_hat);
  out.feasible = ballgeom::ball_contains(ball, out.beta_hat, 1e-8);
  return out;
}

double lasso_lambda_max(const Matrix& X, const Vector& y) {
  check_dims(X, y, "lasso_lambda_max");
  return (X.transpose() * y).lpNorm<Eigen::Infinity>() / static_cast<double>(X.rows());
}

EstimateResult lasso(const Matrix& X, const Vector& y, double lambda, const IterativeOptions& options) {
  check_dims(X, y, "lasso");
  if (!(lambda >= 0.0)) throw ParameterError("lasso: lambda must be >= 0");
  const Index n = X.rows();
  const Index d = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector col_sq(d);
  for (Index j = 0; j < d; ++j) col_sq(j) = X.col(j).squaredNorm() * inv_n;

  EstimateResult out;
  out.method = "lasso_coordinate_descent";
  for (Index j = 0; j < d; ++j)
    if (col_sq(j) == 0.0) out.skipped_columns.push_back(j);

  Vector beta = Vector::Zero(d);
  Vector resid = y;
  Index sweep = 0;
  for (; sweep < options.max_iter; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double old = beta(j);
      const double rho = X.col(j).dot(resid) * inv_n + col_sq(j) * old;
      const double shrunk = std::abs(rho) > lambda ? std::copysign(std::abs(rho) - lambda, rho) : 0.0;
      const double next = shrunk / col_sq(j);
      if (next != old) {
        resid -= X.col(j) * (next - old);
        beta(j) = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    if (options.record_trace)
      out.objective_trace.push_back(0.5 * inv_n * resid.squaredNorm() + lambda * beta.lpNorm<1>());
    if (max_change <= options.tol) {
      out.converged = true;
      ++sweep;
      break;
    }
  }
  resid = y - X * beta;
  const Vector corr = X.transpose() * resid * inv_n;
  double kkt = 0.0;
  for (Index j = 0; j < d; ++j) {
    if (col_sq(j) == 0.0) continue;
    const double viol = beta(j) == 0.0 ? std::max(0.0, std::abs(corr(j)) - lambda)
                                       : std::abs(corr(j) - lambda * (beta(j) > 0.0 ? 1.0 : -1.0));
    kkt = std::max(kkt, viol);
  }
  out.kkt_residual = kkt;
  out.iterations = sweep;
  out.beta_hat = beta;
  out.objective = resid.squaredNorm();
  out.support = support_of(beta);
  out.feasible = true;
  return out;
}

Vector min_l1_interpolant(const Matrix& X, const Vector& y, double budget) {
  check_dims(X, y, "min_l1_interpolant");
  const Index d = X.cols();
  Eigen::JacobiSVD<Matrix> full(X);
  full.setThreshold(1e-10);
  const Index rank = full.rank();
  if (rank == 0) {
    if (y.norm() > 0.0) throw ParameterError("min_l1_interpolant: y is not in the column space of X");
    return Vector::Zero(d);
  }
  if (choose(d, rank) > budget) throw EnumerationError("min_l1_interpolant: too many column subsets");
  const double scale = std::max(1.0, y.norm());
  Vector best;
  double best_norm = std::numeric_limits<double>::infinity();
  for_each_subset(d, rank, [&](const Support& supp) {
    const Matrix xs = select_columns(X, supp);
    Eigen::ColPivHouseholderQR<Matrix> qr(xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < rank) return true;
    const Vector coef = qr.solve(y);
    if ((xs * coef - y).norm() > 1e-9 * scale) return true;
    const double l1 = coef.lpNorm<1>();
    if (l1 < best_norm - 1e-14 * scale) {
      best_norm = l1;
      best = Vector::Zero(d);
      for (std::size_t k = 0; k < supp.size(); ++k) best(supp[k]) = coef(static_cast<Index>(k));
    }
    return true;
  });
  if (best.size() == 0) throw ParameterError("min_l1_interpolant: y is not in the column space of X");
  return best;
}

BasicInequalityCheck check_basic_inequality(const linmodel::ProblemInstance& instance, const EstimateResult& result) {
  const Matrix& X = instance.X;
  const Vector w = instance.noise();
  const Vector delta = result.beta_hat - instance.beta_star;
  const double n = static_cast<double>(X.rows());
  const Vector x_delta = X * delta;

  BasicInequalityCheck out;
  const double at_truth = w.squaredNorm();
  const double at_estimate = residual_objective(X, instance.y, result.beta_hat);
  const double slack = 1e-8 * std::max(1.0, at_truth);
  out.objective_ok = at_estimate <= at_truth + slack;
  out.lhs = x_delta.squaredNorm() / n;
  out.rhs = 2.0 * std::abs(w.dot(x_delta)) / n;
  out.eqn_basic_ok = out.lhs <= out.rhs + slack / n;
  return out;
}

}  // namespace lqminimax::estimators
