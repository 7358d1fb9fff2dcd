#include "lqminimax/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lqminimax::bounds {

namespace {

struct TheoremInfo {
  Theorem id;
  const char* name;
  double constant;  // NaN when the constant is generic
  const char* formula;
};

const TheoremInfo kTheorems[] = {
    {Theorem::kT1a, "T1a", std::numeric_limits<double>::quiet_NaN(),
     "c * max{diam, Rq * [sigma^2/kappa_c^2 * log(d)/n]^((p-q)/2)}"},
    {Theorem::kT1b, "T1b", std::numeric_limits<double>::quiet_NaN(),
     "c * max{diam, s^(p/2) * [sigma^2/kappa_u^2 * log(d/s)/n]^(p/2)}"},
    {Theorem::kT2a, "T2a", 24.0, "24 * Rq * [(kappa_c^2/kappa_l^2) * (sigma^2/kappa_l^2) * log(d)/n]^(1-q/2)"},
    {Theorem::kT2bPlain, "T2b_plain", 6.0, "6 * (kappa_c^2/kappa_l^2) * (sigma^2/kappa_l^2) * s * log(d)/n"},
    {Theorem::kT2bSharp, "T2b_sharp", 144.0, "144 * (kappa_u^2/kappa_l^2) * (sigma^2/kappa_l^2) * s * log(d/s)/n"},
    {Theorem::kT3a, "T3a", std::numeric_limits<double>::quiet_NaN(),
     "c * Rq * kappa_l^2 * [sigma^2/kappa_c^2 * log(d)/n]^(1-q/2)"},
    {Theorem::kT3b, "T3b", std::numeric_limits<double>::quiet_NaN(),
     "c * kappa_l^2 * sigma^2/kappa_u^2 * s * log(d/s)/n"},
    {Theorem::kT4a, "T4a", std::numeric_limits<double>::quiet_NaN(),
     "c * kappa_c^2 * Rq * [sigma^2/kappa_c^2 * log(d)/n]^(1-q/2)"},
    {Theorem::kT4b, "T4b", 81.0, "81 * sigma^2 * s * log(d/s)/n"},
    {Theorem::kCor1, "Cor1", std::numeric_limits<double>::quiet_NaN(), "c * [2 tau^2 log(n)/n]^(1-q/2)"},
};

const TheoremInfo& info(Theorem t) {
  for (const auto& entry : kTheorems)
    if (entry.id == t) return entry;
  throw ParameterError("unknown theorem");
}

class Inputs {
 public:
  explicit Inputs(const RateQuery& q) : q_(q) {}

  double positive(double v, const char* name) const {
    if (std::isnan(v)) throw ParameterError(std::string(theorem_name(q_.theorem)) + ": missing parameter " + name);
    if (!(v > 0.0)) throw ParameterError(std::string(theorem_name(q_.theorem)) + ": parameter " + name + " must be > 0");
    return v;
  }
  double exponent_q(bool allow_zero) const {
    if (std::isnan(q_.q)) throw ParameterError(std::string(theorem_name(q_.theorem)) + ": missing parameter q");
    if (q_.q > 1.0 || q_.q < 0.0 || (!allow_zero && q_.q == 0.0))
      throw ParameterError(std::string(theorem_name(q_.theorem)) + ": q must lie in " + (allow_zero ? "[0,1]" : "(0,1]"));
    return q_.q;
  }
  double log_d_over_n() const {
    const double d = positive(q_.d, "d");
    if (!(d > 1.0)) throw ParameterError(std::string(theorem_name(q_.theorem)) + ": requires d > 1");
    return std::log(std::log(d)) - std::log(positive(q_.n, "n"));
  }
  // log of log(d/s)/n, requiring d > s.
  double log_ds_over_n(double s) const {
    const double d = positive(q_.d, "d");
    if (!(d > s)) throw ParameterError(std::string(theorem_name(q_.theorem)) + ": requires d > s");
    return std::log(std::log(d / s)) - std::log(positive(q_.n, "n"));
  }

 private:
  const RateQuery& q_;
};

}  // namespace

std::string theorem_name(Theorem t) { return info(t).name; }

Theorem parse_theorem(const std::string& name) {
  for (const auto& entry : kTheorems)
    if (name == entry.name) return entry.id;
  throw ParameterError("unknown theorem '" + name + "'");
}

RateQuery RateQuery::from_params(Theorem theorem, const std::map<std::string, double>& params) {
  RateQuery query;
  query.theorem = theorem;
  for (const auto& [key, value] : params) {
    if (key == "n") query.n = value;
    else if (key == "d") query.d = value;
    else if (key == "q") query.q = value;
    else if (key == "Rq" || key == "s") query.rq_or_s = value;
    else if (key == "sigma") query.sigma = value;
    else if (key == "kappa_c") query.kappa_c = value;
    else if (key == "kappa_u") query.kappa_u = value;
    else if (key == "kappa_l") query.kappa_l = value;
    else if (key == "p") query.p = value;
    else if (key == "diam") query.diam_term = value;
    else if (key == "tau") query.tau = value;
    else if (key == "c") query.constants["c"] = value;
    else throw ParameterError("unknown rate parameter '" + key + "'");
  }
  return query;
}

RateValue evaluate_rate(const RateQuery& query) {
  const TheoremInfo& th = info(query.theorem);
  const Inputs in(query);
  RateValue out;
  out.formula = th.formula;

  double log_c;
  if (std::isnan(th.constant)) {
    auto it = query.constants.find("c");
    double c;
    if (it != query.constants.end()) {
      c = it->second;
    } else if (query.use_default_constants) {
      c = 1.0;
    } else {
      throw ParameterError(std::string(th.name) +
                           ": the constant is not numerically specified; supply constants[\"c\"] explicitly");
    }
    if (!(c > 0.0)) throw ParameterError(std::string(th.name) + ": constant c must be > 0");
    out.constants_used["c"] = c;
    log_c = std::log(c);
  } else {
    out.constants_used["c"] = th.constant;
    log_c = std::log(th.constant);
  }

  auto log_sq = [](double v) { return 2.0 * std::log(v); };
  double log_main = 0.0;
  double diam = 0.0;
  switch (query.theorem) {
    case Theorem::kT1a: {
      const double q = in.exponent_q(false);
      const double p = in.positive(query.p, "p");
      if (p < 1.0) throw ParameterError("T1a: p must be >= 1");
      const double base = log_sq(in.positive(query.sigma, "sigma")) - log_sq(in.positive(query.kappa_c, "kappa_c")) +
                          in.log_d_over_n();
      log_main = std::log(in.positive(query.rq_or_s, "Rq")) + 0.5 * (p - q) * base;
      diam = query.diam_term;
      break;
    }
    case Theorem::kT1b: {
      const double s = in.positive(query.rq_or_s, "s");
      const double p = in.positive(query.p, "p");
      if (p < 1.0) throw ParameterError("T1b: p must be >= 1");
      const double base = log_sq(in.positive(query.sigma, "sigma")) - log_sq(in.positive(query.kappa_u, "kappa_u")) +
                          in.log_ds_over_n(s);
      log_main = 0.5 * p * std::log(s) + 0.5 * p * base;
      diam = query.diam_term;
      break;
    }
    case Theorem::kT2a: {
      const double q = in.exponent_q(true);
      const double kl = in.positive(query.kappa_l, "kappa_l");
      const double base = log_sq(in.positive(query.kappa_c, "kappa_c")) - log_sq(kl) +
                          log_sq(in.positive(query.sigma, "sigma")) - log_sq(kl) + in.log_d_over_n();
      log_main = std::log(in.positive(query.rq_or_s, "Rq")) + (1.0 - 0.5 * q) * base;
      break;
    }
    case Theorem::kT2bPlain: {
      const double kl = in.positive(query.kappa_l, "kappa_l");
      log_main = log_sq(in.positive(query.kappa_c, "kappa_c")) - log_sq(kl) +
                 log_sq(in.positive(query.sigma, "sigma")) - log_sq(kl) +
                 std::log(in.positive(query.rq_or_s, "s")) + in.log_d_over_n();
      break;
    }
    case Theorem::kT2bSharp: {
      const double kl = in.positive(query.kappa_l, "kappa_l");
      const double s = in.positive(query.rq_or_s, "s");
      log_main = log_sq(in.positive(query.kappa_u, "kappa_u")) - log_sq(kl) +
                 log_sq(in.positive(query.sigma, "sigma")) - log_sq(kl) + std::log(s) + in.log_ds_over_n(s);
      break;
    }
    case Theorem::kT3a: {
      const double q = in.exponent_q(true);
      const double base = log_sq(in.positive(query.sigma, "sigma")) - log_sq(in.positive(query.kappa_c, "kappa_c")) +
                          in.log_d_over_n();
      log_main = std::log(in.positive(query.rq_or_s, "Rq")) + log_sq(in.positive(query.kappa_l, "kappa_l")) +
                 (1.0 - 0.5 * q) * base;
      break;
    }
    case Theorem::kT3b: {
      const double s = in.positive(query.rq_or_s, "s");
      log_main = log_sq(in.positive(query.kappa_l, "kappa_l")) + log_sq(in.positive(query.sigma, "sigma")) -
                 log_sq(in.positive(query.kappa_u, "kappa_u")) + std::log(s) + in.log_ds_over_n(s);
      break;
    }
    case Theorem::kT4a: {
      const double q = in.exponent_q(true);
      const double kc = in.positive(query.kappa_c, "kappa_c");
      const double base = log_sq(in.positive(query.sigma, "sigma")) - log_sq(kc) + in.log_d_over_n();
      log_main = log_sq(kc) + std::log(in.positive(query.rq_or_s, "Rq")) + (1.0 - 0.5 * q) * base;
      break;
    }
    case Theorem::kT4b: {
      const double s = in.positive(query.rq_or_s, "s");
      log_main = log_sq(in.positive(query.sigma, "sigma")) + std::log(s) + in.log_ds_over_n(s);
      break;
    }
    case Theorem::kCor1: {
      const double q = in.exponent_q(true);
      const double n = in.positive(query.n, "n");
      if (!(n > 1.0)) throw ParameterError("Cor1: requires n > 1");
      const double base = std::log(2.0) + log_sq(in.positive(query.tau, "tau")) + std::log(std::log(n)) - std::log(n);
      log_main = (1.0 - 0.5 * q) * base;
      break;
    }
  }
  if (diam < 0.0) throw ParameterError(std::string(th.name) + ": diam must be >= 0");
  const double main = std::exp(log_c + log_main);
  out.value = diam > 0.0 ? std::exp(log_c) * std::max(diam, std::exp(log_main)) : main;
  return out;
}

double fano_error_bound(const FanoParams& params) {
  if (!(params.log_pack > 0.0)) throw ParameterError("fano_error_bound: log_pack must be > 0");
  if (!(params.sigma > 0.0)) throw ParameterError("fano_error_bound: sigma must be > 0");
  const double info = params.c_route * params.n * params.kappa_c * params.kappa_c * params.epsilon_n *
                      params.epsilon_n / (params.sigma * params.sigma);
  const double raw = 1.0 - (params.log_cover + info + std::log(2.0)) / params.log_pack;
  return std::clamp(raw, 0.0, 1.0);
}

ChiSquareTails chi_square_tails(double m, double x) {
  if (!(m >= 1.0)) throw ParameterError("chi_square_tails: m must be >= 1");
  if (!(x > 0.0)) throw ParameterError("chi_square_tails: x must be > 0");
  ChiSquareTails out;
  out.m = m;
  out.x = x;
  out.upper_threshold = 2.0 * std::sqrt(m * x) + 2.0 * x;
  out.upper_dev_bound = std::exp(-x);
  out.lower_threshold = 2.0 * std::sqrt(m * x);
  out.lower_dev_bound = std::exp(-x);
  out.t = x;
  out.simplified_4t_bound = std::exp(-m * x);
  out.simplified_valid = x >= 1.0;
  return out;
}

double sup_correlation_exact(const Matrix& X, const Vector& w, Index s, double r) {
  if (X.rows() != w.size()) throw DimensionError("sup_correlation_exact: w length does not match X");
  if (s < 1) throw ParameterError("sup_correlation_exact: s must be >= 1");
  if (!(r >= 0.0)) throw ParameterError("sup_correlation_exact: r must be >= 0");
  Vector sq = (X.transpose() * w).array().square();
  const Index k = std::min<Index>(2 * s, sq.size());
  std::sort(sq.data(), sq.data() + sq.size(), std::greater<double>());
  return r / static_cast<double>(X.rows()) * std::sqrt(sq.head(k).sum());
}

double sup_correlation_pred_exact(const Matrix& X, const Vector& w, Index s, double r, double budget) {
  if (X.rows() != w.size()) throw DimensionError("sup_correlation_pred_exact: w length does not match X");
  if (s < 1) throw ParameterError("sup_correlation_pred_exact: s must be >= 1");
  if (!(r >= 0.0)) throw ParameterError("sup_correlation_pred_exact: r must be >= 0");
  const Index d = X.cols();
  const Index k = std::min<Index>(2 * s, d);
  if (choose(d, k) > budget) throw EnumerationError("sup_correlation_pred_exact: too many supports for the budget");
  double best = 0.0;
  for_each_subset(d, k, [&](const Support& supp) {
    Eigen::ColPivHouseholderQR<Matrix> qr(select_columns(X, supp));
    qr.setThreshold(1e-10);
    const Index rank = qr.rank();
    if (rank == 0) return true;
    const Matrix q = qr.householderQ() * Matrix::Identity(X.rows(), rank);
    best = std::max(best, (q.transpose() * w).norm());
    return true;
  });
  return r * best / std::sqrt(static_cast<double>(X.rows()));
}

double sup_correlation_bound(double sigma, double r, double kappa_u, Index s, Index d, Index n) {
  if (s < 1 || d <= s || n < 1) throw ParameterError("sup_correlation_bound: requires 1 <= s < d and n >= 1");
  return 6.0 * sigma * r * kappa_u *
         std::sqrt(static_cast<double>(s) * std::log(static_cast<double>(d) / static_cast<double>(s)) / static_cast<double>(n));
}

double sup_correlation_pred_bound(double sigma, double r, Index s, Index d, Index n) {
  if (s < 1 || d <= s || n < 1) throw ParameterError("sup_correlation_pred_bound: requires 1 <= s < d and n >= 1");
  return 9.0 * r * sigma *
         std::sqrt(static_cast<double>(s) * std::log(static_cast<double>(d) / static_cast<double>(s)) / static_cast<double>(n));
}

LogBinomial log_binomial(Index d, Index s) {
  if (s < 0 || s > d) throw ParameterError("log_binomial: requires 0 <= s <= d");
  LogBinomial out;
  out.value = log_choose(d, s);
  if (s > 0) {
    const double ratio = static_cast<double>(d) / static_cast<double>(s);
    out.lower = static_cast<double>(s) * std::log(ratio);
    out.upper = static_cast<double>(s) * (std::log(ratio) + 1.0);
  }
  return out;
}

}  // namespace lqminimax::bounds
