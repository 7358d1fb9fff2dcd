#include "lqminimax/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lqminimax::io {

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("expected a JSON array for a vector");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw IoError("expected a non-empty JSON array of rows for a matrix");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw IoError("matrix rows have unequal lengths");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

Json to_json(const BallSpec& ball) { return {{"q", ball.q}, {"radius", ball.radius}}; }

BallSpec ball_from_json(const Json& j) {
  BallSpec b;
  b.q = j.value("q", 0.0);
  b.radius = j.value("radius", 1.0);
  b.validate();
  return b;
}

namespace {

std::string design_kind_name(linmodel::DesignKind k) {
  switch (k) {
    case linmodel::DesignKind::kExplicit: return "explicit";
    case linmodel::DesignKind::kStandardGaussian: return "standard_gaussian";
    case linmodel::DesignKind::kCorrelatedGaussian: return "correlated_gaussian";
    case linmodel::DesignKind::kIdentitySequence: return "identity";
  }
  return "unknown";
}

linmodel::DesignKind parse_design_kind(const std::string& s) {
  if (s == "standard_gaussian") return linmodel::DesignKind::kStandardGaussian;
  if (s == "correlated_gaussian") return linmodel::DesignKind::kCorrelatedGaussian;
  if (s == "identity") return linmodel::DesignKind::kIdentitySequence;
  if (s == "explicit") return linmodel::DesignKind::kExplicit;
  throw ParameterError("unknown design kind '" + s + "'");
}

std::string pattern_name(linmodel::BetaPatternKind k) {
  switch (k) {
    case linmodel::BetaPatternKind::kRandomSupport: return "random_support";
    case linmodel::BetaPatternKind::kFirstCoordinates: return "first_coordinates";
    case linmodel::BetaPatternKind::kExplicit: return "explicit";
  }
  return "unknown";
}

linmodel::BetaPatternKind parse_pattern(const std::string& s) {
  if (s == "random_support") return linmodel::BetaPatternKind::kRandomSupport;
  if (s == "first_coordinates") return linmodel::BetaPatternKind::kFirstCoordinates;
  throw ParameterError("unknown beta pattern '" + s + "'");
}

linmodel::LossSpec parse_loss(const std::string& s) {
  if (s == "pred") return linmodel::LossSpec::prediction();
  if (s == "l2") return linmodel::LossSpec::lp(2.0);
  if (s == "l1") return linmodel::LossSpec::lp(1.0);
  if (s.rfind("lp:", 0) == 0) return linmodel::LossSpec::lp(std::stod(s.substr(3)));
  throw ParameterError("unknown loss '" + s + "'");
}

std::string loss_key(const linmodel::LossSpec& l) {
  if (l.kind == linmodel::LossSpec::Kind::kL2Prediction) return "pred";
  if (l.p == 2.0) return "l2";
  if (l.p == 1.0) return "l1";
  std::ostringstream os;
  os << "lp:" << std::setprecision(17) << l.p;
  return os.str();
}

const char* metric_name(ballgeom::Metric m) {
  switch (m) {
    case ballgeom::Metric::kL2: return "l2";
    case ballgeom::Metric::kLp: return "lp";
    case ballgeom::Metric::kHamming: return "hamming";
  }
  return "unknown";
}

Json cells_json(const std::vector<std::pair<Index, Index>>& cells) {
  Json out = Json::array();
  for (const auto& [n, d] : cells) out.push_back({{"n", n}, {"d", d}});
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Json to_json(const harness::ExperimentConfig& c) {
  Json design = {{"kind", design_kind_name(c.design_kind)}};
  if (c.design_kind == linmodel::DesignKind::kCorrelatedGaussian) design["covariance"] = to_json(c.covariance);
  Json d_rule = c.d_rule.kind == harness::DRule::Kind::kFixed ? Json{{"kind", "fixed"}, {"d", c.d_rule.d}}
                                                              : Json{{"kind", "proportional"}, {"ratio", c.d_rule.ratio}};
  Json losses = Json::array();
  for (const auto& l : c.losses) losses.push_back(loss_key(l));
  return {
      {"design", design},
      {"ball", to_json(c.ball)},
      {"sigma", c.sigma},
      {"n_grid", c.n_grid},
      {"d_rule", d_rule},
      {"trials_per_cell", c.trials_per_cell},
      {"estimator",
       {{"kind", harness::estimator_name(c.estimator.kind)},
        {"s", c.estimator.s},
        {"radius", c.estimator.radius},
        {"lambda", c.estimator.lambda},
        {"max_iter", c.estimator.max_iter},
        {"rel_tol", c.estimator.rel_tol},
        {"l0_workers", c.estimator.l0_workers}}},
      {"losses", losses},
      {"seed_root", c.seed_root},
      {"scaling_check", {{"kappa_exponent", c.scaling_check.kappa_exponent}, {"enforce", c.scaling_check.enforce}}},
      {"beta",
       {{"pattern", pattern_name(c.beta_pattern)},
        {"scale",
         {{"kind", c.beta_scale.kind == harness::BetaScale::Kind::kFixed ? "fixed" : "noise_level"},
          {"value", c.beta_scale.value}}}}},
      {"workers", c.workers},
  };
}

harness::ExperimentConfig config_from_json(const Json& j) {
  harness::ExperimentConfig c;
  try {
    if (j.contains("design")) {
      const Json& d = j["design"];
      c.design_kind = parse_design_kind(d.value("kind", std::string("standard_gaussian")));
      if (d.contains("covariance")) c.covariance = matrix_from_json(d["covariance"]);
      if (d.contains("covariance_diag")) c.covariance = vector_from_json(d["covariance_diag"]).asDiagonal();
    }
    if (j.contains("ball")) c.ball = ball_from_json(j["ball"]);
    c.sigma = j.value("sigma", c.sigma);
    if (j.contains("n_grid")) c.n_grid = j["n_grid"].get<std::vector<Index>>();
    if (j.contains("d_rule")) {
      const Json& r = j["d_rule"];
      const std::string kind = r.value("kind", std::string("fixed"));
      if (kind == "fixed") {
        c.d_rule.kind = harness::DRule::Kind::kFixed;
        c.d_rule.d = r.value("d", Index{0});
      } else if (kind == "proportional") {
        c.d_rule.kind = harness::DRule::Kind::kProportional;
        c.d_rule.ratio = r.value("ratio", 1.0);
      } else {
        throw ParameterError("unknown d_rule kind '" + kind + "'");
      }
    }
    c.trials_per_cell = j.value("trials_per_cell", c.trials_per_cell);
    if (j.contains("estimator")) {
      const Json& e = j["estimator"];
      c.estimator.kind = harness::parse_estimator(e.value("kind", std::string("l0")));
      c.estimator.s = e.value("s", c.estimator.s);
      c.estimator.radius = e.value("radius", c.estimator.radius);
      c.estimator.lambda = e.value("lambda", c.estimator.lambda);
      c.estimator.max_iter = e.value("max_iter", c.estimator.max_iter);
      c.estimator.rel_tol = e.value("rel_tol", c.estimator.rel_tol);
      c.estimator.l0_workers = e.value("l0_workers", c.estimator.l0_workers);
    }
    if (j.contains("losses"))
      for (const auto& l : j["losses"]) c.losses.push_back(parse_loss(l.get<std::string>()));
    c.seed_root = j.value("seed_root", c.seed_root);
    if (j.contains("scaling_check")) {
      c.scaling_check.kappa_exponent = j["scaling_check"].value("kappa_exponent", 0.0);
      c.scaling_check.enforce = j["scaling_check"].value("enforce", false);
    }
    if (j.contains("beta")) {
      const Json& b = j["beta"];
      c.beta_pattern = parse_pattern(b.value("pattern", std::string("random_support")));
      if (b.contains("scale")) {
        const std::string kind = b["scale"].value("kind", std::string("fixed"));
        if (kind == "fixed") c.beta_scale.kind = harness::BetaScale::Kind::kFixed;
        else if (kind == "noise_level") c.beta_scale.kind = harness::BetaScale::Kind::kNoiseLevel;
        else throw ParameterError("unknown beta scale kind '" + kind + "'");
        c.beta_scale.value = b["scale"].value("value", 1.0);
      }
    }
    c.workers = j.value("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const linmodel::ProblemInstance& inst) {
  return {{"n", inst.n()},
          {"d", inst.d()},
          {"sigma", inst.sigma},
          {"seed", inst.seed},
          {"ball", to_json(inst.ball)},
          {"beta_star", to_json(inst.beta_star)},
          {"y", to_json(inst.y)}};
}

Json to_json(const estimators::EstimateResult& r) {
  Json out = {{"method", r.method},
              {"beta_hat", to_json(r.beta_hat)},
              {"objective", r.objective},
              {"support", r.support},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"feasible", r.feasible},
              {"duality_gap", r.duality_gap},
              {"kkt_residual", r.kkt_residual},
              {"skipped_columns", r.skipped_columns}};
  if (!r.objective_trace.empty()) out["objective_trace"] = r.objective_trace;
  return out;
}

Json to_json(const conditions::DesignDiagnostics& g) {
  const double diam = g.diam2_estimate;
  return {{"n", g.n},
          {"d", g.d},
          {"s", g.s},
          {"ball", to_json(g.ball)},
          {"kappa_c", g.kappa_c},
          {"kappa_l", g.kappa_l},
          {"kappa_u", g.kappa_u},
          {"spectrum_level", g.spectrum_level},
          {"f_l", {{"name", g.f_l.name}, {"params", g.f_l.params}}},
          {"re_constant", {{"value", g.re.value}, {"method", g.re.tag()}, {"c0", g.re_c0},
                           {"directions", g.re.directions_evaluated}}},
          {"kernel_trivial", g.kernel_trivial},
          {"diam2_estimate", std::isinf(diam) ? Json("inf") : Json(diam)}};
}

Json to_json(const conditions::Prop1Report& r) {
  return {{"checks", r.checks},
          {"lower_violations", r.lower_violations},
          {"upper_violations", r.upper_violations},
          {"worst_lower_margin", r.worst_lower_margin},
          {"worst_upper_margin", r.worst_upper_margin}};
}

Json to_json(const ballgeom::PackingResult& p) {
  Json points = Json::array();
  for (const auto& v : p.points) points.push_back(to_json(v));
  return {{"metric", metric_name(p.metric)},
          {"p", p.p},
          {"delta", p.delta},
          {"cardinality", p.size()},
          {"min_distance", std::isinf(p.min_pairwise_distance) ? Json("inf") : Json(p.min_pairwise_distance)},
          {"points", points}};
}

Json to_json(const harness::TrialRecord& r) {
  return {{"n", r.n},
          {"d", r.d},
          {"trial", r.trial},
          {"seed", r.seed},
          {"loss_l2", r.loss_l2},
          {"loss_pred", r.loss_pred},
          {"extra_losses", r.extra_losses},
          {"objective_ok", r.objective_ok},
          {"wall_ms", r.wall_ms}};
}

harness::TrialRecord record_from_json(const Json& j) {
  harness::TrialRecord r;
  try {
    r.n = j.at("n").get<Index>();
    r.d = j.at("d").get<Index>();
    r.trial = j.at("trial").get<Index>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.loss_l2 = j.at("loss_l2").get<double>();
    r.loss_pred = j.at("loss_pred").get<double>();
    if (j.contains("extra_losses")) r.extra_losses = j["extra_losses"].get<std::map<std::string, double>>();
    r.objective_ok = j.at("objective_ok").get<bool>();
    r.wall_ms = j.at("wall_ms").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed trial record: ") + e.what());
  }
  return r;
}

Json to_json(const harness::RateFitResult& f) {
  Json cells = Json::array();
  for (const auto& c : f.cells)
    cells.push_back({{"n", c.n},
                     {"d", c.d},
                     {"count", c.count},
                     {"trimmed_mean", c.trimmed_mean},
                     {"raw_mean", c.raw_mean},
                     {"predictor", c.predictor}});
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"n_points", f.n_points},
          {"loss_kind", f.loss_kind},
          {"predictor", f.predictor},
          {"theoretical_slope", f.theoretical_slope},
          {"cells", cells},
          {"zero_cells", cells_json(f.zero_cells)}};
}

Json to_json(const harness::CounterexampleReport& r) {
  return {{"delta_in_kernel", r.delta_in_kernel},
          {"delta_in_cone_not_sparse", r.delta_in_cone_not_sparse},
          {"l0_recovers", r.l0_recovers},
          {"l1_interpolant_ok", r.l1_interpolant_ok},
          {"all_ok", r.all_ok()},
          {"l0_estimate", to_json(r.l0_estimate)},
          {"l0_error", r.l0_error},
          {"l1_interpolant", to_json(r.l1_interpolant)},
          {"l1_interpolant_norm", r.l1_interpolant_norm},
          {"elapsed_ms", r.elapsed_ms}};
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw ParameterError("unknown format '" + name + "' (expected csv or json)");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return ss.str();
}

void write_text(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

std::string meta_comment(const FileMeta& meta) {
  return "# config_hash=" + meta.config_hash + " seed_root=" + std::to_string(meta.seed_root) + "\n";
}

FileMeta parse_meta_comment(const std::string& line) {
  FileMeta meta;
  std::istringstream ss(line.substr(1));
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "config_hash") meta.config_hash = val;
    else if (key == "seed_root") meta.seed_root = std::stoull(val);
  }
  return meta;
}

}  // namespace

void persist_records(const std::vector<harness::TrialRecord>& records, const std::string& path, Format format,
                     const FileMeta& meta) {
  if (format == Format::kJson) {
    Json arr = Json::array();
    for (const auto& r : records) arr.push_back(to_json(r));
    const Json doc = {{"config_hash", meta.config_hash}, {"seed_root", meta.seed_root}, {"records", arr}};
    write_text(path, doc.dump(2) + "\n");
    return;
  }
  std::string out = meta_comment(meta);
  out += "n,d,trial,seed,loss_l2,loss_pred,objective_ok,wall_ms\n";
  for (const auto& r : records) {
    out += std::to_string(r.n) + "," + std::to_string(r.d) + "," + std::to_string(r.trial) + "," +
           std::to_string(r.seed) + "," + format_double(r.loss_l2) + "," + format_double(r.loss_pred) + "," +
           (r.objective_ok ? "1" : "0") + "," + format_double(r.wall_ms) + "\n";
  }
  write_text(path, out);
}

std::pair<std::vector<harness::TrialRecord>, FileMeta> load_records(const std::string& path, Format format) {
  const std::string text = read_text(path);
  std::vector<harness::TrialRecord> records;
  FileMeta meta;
  if (format == Format::kJson) {
    Json doc;
    try {
      doc = Json::parse(text);
      meta.config_hash = doc.at("config_hash").get<std::string>();
      meta.seed_root = doc.at("seed_root").get<std::uint64_t>();
      for (const auto& r : doc.at("records")) records.push_back(record_from_json(r));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed records file '" + path + "': " + e.what());
    }
    return {records, meta};
  }
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      meta = parse_meta_comment(line);
      continue;
    }
    if (!header_seen) {
      if (line != "n,d,trial,seed,loss_l2,loss_pred,objective_ok,wall_ms")
        throw IoError("unexpected CSV header in '" + path + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw IoError("malformed CSV row in '" + path + "': " + line);
    harness::TrialRecord r;
    r.n = std::stoll(f[0]);
    r.d = std::stoll(f[1]);
    r.trial = std::stoll(f[2]);
    r.seed = std::stoull(f[3]);
    r.loss_l2 = std::stod(f[4]);
    r.loss_pred = std::stod(f[5]);
    r.objective_ok = f[6] == "1";
    r.wall_ms = std::stod(f[7]);
    records.push_back(r);
  }
  return {records, meta};
}

void persist_json(const Json& data, const std::string& kind, const std::string& path, const FileMeta& meta) {
  const Json doc = {{"config_hash", meta.config_hash}, {"seed_root", meta.seed_root}, {"kind", kind}, {"data", data}};
  write_text(path, doc.dump(2) + "\n");
}

void persist_packing(const ballgeom::PackingResult& packing, const std::string& path, const FileMeta& meta) {
  std::string out = meta_comment(meta);
  for (const auto& v : packing.points) {
    for (Index i = 0; i < v.size(); ++i) {
      if (i > 0) out += ",";
      out += format_double(v(i));
    }
    out += "\n";
  }
  write_text(path, out);
  Json sidecar = to_json(packing);
  sidecar.erase("points");
  persist_json(sidecar, "packing", path + ".json", meta);
}

void write_fit_svg(const harness::RateFitResult& fit, const std::string& path) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& c : fit.cells)
    if (c.trimmed_mean > 0.0 && c.predictor > 0.0) pts.emplace_back(std::log(c.predictor), std::log(c.trimmed_mean));
  if (pts.empty()) throw ParameterError("write_fit_svg: nothing to plot");
  double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
  for (const auto& [x, y] : pts) {
    x0 = std::min(x0, x); x1 = std::max(x1, x);
    y0 = std::min(y0, y); y1 = std::max(y1, y);
  }
  const double pad_x = std::max(0.1, 0.08 * (x1 - x0));
  const double pad_y = std::max(0.1, 0.08 * (y1 - y0));
  x0 -= pad_x; x1 += pad_x; y0 -= pad_y; y1 += pad_y;
  constexpr double kW = 480, kH = 360, kM = 50;
  auto sx = [&](double x) { return kM + (x - x0) / (x1 - x0) * (kW - 2 * kM); };
  auto sy = [&](double y) { return kH - kM - (y - y0) / (y1 - y0) * (kH - 2 * kM); };
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << kM << "\" y1=\"" << kH - kM << "\" x2=\"" << kW - kM << "\" y2=\"" << kH - kM
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kM << "\" y1=\"" << kM << "\" x2=\"" << kM << "\" y2=\"" << kH - kM << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << sx(x0) << "\" y1=\"" << sy(fit.intercept + fit.slope * x0) << "\" x2=\"" << sx(x1)
     << "\" y2=\"" << sy(fit.intercept + fit.slope * x1) << "\" stroke=\"steelblue\"/>\n";
  for (const auto& [x, y] : pts) os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"4\" fill=\"crimson\"/>\n";
  os << "<text x=\"" << kM << "\" y=\"20\" font-size=\"13\">log mean " << fit.loss_kind << " vs log " << fit.predictor
     << ": slope " << fit.slope << ", r2 " << fit.r_squared << "</text>\n";
  os << "</svg>\n";
  write_text(path, os.str());
}

Matrix load_design(const std::string& path) {
  const std::string text = read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    try {
      const Json j = Json::parse(text);
      return matrix_from_json(j.is_object() ? j.at("X") : j);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed design JSON '" + path + "': " + e.what());
    }
  }
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("non-numeric entry '" + cell + "' in design CSV '" + path + "'");
      }
    }
    if (!rows.empty() && row.size() != rows[0].size()) throw IoError("ragged rows in design CSV '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("design CSV '" + path + "' is empty");
  Matrix X(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) X(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
  return X;
}

}  // namespace lqminimax::io
