#pragma once

// JSON and CSV persistence for configs, instances, results and diagnostics.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lqminimax/ballgeom.hpp"
#include "lqminimax/conditions.hpp"
#include "lqminimax/estimators.hpp"
#include "lqminimax/harness.hpp"
#include "lqminimax/linmodel.hpp"

namespace lqminimax::io {

using Json = nlohmann::json;

Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);
/// Row-major array of arrays.
Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const BallSpec& ball);
BallSpec ball_from_json(const Json& j);

/**
 * Experiment config keys: design {kind, covariance | covariance_diag}, ball
 * {q, radius}, sigma, n_grid, d_rule {kind: fixed|proportional, d | ratio},
 * trials_per_cell, estimator {kind, s, radius, lambda, max_iter, rel_tol,
 * l0_workers}, losses [l2, pred, l1, lp:<p>], seed_root, scaling_check
 * {kappa_exponent, enforce}, beta {pattern, scale {kind: fixed|noise_level,
 * value}}, workers. Missing keys take the struct defaults.
 */
Json to_json(const harness::ExperimentConfig& config);
harness::ExperimentConfig config_from_json(const Json& j);

Json to_json(const linmodel::ProblemInstance& instance);
Json to_json(const estimators::EstimateResult& result);
Json to_json(const conditions::DesignDiagnostics& diag);
Json to_json(const conditions::Prop1Report& report);
Json to_json(const ballgeom::PackingResult& packing);
Json to_json(const harness::TrialRecord& record);
harness::TrialRecord record_from_json(const Json& j);
Json to_json(const harness::RateFitResult& fit);
Json to_json(const harness::CounterexampleReport& report);

/// Provenance carried by every output file.
struct FileMeta {
  std::string config_hash = "none";
  std::uint64_t seed_root = 0;
};

enum class Format { kCsv, kJson };
Format parse_format(const std::string& name);

/// CSV: a "# config_hash=<h> seed_root=<s>" line, then the header
/// n,d,trial,seed,loss_l2,loss_pred,objective_ok,wall_ms. JSON: an object with
/// config_hash, seed_root and records.
void persist_records(const std::vector<harness::TrialRecord>& records, const std::string& path, Format format,
                     const FileMeta& meta);
std::pair<std::vector<harness::TrialRecord>, FileMeta> load_records(const std::string& path, Format format);

/// Writes {config_hash, seed_root, kind, data} with 2-space indentation.
void persist_json(const Json& data, const std::string& kind, const std::string& path, const FileMeta& meta);

/// Points as CSV (one row per point) plus a JSON sidecar at path + ".json"
/// with metric, delta, cardinality and min_distance.
void persist_packing(const ballgeom::PackingResult& packing, const std::string& path, const FileMeta& meta);

/// Log-log scatter of the cell means with the fitted line.
void write_fit_svg(const harness::RateFitResult& fit, const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& contents);

/// Design from JSON (array of rows, or an object with key "X") or headerless CSV.
Matrix load_design(const std::string& path);

}  // namespace lqminimax::io
