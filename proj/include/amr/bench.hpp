#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amr/estimators.hpp"
#include "amr/synthlab.hpp"

namespace amr {

struct Cell {
  Index n = 400;
  int p_i = 20;
};

struct ExperimentConfig {
  int reps = 200;
  std::vector<Index> grid_n = {400};
  std::vector<int> grid_p_i = {20};
  /// Template for the data draws; n, p_i and seed are set per replication.
  SimulationConfig simulation;
  std::vector<Method> estimators = {Method::ipw, Method::aipw, Method::mr, Method::amr};
  EstimatorConfig estimator;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;
  int workers = 1;
  /// Record wall time in the `seconds` column; off keeps output reproducible byte for byte.
  bool timing = false;

  void validate() const;
  /// Cartesian product, n-major.
  std::vector<Cell> cells() const;
};

/// One method's outcome within a replication.
struct MethodResult {
  std::string method;
  double theta_hat = 0.0;
  double truth = 0.0;
  std::optional<double> ci_lower, ci_upper;
};

struct ReplicationRecord {
  std::size_t cell = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<MethodResult> results;
  double seconds = 0.0;
};

using ReplicationFn = std::function<std::vector<MethodResult>(const Cell&, std::uint64_t seed, const ExperimentConfig&)>;

/// Suite replication: draws the block design, runs cfg.estimators on shared
/// nuisances, attaches the conservative interval to AMR and the efficient one elsewhere.
std::vector<MethodResult> suite_replication(const Cell& cell, std::uint64_t seed, const ExperimentConfig& cfg);

/// Coverage replication: rows AIPW, AMR:conservative and AMR:efficient.
std::vector<MethodResult> coverage_replication(const Cell& cell, std::uint64_t seed, const ExperimentConfig& cfg);

/// Runs every (cell, rep) on cfg.workers threads. Replication seeds are
/// derive_seed(master_seed, {cell, rep}), so records do not depend on scheduling.
std::vector<ReplicationRecord> run_replications(const ExperimentConfig& cfg, const ReplicationFn& fn);

struct MetricsRow {
  Index n = 0;
  int p_i = 0;
  std::string method;
  double bias = 0.0, mae = 0.0, rmse = 0.0;
  /// NaN when no replication produced an interval.
  double coverage = 0.0;
  double ci_length = 0.0;
  int reps = 0;
  int failures = 0;
  double seconds = 0.0;
  bool flagged = false;
  std::string flag_reason;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;

  bool any_flagged() const;
  const MetricsRow* find(Index n, int p_i, const std::string& method) const;
  /// Orders rows by (n, p_i, method).
  void sort();
};

/// Per-cell metrics over successful replications. A row is flagged when
/// failures exceed 1%, coverage is undefined, or an interval had infinite length.
MetricsTable aggregate(const ExperimentConfig& cfg, const std::vector<ReplicationRecord>& records);

MetricsTable run_monte_carlo(const ExperimentConfig& cfg, const ReplicationFn& fn = suite_replication);

/// run_monte_carlo with coverage_replication at level 1 - alpha.
MetricsTable coverage_experiment(ExperimentConfig cfg, double alpha, const ReplicationFn& fn = coverage_replication);

/// CSV: n,p_i,method,bias,mae,rmse,coverage,ci_length,reps,failures,seconds.
void export_results(const MetricsTable& table, const std::filesystem::path& path);
std::string format_results(const MetricsTable& table);

}  // namespace amr
