#include "amr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "amr/error.hpp"
#include "amr/inference.hpp"
#include "amr/rng.hpp"
#include "csv_util.hpp"

namespace amr {

void ExperimentConfig::validate() const {
  if (reps < 1) throw ArgumentError("experiment: reps must be at least 1");
  if (grid_n.empty() || grid_p_i.empty()) throw ArgumentError("experiment: grid must be non-empty");
  if (estimators.empty()) throw ArgumentError("experiment: estimator list is empty");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("experiment: alpha must lie in (0,1)");
  if (workers < 1) throw ArgumentError("experiment: workers must be at least 1");
  for (Index n : grid_n)
    if (n < 2) throw ArgumentError("experiment: grid n values must be at least 2");
  for (int p : grid_p_i)
    if (p < 0) throw ArgumentError("experiment: grid p_i values must be >= 0");
}

std::vector<Cell> ExperimentConfig::cells() const {
  std::vector<Cell> out;
  for (Index n : grid_n)
    for (int p : grid_p_i) out.push_back(Cell{n, p});
  return out;
}

namespace {

SyntheticDraw draw_cell(const Cell& cell, std::uint64_t seed, const ExperimentConfig& cfg) {
  SimulationConfig sim = cfg.simulation;
  sim.n = cell.n;
  sim.p_i = cell.p_i;
  sim.seed = derive_seed(seed, {0});
  return generate_synthetic(sim);
}

EstimatorConfig replication_estimator(std::uint64_t seed, const ExperimentConfig& cfg) {
  EstimatorConfig est = cfg.estimator;
  est.seed = derive_seed(seed, {1});
  return est;
}

MethodResult with_interval(std::string method, double truth, double theta, const ConfidenceInterval& ci) {
  return MethodResult{std::move(method), theta, truth, ci.lower, ci.upper};
}

}  // namespace

std::vector<MethodResult> suite_replication(const Cell& cell, std::uint64_t seed, const ExperimentConfig& cfg) {
  const SyntheticDraw draw = draw_cell(cell, seed, cfg);
  const auto reports = estimator_suite(draw.data, replication_estimator(seed, cfg), cfg.estimators);
  std::vector<MethodResult> out;
  for (const auto& r : reports) {
    const ConfidenceInterval ci = r.aipw_contributions ? conservative_interval(r, cfg.alpha).interval
                                                       : efficient_interval(r, cfg.alpha);
    out.push_back(with_interval(to_string(r.method), draw.theta, r.theta_hat, ci));
  }
  return out;
}

std::vector<MethodResult> coverage_replication(const Cell& cell, std::uint64_t seed, const ExperimentConfig& cfg) {
  const SyntheticDraw draw = draw_cell(cell, seed, cfg);
  const auto reports = estimator_suite(draw.data, replication_estimator(seed, cfg), {Method::aipw, Method::amr});
  const EstimateReport& aipw = reports[0];
  const EstimateReport& amr = reports[1];
  return {with_interval("AIPW", draw.theta, aipw.theta_hat, efficient_interval(aipw, cfg.alpha)),
          with_interval("AMR:conservative", draw.theta, amr.theta_hat, conservative_interval(amr, cfg.alpha).interval),
          with_interval("AMR:efficient", draw.theta, amr.theta_hat, efficient_interval(amr, cfg.alpha))};
}

std::vector<ReplicationRecord> run_replications(const ExperimentConfig& cfg, const ReplicationFn& fn) {
  cfg.validate();
  const std::vector<Cell> cells = cfg.cells();
  std::vector<ReplicationRecord> records(cells.size() * static_cast<std::size_t>(cfg.reps));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int r = 0; r < cfg.reps; ++r) {
      auto& rec = records[c * static_cast<std::size_t>(cfg.reps) + static_cast<std::size_t>(r)];
      rec.cell = c;
      rec.rep = r;
      rec.seed = derive_seed(cfg.master_seed, {c, static_cast<std::uint64_t>(r)});
    }
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      auto& rec = records[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        rec.results = fn(cells[rec.cell], rec.seed, cfg);
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const int W = std::min<int>(cfg.workers, static_cast<int>(records.size()));
  if (W <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < W; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return records;
}

MetricsTable aggregate(const ExperimentConfig& cfg, const std::vector<ReplicationRecord>& records) {
  const std::vector<Cell> cells = cfg.cells();
  struct Acc {
    std::vector<double> err;
    int with_ci = 0, hits = 0;
    double length = 0.0;
  };
  MetricsTable table;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::map<std::string, Acc> acc;
    int failures = 0;
    double seconds = 0.0;
    for (const auto& rec : records) {
      if (rec.cell != c) continue;
      seconds += rec.seconds;
      if (!rec.ok) {
        ++failures;
        continue;
      }
      for (const auto& m : rec.results) {
        Acc& a = acc[m.method];
        a.err.push_back(m.theta_hat - m.truth);
        if (m.ci_lower && m.ci_upper) {
          ++a.with_ci;
          a.hits += (*m.ci_lower <= m.truth && m.truth <= *m.ci_upper) ? 1 : 0;
          a.length += *m.ci_upper - *m.ci_lower;
        }
      }
    }
    const int attempted = failures + static_cast<int>(std::count_if(records.begin(), records.end(), [&](const auto& r) {
                            return r.cell == c && r.ok;
                          }));
    if (acc.empty()) {
      // Every replication failed: one row so the cell is visible and flagged.
      MetricsRow row;
      row.n = cells[c].n;
      row.p_i = cells[c].p_i;
      row.method = "*";
      row.bias = row.mae = row.rmse = row.coverage = row.ci_length = std::numeric_limits<double>::quiet_NaN();
      row.failures = failures;
      row.seconds = cfg.timing ? seconds : 0.0;
      row.flagged = true;
      row.flag_reason = "all replications failed";
      table.rows.push_back(row);
      continue;
    }
    for (const auto& [method, a] : acc) {
      MetricsRow row;
      row.n = cells[c].n;
      row.p_i = cells[c].p_i;
      row.method = method;
      const double k = double(a.err.size());
      double sum = 0.0, sum_abs = 0.0, sum_sq = 0.0;
      for (double e : a.err) {
        sum += e;
        sum_abs += std::abs(e);
        sum_sq += e * e;
      }
      row.bias = sum / k;
      row.mae = sum_abs / k;
      row.rmse = std::sqrt(sum_sq / k);
      row.reps = static_cast<int>(a.err.size());
      row.failures = attempted - row.reps;
      row.seconds = cfg.timing ? seconds : 0.0;
      if (a.with_ci > 0) {
        row.coverage = double(a.hits) / double(a.with_ci);
        row.ci_length = a.length / double(a.with_ci);
      } else {
        row.coverage = row.ci_length = std::numeric_limits<double>::quiet_NaN();
      }
      std::vector<std::string> reasons;
      if (double(row.failures) > 0.01 * double(attempted)) reasons.push_back("failures above 1%");
      if (a.with_ci == 0) reasons.push_back("coverage undefined");
      if (std::isinf(row.ci_length)) reasons.push_back("infinite interval length");
      row.flagged = !reasons.empty();
      for (std::size_t i = 0; i < reasons.size(); ++i) row.flag_reason += (i ? "; " : "") + reasons[i];
      table.rows.push_back(std::move(row));
    }
  }
  table.sort();
  return table;
}

bool MetricsTable::any_flagged() const {
  return std::any_of(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.flagged; });
}

const MetricsRow* MetricsTable::find(Index n, int p_i, const std::string& method) const {
  for (const auto& r : rows)
    if (r.n == n && r.p_i == p_i && r.method == method) return &r;
  return nullptr;
}

void MetricsTable::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.n, a.p_i, a.method) < std::tie(b.n, b.p_i, b.method);
  });
}

MetricsTable run_monte_carlo(const ExperimentConfig& cfg, const ReplicationFn& fn) {
  return aggregate(cfg, run_replications(cfg, fn));
}

MetricsTable coverage_experiment(ExperimentConfig cfg, double alpha, const ReplicationFn& fn) {
  cfg.alpha = alpha;
  return run_monte_carlo(cfg, fn);
}

std::string format_results(const MetricsTable& table) {
  using detail::format_double;
  MetricsTable sorted = table;
  sorted.sort();
  std::ostringstream out;
  out << "n,p_i,method,bias,mae,rmse,coverage,ci_length,reps,failures,seconds\n";
  for (const auto& r : sorted.rows) {
    out << r.n << ',' << r.p_i << ',' << r.method << ',' << format_double(r.bias) << ',' << format_double(r.mae)
        << ',' << format_double(r.rmse) << ',' << format_double(r.coverage) << ',' << format_double(r.ci_length)
        << ',' << r.reps << ',' << r.failures << ',' << format_double(r.seconds) << '\n';
  }
  return out.str();
}

void export_results(const MetricsTable& table, const std::filesystem::path& path) {
  if (table.rows.empty()) throw ArgumentError("export_results: table is empty");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_results(table);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace amr
