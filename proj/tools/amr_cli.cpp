// Command-line front end: estimate, simulate, diagnose, bench, oracle.
#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "amr/bench.hpp"
#include "amr/config.hpp"
#include "amr/dataset.hpp"
#include "amr/diagnostics.hpp"
#include "amr/error.hpp"
#include "amr/estimators.hpp"
#include "amr/inference.hpp"
#include "amr/synthlab.hpp"

namespace {

using namespace amr;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

struct InputOptions {
  std::string input;
  std::string y_col = "y", a_col = "a", x_cols = "x*";

  void add(CLI::App* cmd) {
    cmd->add_option("--input", input, "Observation CSV")->required();
    cmd->add_option("--y-col", y_col, "Outcome column")->capture_default_str();
    cmd->add_option("--a-col", a_col, "Treatment column")->capture_default_str();
    cmd->add_option("--x-cols", x_cols, "Covariate columns: comma list or prefix glob")->capture_default_str();
  }
  ObservationSet load() const {
    return load_observations(input, ColumnSchema{y_col, a_col, split_column_list(x_cols)});
  }
};

void write_report_rows(std::ostream& out, const std::vector<EstimateReport>& reports, double alpha) {
  out << "method,theta_hat,n,K,var_hat,ci_low,ci_high,fingerprint,var_efficient,var_conservative,"
         "ci_eff_low,ci_eff_high,ci_cons_low,ci_cons_high,delta_hat\n";
  for (const auto& r : reports) {
    const ConfidenceInterval eff = efficient_interval(r, alpha);
    const double var_eff = eff.sigma_hat * eff.sigma_hat;
    std::optional<ConservativeInterval> cons;
    if (r.aipw_contributions) cons = conservative_interval(r, alpha);
    const ConfidenceInterval& chosen = cons ? cons->interval : eff;
    const double nan = std::nan("");
    out << to_string(r.method) << ',' << num(r.theta_hat) << ',' << r.n() << ',' << r.folds << ','
        << num(chosen.sigma_hat * chosen.sigma_hat) << ',' << num(chosen.lower) << ',' << num(chosen.upper) << ','
        << r.fingerprint << ',' << num(var_eff) << ',' << num(cons ? cons->var_conservative : nan) << ','
        << num(eff.lower) << ',' << num(eff.upper) << ',' << num(cons ? cons->interval.lower : nan) << ','
        << num(cons ? cons->interval.upper : nan) << ',' << num(cons ? cons->delta_hat : nan) << '\n';
  }
}

int run_estimate(const InputOptions& in, const std::string& method, std::optional<int> folds,
                 const std::string& config, std::optional<std::uint64_t> seed, double alpha, const std::string& out_path) {
  EstimatorConfig cfg;
  if (!config.empty()) apply_estimator_config(ConfigDocument::load(config), cfg);
  if (folds) cfg.folds = *folds;
  if (seed) cfg.seed = *seed;
  const ObservationSet data = in.load();
  std::vector<Method> methods;
  if (method == "suite") {
    methods = {Method::ipw, Method::aipw, Method::mr, Method::amr};
  } else {
    methods = {parse_method(method)};
  }
  const auto reports = estimator_suite(data, cfg, methods);
  if (out_path.empty() || out_path == "-") {
    write_report_rows(std::cout, reports, alpha);
  } else {
    auto out = open_out(out_path);
    write_report_rows(out, reports, alpha);
  }
  return 0;
}

int run_diagnose(const InputOptions& in, const std::string& config, const std::string& prefix, int bins,
                 const std::string& convention) {
  EstimatorConfig cfg;
  if (!config.empty()) apply_estimator_config(ConfigDocument::load(config), cfg);
  const ImbalanceConvention conv =
      convention == "inverse" ? ImbalanceConvention::inverse : ImbalanceConvention::corrected;
  if (convention != "inverse" && convention != "corrected") throw ArgumentError("--convention must be corrected or inverse");
  const ObservationSet data = in.load();
  const auto reports = estimator_suite(data, cfg, {Method::ipw, Method::aipw, Method::mr, Method::amr});

  {
    auto out = open_out(prefix + "imbalance.csv");
    out << "covariate";
    std::vector<ImbalanceProfile> profiles;
    for (const auto& r : reports) {
      out << ',' << to_string(r.method);
      profiles.push_back(imbalance_profile(data.X(), r.weights, conv, to_string(r.method)));
    }
    out << '\n';
    for (Index j = 0; j < data.p(); ++j) {
      out << data.covariate_names()[static_cast<std::size_t>(j)];
      for (const auto& p : profiles) out << ',' << num(p.values[j]);
      out << '\n';
    }
  }
  {
    auto out = open_out(prefix + "weights.csv");
    out << "method,min,max,mean,mean_abs,q01,q05,q50,q95,q99\n";
    for (const auto& r : reports) {
      const WeightSummary s = weight_summary(r);
      out << to_string(r.method) << ',' << num(s.min) << ',' << num(s.max) << ',' << num(s.mean) << ','
          << num(s.mean_abs) << ',' << num(s.q01) << ',' << num(s.q05) << ',' << num(s.q50) << ',' << num(s.q95)
          << ',' << num(s.q99) << '\n';
    }
  }
  {
    const CrossFit cf = cross_fit_nuisances(data, cfg, false);
    const Histogram h = propensity_histogram(cf.held_out.pi, bins);
    auto out = open_out(prefix + "propensity_hist.csv");
    out << "bin_low,bin_high,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      out << num(h.edges[Index(k)]) << ',' << num(h.edges[Index(k) + 1]) << ',' << h.counts[k] << '\n';
    }
  }
  return 0;
}

int run_bench(const std::string& config, const std::string& out_path, std::optional<int> workers, bool timing,
              bool coverage) {
  ExperimentConfig cfg;
  if (!config.empty()) apply_experiment_config(ConfigDocument::load(config), cfg);
  if (workers) cfg.workers = *workers;
  if (timing) cfg.timing = true;
  const MetricsTable table = coverage ? coverage_experiment(cfg, cfg.alpha) : run_monte_carlo(cfg);
  export_results(table, out_path);
  int flagged = 0;
  for (const auto& r : table.rows) {
    if (!r.flagged) continue;
    ++flagged;
    std::cerr << "amr: flagged cell n=" << r.n << " p_i=" << r.p_i << " method=" << r.method << ": "
              << r.flag_reason << '\n';
  }
  return flagged == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outcome-weighted average treatment effect estimators (IPW, AIPW, MR, AMR)"};
  app.require_subcommand(1);

  InputOptions est_in;
  std::string est_method = "suite", est_config, est_out;
  std::optional<int> est_folds;
  std::optional<std::uint64_t> est_seed;
  double est_alpha = 0.05;
  auto* est = app.add_subcommand("estimate", "Estimate the average treatment effect from a CSV");
  est_in.add(est);
  est->add_option("--method", est_method, "ipw, aipw, mr, amr, att, atc or suite")->capture_default_str();
  est->add_option("--folds", est_folds, "Cross-fitting folds (1 = no cross-fitting)");
  est->add_option("--config", est_config, "Estimator configuration file");
  est->add_option("--seed", est_seed, "Fold and learner seed");
  est->add_option("--alpha", est_alpha, "Interval level is 1 - alpha")->capture_default_str();
  est->add_option("--out", est_out, "Report CSV (default: stdout)");

  SimulationConfig sim;
  std::string sim_mu0 = "nonlinear", sim_out;
  auto* simc = app.add_subcommand("simulate", "Draw from the block-structured benchmark design");
  simc->add_option("--n", sim.n, "Sample size")->capture_default_str();
  simc->add_option("--p-i", sim.p_i, "Instrument count")->capture_default_str();
  simc->add_option("--p-c", sim.p_c, "Confounder count")->capture_default_str();
  simc->add_option("--p-o", sim.p_o, "Prognostic count")->capture_default_str();
  simc->add_option("--p-s", sim.p_s, "Spurious count")->capture_default_str();
  simc->add_option("--effect", sim.effect, "Constant treatment effect")->capture_default_str();
  simc->add_option("--sigma", sim.sigma, "Outcome noise sd")->capture_default_str();
  simc->add_option("--mu0", sim_mu0, "nonlinear, linear or zero")->capture_default_str();
  simc->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simc->add_option("--out", sim_out, "Output CSV")->required();

  InputOptions diag_in;
  std::string diag_config, diag_prefix = "diag_", diag_convention = "corrected";
  int diag_bins = 50;
  auto* diag = app.add_subcommand("diagnose", "Write imbalance, weight and propensity summaries");
  diag_in.add(diag);
  diag->add_option("--config", diag_config, "Estimator configuration file");
  diag->add_option("--out-prefix", diag_prefix, "Prefix for the three output files")->capture_default_str();
  diag->add_option("--bins", diag_bins, "Propensity histogram bins")->capture_default_str();
  diag->add_option("--convention", diag_convention, "Imbalance exponent: corrected or inverse")->capture_default_str();

  std::string bench_config, bench_out;
  std::optional<int> bench_workers;
  bool bench_timing = false, bench_coverage = false;
  auto* bench = app.add_subcommand("bench", "Monte Carlo sweep over (n, p_i); exit 1 if any cell is flagged");
  bench->add_option("--config", bench_config, "Experiment configuration file");
  bench->add_option("--out", bench_out, "Results CSV")->required();
  bench->add_option("--workers", bench_workers, "Worker threads");
  bench->add_flag("--timing", bench_timing, "Record wall time in the seconds column");
  bench->add_flag("--coverage", bench_coverage, "Run the AIPW/AMR interval coverage experiment");

  double or_pi = 0.5, or_mu0 = 0.0, or_mu1 = 2.0, or_sigma = 1.0, or_lo = -4.0, or_hi = 6.0;
  int or_points = 201;
  std::string or_kind = "w", or_out;
  auto* orc = app.add_subcommand("oracle", "Tabulate the closed-form weight of a point-mass Gaussian design");
  orc->add_option("--pi", or_pi, "Propensity")->capture_default_str();
  orc->add_option("--mu0", or_mu0, "Control mean")->capture_default_str();
  orc->add_option("--mu1", or_mu1, "Treated mean")->capture_default_str();
  orc->add_option("--sigma", or_sigma, "Outcome sd")->capture_default_str();
  orc->add_option("--kind", or_kind, "w or wstar")->capture_default_str();
  orc->add_option("--grid-min", or_lo, "First grid point")->capture_default_str();
  orc->add_option("--grid-max", or_hi, "Last grid point")->capture_default_str();
  orc->add_option("--points", or_points, "Grid size")->capture_default_str();
  orc->add_option("--out", or_out, "Output CSV (u, weight)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*est) return run_estimate(est_in, est_method, est_folds, est_config, est_seed, est_alpha, est_out);
    if (*simc) {
      sim.mu0 = parse_mu0_form(sim_mu0);
      write_observations(sim_out, generate_synthetic(sim).data);
      return 0;
    }
    if (*diag) return run_diagnose(diag_in, diag_config, diag_prefix, diag_bins, diag_convention);
    if (*bench) return run_bench(bench_config, bench_out, bench_workers, bench_timing, bench_coverage);
    if (*orc) {
      const OracleKind kind = parse_oracle_kind(or_kind);
      if (kind != OracleKind::w && kind != OracleKind::wstar) throw ArgumentError("--kind must be w or wstar");
      if (or_points < 2) throw ArgumentError("--points must be at least 2");
      const GaussianDesign design = GaussianDesign::point_mass_design(or_pi, or_mu0, or_mu1, or_sigma);
      export_oracle_table(oracle_weight_table(design, kind, Vector::LinSpaced(or_points, or_lo, or_hi)), or_out);
      return 0;
    }
  } catch (const amr::Error& e) {
    std::cerr << "amr: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
