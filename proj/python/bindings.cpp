#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amr/bench.hpp"
#include "amr/config.hpp"
#include "amr/dataset.hpp"
#include "amr/diagnostics.hpp"
#include "amr/error.hpp"
#include "amr/estimators.hpp"
#include "amr/inference.hpp"
#include "amr/nuisance.hpp"
#include "amr/synthlab.hpp"
#include "amr/weightfit.hpp"

namespace py = pybind11;
using namespace amr;

namespace {

EstimatorConfig make_config(int folds, std::uint64_t seed, const std::string& learner, const std::string& weight_method,
                            const std::string& centering, const std::optional<std::string>& config_path) {
  EstimatorConfig cfg;
  if (config_path) apply_estimator_config(ConfigDocument::load(*config_path), cfg);
  cfg.folds = folds;
  cfg.seed = seed;
  cfg.outcome.learner = parse_outcome_learner(learner);
  cfg.weights.method = parse_weight_method(weight_method);
  cfg.weights.centering = parse_centering(centering);
  return cfg;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

py::dict interval_dict(const ConfidenceInterval& ci) {
  py::dict d;
  d["lower"] = ci.lower;
  d["upper"] = ci.upper;
  d["level"] = ci.level;
  d["sigma_hat"] = ci.sigma_hat;
  d["kind"] = ci.kind == IntervalKind::efficient ? "efficient" : "conservative";
  return d;
}

}  // namespace

PYBIND11_MODULE(pyamr, m) {
  m.doc() = "IPW, AIPW, MR and AMR average treatment effect estimators";

  py::register_exception<Error>(m, "AmrError", PyExc_RuntimeError);

  py::class_<ObservationSet>(m, "ObservationSet")
      .def(py::init([](Matrix X, Vector A, Vector Y) { return ObservationSet(std::move(X), std::move(A), std::move(Y)); }),
           py::arg("X"), py::arg("A"), py::arg("Y"))
      .def_property_readonly("X", &ObservationSet::X)
      .def_property_readonly("A", &ObservationSet::A)
      .def_property_readonly("Y", &ObservationSet::Y)
      .def_property_readonly("n", &ObservationSet::n)
      .def_property_readonly("p", &ObservationSet::p)
      .def_property_readonly("covariate_names", &ObservationSet::covariate_names);

  m.def(
      "load_observations",
      [](const std::string& path, const std::string& y_col, const std::string& a_col, const std::string& x_cols) {
        return load_observations(path, ColumnSchema{y_col, a_col, split_column_list(x_cols)});
      },
      py::arg("path"), py::arg("y_col") = "y", py::arg("a_col") = "a", py::arg("x_cols") = "x*");
  m.def(
      "write_observations",
      [](const std::string& path, const ObservationSet& data) { write_observations(path, data); }, py::arg("path"),
      py::arg("data"));
  m.def(
      "make_folds", [](Index n, int K, std::uint64_t seed) { return make_folds(n, K, seed).fold_of; }, py::arg("n"),
      py::arg("K"), py::arg("seed") = 0);

  py::class_<PropensityModel>(m, "PropensityModel")
      .def_property_readonly("beta", &PropensityModel::beta)
      .def_readonly("penalized", &PropensityModel::penalized)
      .def_readonly("iterations", &PropensityModel::iterations)
      .def("predict", &PropensityModel::predict, py::arg("X"));
  m.def(
      "fit_propensity",
      [](const Matrix& X, const Vector& A, int max_iter, double tol, double clip_eps) {
        return fit_propensity(X, A, PropensityConfig{max_iter, tol, clip_eps});
      },
      py::arg("X"), py::arg("A"), py::arg("max_iter") = 100, py::arg("tol") = 1e-8, py::arg("clip_eps") = 0.0);
  m.def("clever_covariates", &clever_covariates, py::arg("A"), py::arg("pi_hat"));
  m.def("pseudo_outcomes", &pseudo_outcomes, py::arg("Y"), py::arg("pi_hat"), py::arg("mu0_hat"), py::arg("mu1_hat"));

  py::class_<WeightModel>(m, "WeightModel")
      .def("__call__", &WeightModel::evaluate, py::arg("u"))
      .def_property_readonly("center", &WeightModel::center)
      .def_property_readonly("bandwidth", &WeightModel::bandwidth)
      .def_property_readonly("lambda_", &WeightModel::lambda);
  m.def("median_heuristic_bandwidth", &median_heuristic_bandwidth, py::arg("u"), py::arg("seed") = 0);
  m.def(
      "fit_weight_model",
      [](const Vector& u, const Vector& t, const std::string& method, std::vector<double> lambda_grid,
         std::vector<double> gamma_multipliers, int folds, std::uint64_t seed, std::optional<double> bandwidth,
         const std::string& centering) {
        CrossValidationPlan plan;
        plan.method = parse_weight_method(method);
        plan.lambda_grid = std::move(lambda_grid);
        plan.gamma_multipliers = std::move(gamma_multipliers);
        plan.folds = folds;
        plan.seed = seed;
        plan.bandwidth = bandwidth;
        plan.centering = parse_centering(centering);
        return fit_weight_model(u, t, plan);
      },
      py::arg("u"), py::arg("t"), py::arg("method") = "kernel-ridge",
      py::arg("lambda_grid") = std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1, 1.0},
      py::arg("gamma_multipliers") = std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0}, py::arg("folds") = 5,
      py::arg("seed") = 0, py::arg("bandwidth") = py::none(), py::arg("centering") = "none");

  py::class_<EstimateReport>(m, "EstimateReport")
      .def_property_readonly("method", [](const EstimateReport& r) { return to_string(r.method); })
      .def_readonly("theta_hat", &EstimateReport::theta_hat)
      .def_readonly("contributions", &EstimateReport::contributions)
      .def_readonly("weights", &EstimateReport::weights)
      .def_readonly("folds", &EstimateReport::folds)
      .def_readonly("fingerprint", &EstimateReport::fingerprint)
      .def_readonly("aipw_contributions", &EstimateReport::aipw_contributions)
      .def("__repr__", [](const EstimateReport& r) {
        return "<EstimateReport " + to_string(r.method) + " theta_hat=" + std::to_string(r.theta_hat) + ">";
      });

  m.def(
      "estimate",
      [](const ObservationSet& data, const std::vector<std::string>& methods, int folds, std::uint64_t seed,
         const std::string& learner, const std::string& weight_method, const std::string& centering,
         std::optional<std::string> config) {
        return estimator_suite(data, make_config(folds, seed, learner, weight_method, centering, config),
                               parse_methods(methods));
      },
      py::arg("data"), py::arg("methods") = std::vector<std::string>{"IPW", "AIPW", "MR", "AMR"},
      py::arg("folds") = 5, py::arg("seed") = 0, py::arg("learner") = "ridge", py::arg("weight_method") = "kernel-ridge",
      py::arg("centering") = "none", py::arg("config") = py::none());
  m.def("estimate_ipw", py::overload_cast<const ObservationSet&, const Vector&>(&estimate_ipw), py::arg("data"),
        py::arg("pi_hat"));
  m.def(
      "estimate_aipw",
      [](const ObservationSet& data, const Vector& pi, const Vector& mu0, const Vector& mu1) {
        return estimate_aipw(data, NuisanceVectors{pi, mu0, mu1});
      },
      py::arg("data"), py::arg("pi_hat"), py::arg("mu0_hat"), py::arg("mu1_hat"));

  m.def("influence_variance", &influence_variance, py::arg("contributions"), py::arg("theta_hat"));
  m.def("normal_quantile", &normal_quantile, py::arg("p"));
  m.def(
      "wald_interval",
      [](double theta, double sigma, Index n, double alpha) { return interval_dict(wald_interval(theta, sigma, n, alpha)); },
      py::arg("theta_hat"), py::arg("sigma_hat"), py::arg("n"), py::arg("alpha") = 0.05);
  m.def(
      "efficient_interval",
      [](const EstimateReport& r, double alpha) { return interval_dict(efficient_interval(r, alpha)); },
      py::arg("report"), py::arg("alpha") = 0.05);
  m.def(
      "conservative_interval",
      [](const EstimateReport& r, double alpha) {
        const ConservativeInterval c = conservative_interval(r, alpha);
        py::dict d = interval_dict(c.interval);
        d["var_efficient"] = c.var_efficient;
        d["var_conservative"] = c.var_conservative;
        d["delta_hat"] = c.delta_hat;
        return d;
      },
      py::arg("report"), py::arg("alpha") = 0.05);

  m.def(
      "generate_synthetic",
      [](Index n, int p_i, double effect, const std::string& mu0, std::uint64_t seed, double sigma) {
        SimulationConfig cfg;
        cfg.n = n;
        cfg.p_i = p_i;
        cfg.effect = effect;
        cfg.mu0 = parse_mu0_form(mu0);
        cfg.seed = seed;
        cfg.sigma = sigma;
        SyntheticDraw d = generate_synthetic(cfg);
        return py::make_tuple(d.data, d.theta);
      },
      py::arg("n") = 400, py::arg("p_i") = 10, py::arg("effect") = 5.0, py::arg("mu0") = "nonlinear", py::arg("seed") = 0,
      py::arg("sigma") = 1.0);
  m.def(
      "point_mass_oracle_weights",
      [](double pi, double mu0, double mu1, double sigma, const std::string& kind, const Vector& grid) {
        const GaussianDesign design = GaussianDesign::point_mass_design(pi, mu0, mu1, sigma);
        return oracle_weight_table(design, parse_oracle_kind(kind), grid).values;
      },
      py::arg("pi"), py::arg("mu0"), py::arg("mu1"), py::arg("sigma"), py::arg("kind"), py::arg("grid"));

  m.def(
      "imbalance_profile",
      [](const Matrix& X, const Vector& b, const std::string& convention) {
        return imbalance_profile(X, b, convention == "inverse" ? ImbalanceConvention::inverse
                                                             : ImbalanceConvention::corrected)
            .values;
      },
      py::arg("X"), py::arg("b"), py::arg("convention") = "corrected");
  m.def(
      "propensity_histogram",
      [](const Vector& pi, int bins) {
        const Histogram h = propensity_histogram(pi, bins);
        return py::make_tuple(h.edges, h.counts);
      },
      py::arg("pi_hat"), py::arg("bins") = 50);
  m.def(
      "run_bench",
      [](const std::optional<std::string>& config, std::optional<int> workers) {
        ExperimentConfig cfg;
        if (config) apply_experiment_config(ConfigDocument::load(*config), cfg);
        if (workers) cfg.workers = *workers;
        py::gil_scoped_release release;
        return format_results(run_monte_carlo(cfg));
      },
      py::arg("config") = py::none(), py::arg("workers") = py::none());
}
