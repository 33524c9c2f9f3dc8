#include <doctest.h>

#include <cmath>

#include "amr/error.hpp"
#include "amr/synthlab.hpp"
#include "test_util.hpp"

using namespace amr;
using amr::test::normal_pdf;
using amr::test::vec;

namespace {

double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double nonlinear_mu0(const Vector& x, int p_i, int p_c, int p_o) {
  const double c = x.segment(p_i, p_c).sum();
  const double o = x.segment(p_i + p_c, p_o).sum();
  const double t = c * std::cos(M_PI * o);
  return 10.0 * std::sin(M_PI * o) + 20.0 * o * o + t * t;
}

Vector linspace(double lo, double hi, Index k) { return Vector::LinSpaced(k, lo, hi); }

// Covariates (I1, I2, O): the instruments move treatment only, O moves the
// outcome only, and the effect is 1.
GaussianDesign no_confounder_design(std::function<double(const Vector&)> pi) {
  GaussianDesign d;
  d.law = GaussianDesign::Law::standard_normal;
  d.dim = 3;
  d.pi = std::move(pi);
  d.mu0 = [](const Vector& x) { return x[2]; };
  d.mu1 = [](const Vector& x) { return x[2] + 1.0; };
  d.sigma = 1.0;
  return d;
}

}  // namespace

TEST_CASE("block design shape, truth and determinism") {
  SimulationConfig cfg;
  cfg.seed = 17;
  const SyntheticDraw a = generate_synthetic(cfg);
  CHECK(a.data.n() == 400);
  CHECK(a.data.p() == 25);
  CHECK(a.theta == 5.0);
  CHECK(((a.data.A().array() == 0.0) || (a.data.A().array() == 1.0)).all());
  CHECK(a.data.covariate_names().front() == "x1");
  const SyntheticDraw b = generate_synthetic(cfg);
  CHECK(a.data.X() == b.data.X());
  CHECK(a.data.A() == b.data.A());
  CHECK(a.data.Y() == b.data.Y());
  cfg.seed = 18;
  CHECK(generate_synthetic(cfg).data.Y() != a.data.Y());

  for (Index i = 0; i < 20; ++i) {
    const Vector x = a.data.X().row(i).transpose();
    CHECK(a.truth.pi[i] == doctest::Approx(expit(x.segment(0, 10).sum() + 0.5 * x.segment(10, 5).sum())));
    CHECK(a.truth.mu0[i] == doctest::Approx(nonlinear_mu0(x, 10, 5, 5)));
    CHECK(a.truth.mu1[i] == doctest::Approx(a.truth.mu0[i] + 5.0));
  }
}

TEST_CASE("block design noise moments") {
  SimulationConfig cfg;
  cfg.n = 200000;
  cfg.seed = 5;
  const SyntheticDraw d = generate_synthetic(cfg);
  const Vector e = (d.data.Y().array() - 5.0 * d.data.A().array() - d.truth.mu0.array()).matrix();
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().mean());
  CHECK(std::abs(mean) <= 0.02);
  CHECK(std::abs(sd - 1.0) <= 0.02);
}

TEST_CASE("alternative outcome surfaces") {
  SimulationConfig cfg;
  cfg.mu0 = Mu0Form::linear;
  cfg.seed = 3;
  const SyntheticDraw lin = generate_synthetic(cfg);
  const Vector x = lin.data.X().row(0).transpose();
  CHECK(lin.truth.mu0[0] == doctest::Approx(x.segment(15, 5).sum() + x.segment(10, 5).sum()));
  cfg.mu0 = Mu0Form::zero;
  CHECK(generate_synthetic(cfg).truth.mu0.isZero());
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(generate_synthetic(cfg), ArgumentError);
  CHECK_THROWS_AS(parse_mu0_form("cubic"), ArgumentError);
}

TEST_CASE("Gaussian designs: true effects") {
  const GaussianDesign pm = GaussianDesign::point_mass_design(0.5, -1.0, 1.0, 1.0);
  CHECK(generate_gaussian_example(pm, 50, 1).theta == 2.0);
  const GaussianDesign flat = GaussianDesign::point_mass_design(0.3, 4.0, 4.0, 1.0);
  CHECK(generate_gaussian_example(flat, 50, 1).theta == 0.0);

  GaussianDesign sn;
  sn.law = GaussianDesign::Law::standard_normal;
  sn.dim = 1;
  sn.pi = [](const Vector& x) { return expit(x[0]); };
  sn.mu0 = [](const Vector&) { return 0.0; };
  sn.mu1 = [](const Vector& x) { return x[0]; };
  CHECK(std::abs(sn.true_theta(99)) <= 0.005);
}

TEST_CASE("oracle weights on point-mass designs") {
  const GaussianDesign d = GaussianDesign::point_mass_design(0.5, 0.0, 2.0, 1.0);
  const double expected = (normal_pdf(2, 2, 1) - normal_pdf(2, 0, 1)) / (0.5 * (normal_pdf(2, 2, 1) + normal_pdf(2, 0, 1)));
  CHECK(expected == doctest::Approx(1.5232).epsilon(1e-3));
  const OracleWeightTable t = oracle_weight_table(d, OracleKind::w, vec({2.0}));
  CHECK(std::abs(t.values[0] - expected) <= 1e-3);

  const GaussianDesign sym = GaussianDesign::point_mass_design(0.5, -1.0, 1.0, 1.0);
  CHECK(std::abs(oracle_weight_table(sym, OracleKind::w, vec({0.0})).values[0]) < 1e-12);

  const GaussianDesign null = GaussianDesign::point_mass_design(0.3, 1.0, 1.0, 1.0);
  CHECK(oracle_weight_table(null, OracleKind::wstar, linspace(-4, 4, 41)).values.isZero());
}

TEST_CASE("Monte Carlo oracle table matches the closed form") {
  // X = (I1, I2, O) standard normal; Y | A=a ~ N(a, 2) marginally and P(A=1) = 1/2.
  const GaussianDesign d = no_confounder_design([](const Vector& x) { return expit(2.0 * x[0]); });
  const Vector grid = linspace(-2, 3, 26);
  const OracleWeightTable t = oracle_weight_table(d, OracleKind::w, grid, 100000, 7);
  for (Index g = 0; g < grid.size(); ++g) {
    const double f1 = normal_pdf(grid[g], 1, 2), f0 = normal_pdf(grid[g], 0, 2);
    CHECK(std::abs(t.values[g] - (f1 - f0) / (0.5 * f1 + 0.5 * f0)) <= 5e-3);
  }
  const OracleWeightTable again = oracle_weight_table(d, OracleKind::w, grid, 100000, 7);
  CHECK(again.values == t.values);
}

TEST_CASE("without confounders the instrument law enters only through P(A=1)") {
  const Vector grid = linspace(-2, 3, 26);
  const auto weights = [&](std::function<double(const Vector&)> pi) {
    return oracle_weight_table(no_confounder_design(std::move(pi)), OracleKind::w, grid, 100000, 11).values;
  };
  const Vector base = weights([](const Vector& x) { return expit(2.0 * x[0]); });
  // Same propensity distribution through a different instrument combination.
  const Vector mixed = weights([](const Vector& x) { return expit(std::sqrt(2.0) * (x[0] + x[1])); });
  // Doubled coefficient: E[1/pi] grows but P(A=1) stays 1/2 by symmetry.
  const Vector doubled = weights([](const Vector& x) { return expit(4.0 * x[0]); });
  CHECK((base - mixed).cwiseAbs().maxCoeff() <= 0.02);
  CHECK((base - doubled).cwiseAbs().maxCoeff() <= 0.02);

  // Shifting P(A=1) does change the weights.
  const Vector shifted = weights([](const Vector& x) { return expit(2.0 * x[0] + 1.0); });
  CHECK((base - shifted).cwiseAbs().maxCoeff() > 0.2);
  // Closed form in P(A=1) only: w = (f1 - f0) / (pbar f1 + (1 - pbar) f0).
  double pbar = 0.0;
  const int steps = 20000;
  for (int k = 0; k <= steps; ++k) {
    const double z = -10.0 + 20.0 * k / steps;
    pbar += (k == 0 || k == steps ? 0.5 : 1.0) * expit(2.0 * z + 1.0) * normal_pdf(z, 0, 1) * (20.0 / steps);
  }
  for (Index g = 0; g < grid.size(); ++g) {
    const double f1 = normal_pdf(grid[g], 1, 2), f0 = normal_pdf(grid[g], 0, 2);
    CHECK(std::abs(shifted[g] - (f1 - f0) / (pbar * f1 + (1.0 - pbar) * f0)) <= 0.02);
  }
}

TEST_CASE("plug-in kinds need plug-in nuisances and reduce to the true kinds") {
  const GaussianDesign d = GaussianDesign::point_mass_design(0.4, 0.0, 1.5, 1.0);
  const Vector grid = linspace(-3, 4, 15);
  CHECK_THROWS_AS(oracle_weight_table(d, OracleKind::w0, grid), ArgumentError);
  const PlugInNuisances same{d.pi, d.mu0, d.mu1};
  const Vector w = oracle_weight_table(d, OracleKind::w, grid).values;
  const Vector w0 = oracle_weight_table(d, OracleKind::w0, grid, 100000, 0, same).values;
  CHECK((w - w0).cwiseAbs().maxCoeff() < 1e-12);
  const Vector ws = oracle_weight_table(d, OracleKind::wstar, grid).values;
  const Vector ws0 = oracle_weight_table(d, OracleKind::wstar0, grid, 100000, 0, same).values;
  CHECK((ws - ws0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(oracle_weight_table(d, OracleKind::w, vec({1, 0})), ArgumentError);
  CHECK_THROWS_AS(oracle_weight_table(d, OracleKind::w, grid, 100), ArgumentError);
}

TEST_CASE("oracle estimates") {
  SUBCASE("zero effect gives zero AMR") {
    const GaussianDesign d = GaussianDesign::point_mass_design(0.5, 1.0, 1.0, 1.0);
    const GaussianDraw g = generate_gaussian_example(d, 500, 3);
    const Vector ys = pseudo_outcomes(g.data.Y(), g.truth.pi, g.truth.mu0, g.truth.mu1);
    const OracleEstimates e = oracle_estimates(
        g.data, d, {oracle_weight_table(d, OracleKind::wstar, linspace(ys.minCoeff(), ys.maxCoeff(), 101))});
    REQUIRE(e.reports.size() == 3);
    CHECK(to_string(e.reports[2].method) == "AMR-oracleW");
    CHECK(e.reports[2].theta_hat == 0.0);
  }
  SUBCASE("noiseless AIPW equals the effect") {
    GaussianDesign d;
    d.law = GaussianDesign::Law::standard_normal;
    d.dim = 2;
    d.pi = [](const Vector& x) { return expit(x[0]); };
    d.mu0 = [](const Vector& x) { return x[1]; };
    d.mu1 = [](const Vector& x) { return x[1] + 3.0 + 0.5 * x[0]; };
    d.sigma = 1e-6;
    d.known_theta = 3.0;
    const GaussianDraw g = generate_gaussian_example(d, 400, 8);
    const OracleEstimates e = oracle_estimates(g.data, d, {});
    CHECK(std::abs(e.reports[1].theta_hat - (g.truth.mu1 - g.truth.mu0).mean()) < 1e-3);
  }
  SUBCASE("point-mass effect two") {
    const GaussianDesign d = GaussianDesign::point_mass_design(0.5, 0.0, 2.0, 1.0);
    const GaussianDraw g = generate_gaussian_example(d, 10000, 12);
    const Vector ys = pseudo_outcomes(g.data.Y(), g.truth.pi, g.truth.mu0, g.truth.mu1);
    const OracleEstimates e =
        oracle_estimates(g.data, d,
                         {oracle_weight_table(d, OracleKind::w, default_oracle_grid(g.data.Y())),
                          oracle_weight_table(d, OracleKind::wstar, default_oracle_grid(ys))});
    CHECK(std::abs(e.reports[3].theta_hat - 2.0) <= 0.1);
    CHECK(std::abs(e.reports[2].theta_hat - 2.0) <= 0.1);
    CHECK(e.uncovered > 0);  // default grids stop at the 0.5% and 99.5% quantiles
  }
  SUBCASE("narrow grid is a coverage error") {
    const GaussianDesign d = GaussianDesign::point_mass_design(0.5, 0.0, 2.0, 1.0);
    const GaussianDraw g = generate_gaussian_example(d, 1000, 12);
    CHECK_THROWS_AS(oracle_estimates(g.data, d, {oracle_weight_table(d, OracleKind::w, linspace(0, 1, 5))}),
                    CoverageError);
  }
}
