#include <doctest.h>

#include <algorithm>
#include <random>

#include "amr/error.hpp"
#include "amr/weightfit.hpp"
#include "test_util.hpp"

using namespace amr;
using amr::test::vec;

namespace {

Vector uniform_draws(Index m, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Vector out(m);
  for (Index i = 0; i < m; ++i) out[i] = u(eng);
  return out;
}

double sample_variance(const Vector& v) { return (v.array() - v.mean()).square().mean(); }

}  // namespace

TEST_CASE("median heuristic hand cases") {
  CHECK(median_heuristic_bandwidth(vec({0, 1})) == 1.0);
  CHECK(median_heuristic_bandwidth(vec({0, 1, 2})) == 1.0);
  CHECK(median_heuristic_bandwidth(vec({5, 5, 5, 6})) == 0.5);
  CHECK(median_heuristic_bandwidth(vec({5, 5, 5, 5, 6})) == 1.0);
  CHECK_THROWS_AS(median_heuristic_bandwidth(vec({3, 3, 3})), DomainError);
}

TEST_CASE("median heuristic matches brute force at m = 1000") {
  std::mt19937_64 eng(123);
  std::normal_distribution<double> z;
  Vector u(1000);
  for (Index i = 0; i < u.size(); ++i) u[i] = z(eng);
  std::vector<double> gaps;
  for (Index i = 0; i < u.size(); ++i)
    for (Index j = i + 1; j < u.size(); ++j) gaps.push_back(std::abs(u[i] - u[j]));
  std::sort(gaps.begin(), gaps.end());
  const std::size_t g = gaps.size();
  const double brute = g % 2 ? gaps[g / 2] : 0.5 * (gaps[g / 2 - 1] + gaps[g / 2]);
  CHECK(median_heuristic_bandwidth(u) == brute);
  // Population median of |Z1 - Z2| is sqrt(2) * 0.6745.
  CHECK(std::abs(brute - 0.9539) < 0.1);
}

TEST_CASE("constant targets are reproduced everywhere") {
  const Vector u = uniform_draws(40, -3, 3, 1);
  for (auto method : {WeightMethod::kernel_ridge, WeightMethod::nadaraya_watson}) {
    CrossValidationPlan plan;
    plan.method = method;
    const WeightModel m = fit_weight_model(u, Vector::Constant(40, 4.0), plan);
    CHECK(m.evaluate(vec({-2, 0, 2.5})).isApproxToConstant(4.0, 1e-12));
    CHECK(m(1e6) == doctest::Approx(4.0));
    CHECK(m(-1e6) == doctest::Approx(4.0));
  }
}

TEST_CASE("shrinkage limit returns the target mean under mean centering") {
  const Vector u = uniform_draws(60, -1, 1, 2);
  const Vector t = (u.array().sin() * 3.0 + 1.0).matrix();
  CrossValidationPlan plan;
  plan.lambda_grid = {1e6};
  plan.gamma_multipliers = {1.0};
  plan.centering = Centering::mean;
  const WeightModel m = fit_weight_model(u, t, plan);
  CHECK((m.evaluate(u).array() - t.mean()).abs().maxCoeff() < 1e-5);

  plan.centering = Centering::none;
  const WeightModel z = fit_weight_model(u, t, plan);
  CHECK(z.evaluate(u).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("cross-validated fit recovers sin") {
  const Index m = 2000;
  const Vector u = uniform_draws(m, -2, 2, 42);
  std::mt19937_64 eng(43);
  std::normal_distribution<double> noise(0.0, 0.1);  // variance 0.01
  Vector t(m);
  for (Index i = 0; i < m; ++i) t[i] = std::sin(u[i]) + noise(eng);
  CrossValidationPlan plan;
  plan.gamma_multipliers = {0.5, 1.0, 2.0};
  plan.seed = 9;
  const WeightModel model = fit_weight_model(u, t, plan);
  double worst = 0.0;
  for (int k = 0; k <= 360; ++k) {
    const double v = -1.8 + 3.6 * k / 360.0;
    worst = std::max(worst, std::abs(model(v) - std::sin(v)));
  }
  CHECK(worst <= 0.1);
  CHECK(std::abs(model(0.0)) <= 0.1);
  CHECK(model.cv_errors().size() == 15);

  SUBCASE("selection is deterministic given the plan seed") {
    const WeightModel again = fit_weight_model(u, t, plan);
    CHECK(again.bandwidth() == model.bandwidth());
    CHECK(again.lambda() == model.lambda());
    CHECK(again.cv_errors() == model.cv_errors());
    CHECK(again.evaluate(u) == model.evaluate(u));
  }
}

TEST_CASE("interpolating fit reproduces training targets") {
  const Vector u = vec({-1.0, -0.3, 0.4, 1.2, 2.0});
  const Vector t = vec({2.0, -1.0, 0.5, 3.0, -2.0});
  const WeightModel m = fit_weight_model_fixed(u, t, WeightMethod::kernel_ridge, 0.5, 0.0);
  CHECK((m.evaluate(u) - t).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("dual coefficients reproduce the feature-form prediction") {
  const Vector u = uniform_draws(30, -2, 2, 8);
  const Vector t = (u.array().cos()).matrix();
  const WeightModel m = fit_weight_model_fixed(u, t, WeightMethod::kernel_ridge, 0.7, 1e-3);
  const Vector alpha = m.dual_coefficients();
  const Vector& a = m.anchors();
  for (double v : {-1.5, 0.0, 0.9}) {
    double s = m.center();
    for (Index j = 0; j < a.size(); ++j) s += alpha[j] * std::exp(-(v - a[j]) * (v - a[j]) / (2 * 0.49));
    CHECK(s == doctest::Approx(m(v)).epsilon(1e-8));
  }
}

TEST_CASE("kernel ridge fitted values have no more spread than the targets") {
  std::mt19937_64 eng(17);
  std::student_t_distribution<double> heavy(2.0);
  for (int trial = 0; trial < 12; ++trial) {
    const Index m = 30 + 17 * trial;
    const Vector u = uniform_draws(m, -3, 3, 100 + trial);
    Vector t(m);
    for (Index i = 0; i < m; ++i) t[i] = std::sin(2 * u[i]) + heavy(eng);
    for (double lambda : {1e-4, 1e-2, 1.0}) {
      for (double gamma : {0.1, 0.5, 2.0}) {
        for (auto c : {Centering::none, Centering::mean}) {
          const WeightModel w = fit_weight_model_fixed(u, t, WeightMethod::kernel_ridge, gamma, lambda, 0.0, 4000, c);
          CHECK(sample_variance(w.evaluate(u)) <= sample_variance(t) + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("translation equivariance in the abscissa") {
  const Vector u = uniform_draws(300, -2, 2, 31);
  const Vector t = (u.array() * u.array() - 0.5 * u.array()).matrix();
  const Vector v = vec({-1.7, -0.2, 0.3, 1.9});
  for (auto method : {WeightMethod::kernel_ridge, WeightMethod::nadaraya_watson}) {
    CrossValidationPlan plan;
    plan.method = method;
    plan.seed = 4;
    const WeightModel base = fit_weight_model(u, t, plan);
    const double c = 37.25;
    const WeightModel shifted = fit_weight_model((u.array() + c).matrix(), t, plan);
    CHECK(shifted.bandwidth() == doctest::Approx(base.bandwidth()).epsilon(1e-9));
    CHECK(shifted.lambda() == base.lambda());
    CHECK((shifted.evaluate((v.array() + c).matrix()) - base.evaluate(v)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("Nadaraya-Watson with a tiny bandwidth groups by abscissa") {
  const Vector u = vec({0, 0, 1, 1, 1});
  const Vector t = vec({2, 4, 1, 2, 6});
  const WeightModel m = fit_weight_model_fixed(u, t, WeightMethod::nadaraya_watson, 1e-3, 0.0);
  CHECK(m(0.0) == doctest::Approx(3.0));
  CHECK(m(1.0) == doctest::Approx(3.0));
  CHECK(m.evaluate(vec({0.0, 1.0})) == vec({m(0.0), m(1.0)}));
}

TEST_CASE("duplicate abscissae with zero penalty fall back to a positive one") {
  const Vector u = vec({0, 0, 1, 2, 3});
  const Vector t = vec({1, 3, 0, 1, 0});
  const WeightModel m = fit_weight_model_fixed(u, t, WeightMethod::kernel_ridge, 1.0, 0.0, 1e-4);
  CHECK(m.lambda() == 1e-4);
  CHECK(m(0.0) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("constant regressor gives the target mean") {
  const WeightModel m = fit_weight_model(Vector::Zero(10), Vector::LinSpaced(10, 0, 9));
  CHECK(m(0.0) == doctest::Approx(4.5));
  CHECK(m(3.0) == doctest::Approx(4.5));
}

TEST_CASE("plan validation and parsing") {
  CrossValidationPlan plan;
  plan.lambda_grid.clear();
  CHECK_THROWS_AS(plan.validate(), ArgumentError);
  plan = {};
  plan.folds = 1;
  CHECK_THROWS_AS(plan.validate(), ArgumentError);
  CHECK(parse_weight_method("krr") == WeightMethod::kernel_ridge);
  CHECK(parse_weight_method("nw") == WeightMethod::nadaraya_watson);
  CHECK_THROWS_AS(parse_weight_method("spline"), ArgumentError);
  CHECK(parse_centering("mean") == Centering::mean);
  CHECK_THROWS_AS(fit_weight_model(vec({1, 2}), vec({1}), {}), ArgumentError);
}
