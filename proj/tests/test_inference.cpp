#include <doctest.h>

#include <random>

#include "amr/error.hpp"
#include "amr/inference.hpp"
#include "test_util.hpp"

using namespace amr;
using amr::test::vec;

TEST_CASE("influence variance") {
  CHECK(influence_variance(Vector::Constant(5, 2.0), 2.0) == 0.0);
  CHECK(influence_variance(vec({1, 3}), 2.0) == doctest::Approx(1.0));
  const Vector c = vec({0.5, 4, -1, 2.5});
  const double theta = c.mean();
  const Vector doubled = (2.0 * (c.array() - theta) + theta).matrix();
  CHECK(influence_variance(doubled, theta) == doctest::Approx(4.0 * influence_variance(c, theta)));
  CHECK_THROWS_AS(influence_variance(vec({1}), 1.0), ArgumentError);
}

TEST_CASE("normal quantile accuracy") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::abs(normal_quantile(0.84) - 0.994457883209753) < 1e-9);
  CHECK(std::abs(normal_quantile(0.5)) < 1e-12);
  // Round trip through the CDF over a wide range, including the tails.
  for (double p : {1e-12, 1e-6, 0.001, 0.02, 0.3, 0.6, 0.9, 0.999, 1 - 1e-9}) {
    const double z = normal_quantile(p);
    CHECK(std::abs(0.5 * std::erfc(-z / std::sqrt(2.0)) - p) <= 1e-9 * std::max(p, 1e-3));
    // 1 - p is only exact to 1e-16 absolute, which moves far-tail quantiles.
    if (p >= 1e-6) CHECK(normal_quantile(1.0 - p) == doctest::Approx(-z).epsilon(1e-8));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), ArgumentError);
  CHECK_THROWS_AS(normal_quantile(1.0), ArgumentError);
}

TEST_CASE("Wald interval examples") {
  const ConfidenceInterval ci = wald_interval(2.0, 1.0, 100, 0.05);
  CHECK(ci.lower == doctest::Approx(1.804).epsilon(1e-3));
  CHECK(ci.upper == doctest::Approx(2.196).epsilon(1e-3));
  CHECK(ci.level == doctest::Approx(0.95));
  const ConfidenceInterval flat = wald_interval(3.0, 0.0, 50, 0.05);
  CHECK(flat.lower == 3.0);
  CHECK(flat.upper == 3.0);
  const double mult = 2.0 * wald_interval(0.0, 1.0, 4, 0.32).upper;
  CHECK(mult == doctest::Approx(0.994458).epsilon(1e-6));
  CHECK(mult < 0.55 * 2.0 * wald_interval(0.0, 1.0, 4, 0.05).upper);
  CHECK_THROWS_AS(wald_interval(0.0, -1.0, 10, 0.05), ArgumentError);
  CHECK_THROWS_AS(wald_interval(0.0, 1.0, 10, 1.5), ArgumentError);
}

TEST_CASE("interval symmetry and monotonicity") {
  std::mt19937_64 eng(4);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double theta = u(eng) * 10 - 25, sigma = u(eng);
    const Index n = 2 + Index(u(eng) * 200);
    const double alpha = 0.01 + 0.18 * u(eng) / 5.0;
    const ConfidenceInterval ci = wald_interval(theta, sigma, n, alpha);
    CHECK(std::abs((ci.upper - theta) - (theta - ci.lower)) <= 1e-12 * std::max(1.0, std::abs(theta)));
    CHECK(ci.width() == doctest::Approx(2 * normal_quantile(1 - alpha / 2) * sigma / std::sqrt(double(n))));
    CHECK(wald_interval(theta, sigma * 1.1, n, alpha).width() > ci.width());
    CHECK(wald_interval(theta, sigma, n + 1, alpha).width() < ci.width());
    CHECK(wald_interval(theta, sigma, n, alpha * 1.1).width() < ci.width());
  }
}

TEST_CASE("conservative interval") {
  EstimateReport amr;
  amr.method = Method::amr;
  amr.contributions = vec({2, 2, 2, 2});
  amr.theta_hat = 2.0;
  SUBCASE("needs the recorded AIPW terms") { CHECK_THROWS_AS(conservative_interval(amr, 0.05), StateError); }
  SUBCASE("equal terms give a zero-width interval at the AMR estimate") {
    amr.aipw_contributions = vec({2, 2, 2, 2});
    const ConservativeInterval c = conservative_interval(amr, 0.05);
    CHECK(c.interval.lower == 2.0);
    CHECK(c.interval.upper == 2.0);
    CHECK(c.delta_hat == 0.0);
  }
  SUBCASE("unit spread over one hundred units") {
    Vector terms(100), contrib(100);
    for (Index i = 0; i < 100; ++i) {
      terms[i] = i % 2 ? 3.0 : 1.0;  // mean 2, spread 1 about theta = 2
      contrib[i] = 2.0 + (i % 2 ? 0.5 : -0.5);
    }
    amr.contributions = contrib;
    amr.aipw_contributions = terms;
    const ConservativeInterval c = conservative_interval(amr, 0.05);
    CHECK(c.interval.lower == doctest::Approx(1.804).epsilon(1e-3));
    CHECK(c.interval.upper == doctest::Approx(2.196).epsilon(1e-3));
    CHECK(c.interval.kind == IntervalKind::conservative);
    CHECK(c.var_conservative == doctest::Approx(1.0));
    CHECK(c.var_efficient == doctest::Approx(0.25));
    CHECK(c.delta_hat == doctest::Approx(0.75));
    const ConfidenceInterval e = efficient_interval(amr, 0.05);
    CHECK(e.width() < c.interval.width());
  }
}
