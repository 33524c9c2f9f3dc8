#include <doctest.h>

#include <random>

#include "amr/error.hpp"
#include "amr/nuisance.hpp"
#include "amr/synthlab.hpp"
#include "test_util.hpp"

using namespace amr;
using amr::test::vec;

TEST_CASE("propensity: balanced intercept-only data gives one half") {
  const Matrix X = Matrix::Zero(6, 1);
  const Vector A = vec({1, 0, 1, 0, 1, 0});
  const PropensityModel m = fit_propensity(X, A);
  CHECK(m.predict(X).isApproxToConstant(0.5, 1e-10));
}

TEST_CASE("propensity: no association gives zero coefficients") {
  Matrix X(4, 1);
  X << -1, -1, 1, 1;
  const PropensityModel m = fit_propensity(X, vec({0, 1, 0, 1}));
  CHECK(std::abs(m.beta()[0]) < 1e-10);
  CHECK(std::abs(m.beta()[1]) < 1e-10);
  CHECK(m.predict(X).isApproxToConstant(0.5, 1e-10));
}

TEST_CASE("propensity: recovers the generating slope") {
  const Index n = 10000;
  std::mt19937_64 eng(2024);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  Matrix X(n, 1);
  Vector A(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = z(eng);
    A[i] = u(eng) < 1.0 / (1.0 + std::exp(-2.0 * X(i, 0))) ? 1.0 : 0.0;
  }
  const PropensityModel m = fit_propensity(X, A);
  CHECK(std::abs(m.beta()[1] - 2.0) < 0.1);
  CHECK_FALSE(m.penalized);

  SUBCASE("log-likelihood never decreases across iterations") {
    REQUIRE(m.loglik_trace.size() >= 2);
    for (std::size_t i = 1; i < m.loglik_trace.size(); ++i) CHECK(m.loglik_trace[i] >= m.loglik_trace[i - 1] - 1e-9);
  }
}

TEST_CASE("propensity: separated and collinear designs stay finite") {
  Matrix X(8, 1);
  X << -4, -3, -2, -1, 1, 2, 3, 4;
  const Vector A = vec({0, 0, 0, 0, 1, 1, 1, 1});
  const PropensityModel m = fit_propensity(X, A);
  CHECK((m.penalized || m.beta().cwiseAbs().maxCoeff() <= 30.0));
  const Vector p = m.predict(X);
  CHECK(p.allFinite());
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.maxCoeff() < 1.0);

  // A constant column is collinear with the intercept: it gets slope 0 and
  // the fit recovers the treated share.
  Matrix C = Matrix::Constant(5000, 1, 2.0);
  Vector B(5000);
  for (Index i = 0; i < 5000; ++i) B[i] = double(i % 2 == 0 || i % 7 == 0);
  const PropensityModel c = fit_propensity(C, B);
  CHECK(c.beta()[1] == 0.0);
  CHECK(c.predict(C)[0] == doctest::Approx(B.mean()).epsilon(1e-6));
  const PropensityModel zero = fit_propensity(Matrix::Zero(5000, 1), B);
  CHECK(zero.predict(C)[0] == doctest::Approx(B.mean()).epsilon(1e-6));
}

TEST_CASE("propensity clipping") {
  Matrix X(8, 1);
  X << -4, -3, -2, -1, 1, 2, 3, 4;
  const PropensityModel m = fit_propensity(X, vec({0, 0, 0, 1, 0, 1, 1, 1}), PropensityConfig{100, 1e-8, 0.2});
  const Vector p = m.predict(X);
  CHECK(p.minCoeff() >= 0.2);
  CHECK(p.maxCoeff() <= 0.8);
  CHECK_THROWS_AS(fit_propensity(X, vec({0, 0, 0, 1, 0, 1, 1, 1}), PropensityConfig{100, 1e-8, 0.5}), ArgumentError);
}

TEST_CASE("outcome: constant target is reproduced") {
  Matrix X(6, 2);
  X << 1, 2, 3, 1, 0, 5, 2, 2, 4, 1, 1, 0;
  const OutcomePair fit = fit_outcome(X, Vector::Constant(6, 3.0), vec({1, 0, 1, 0, 1, 0}));
  CHECK(fit.predict_mu0(X).isApproxToConstant(3.0, 1e-9));
  CHECK(fit.predict_mu1(X).isApproxToConstant(3.0, 1e-9));
}

TEST_CASE("outcome: noiseless linear truth with zero penalty") {
  Matrix X(8, 1);
  X << -2, -1, 0, 1, 2, 3, 0.5, -0.5;
  const Vector A = vec({1, 0, 1, 0, 1, 0, 1, 0});
  const Vector Y = (2.0 * X.col(0).array() + 5.0 * A.array()).matrix();
  OutcomeConfig cfg;
  cfg.ridge_lambda = 0.0;
  const OutcomePair fit = fit_outcome(X, Y, A, cfg);
  Matrix grid(3, 1);
  grid << -7, 0.25, 11;
  CHECK((fit.predict_mu0(grid) - 2.0 * grid.col(0)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((fit.predict_mu1(grid).array() - 2.0 * grid.col(0).array() - 5.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("ridge with zero penalty leaves residuals orthogonal to the design") {
  std::mt19937_64 eng(5);
  std::normal_distribution<double> z;
  const Index n = 50, p = 4;
  Matrix X(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) X(i, j) = z(eng) * (j + 1) + j;
    y[i] = 3.0 * std::sin(X(i, 0)) + z(eng);
  }
  const RidgeRegressor r = RidgeRegressor::fit(X, y, 0.0);
  const Vector res = y - r.predict(X);
  CHECK(std::abs(res.sum()) < 1e-8);
  for (Index j = 0; j < p; ++j) CHECK(std::abs(X.col(j).dot(res)) < 1e-8);
}

TEST_CASE("feedforward beats ridge in-sample on the benchmark outcome surface") {
  SimulationConfig sim;
  sim.n = 5000;
  sim.seed = 77;
  const SyntheticDraw draw = generate_synthetic(sim);
  const ObservationSet& d = draw.data;
  OutcomeConfig ridge, ffnn;
  ffnn.learner = OutcomeLearner::feedforward;
  const OutcomePair r = fit_outcome(d.X(), d.Y(), d.A(), ridge);
  const OutcomePair f = fit_outcome(d.X(), d.Y(), d.A(), ffnn);
  auto control_rmse = [&](const Vector& pred) {
    double s = 0.0;
    int c = 0;
    for (Index i = 0; i < d.n(); ++i)
      if (d.A()[i] == 0.0) {
        s += (pred[i] - draw.truth.mu0[i]) * (pred[i] - draw.truth.mu0[i]);
        ++c;
      }
    return std::sqrt(s / c);
  };
  CHECK(control_rmse(f.predict_mu0(d.X())) < control_rmse(r.predict_mu0(d.X())));
}

TEST_CASE("clever covariates") {
  CHECK(clever_covariates(vec({1}), vec({0.1}))[0] == doctest::Approx(10.0));
  CHECK(clever_covariates(vec({0}), vec({0.1}))[0] == doctest::Approx(-1.0 / 0.9));
  CHECK(clever_covariates(vec({1}), vec({0.5}))[0] == doctest::Approx(2.0));

  std::mt19937_64 eng(9);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const Index n = 200;
  Vector A(n), pi(n);
  for (Index i = 0; i < n; ++i) {
    A[i] = double(i % 3 == 0);
    pi[i] = u(eng);
  }
  const Vector h = clever_covariates(A, pi);
  for (Index i = 0; i < n; ++i) {
    CHECK((h[i] > 0.0) == (A[i] == 1.0));
    CHECK(std::abs(h[i]) == doctest::Approx(A[i] == 1.0 ? 1.0 / pi[i] : 1.0 / (1.0 - pi[i])));
  }
  CHECK_THROWS_AS(clever_covariates(vec({1}), vec({1.0})), DomainError);
}

TEST_CASE("pseudo outcomes") {
  CHECK(pseudo_outcomes(vec({2}), vec({0.5}), vec({1}), vec({3}))[0] == doctest::Approx(0.0));
  CHECK(pseudo_outcomes(vec({1}), vec({0.8}), vec({0}), vec({1}))[0] == doctest::Approx(0.8));

  const Vector Y = vec({1.5, -2, 7, 0});
  const Vector pi = vec({0.1, 0.4, 0.7, 0.95});
  const Vector c = Vector::Constant(4, 2.25);
  CHECK((pseudo_outcomes(Y, pi, c, c) - (Y.array() - 2.25).matrix()).cwiseAbs().maxCoeff() < 1e-14);

  const Vector mu0 = vec({1, 2, 3, 4}), mu1 = vec({-1, 0, 5, 2});
  const Vector Y2 = vec({0.5, 0.25, -3, 9});
  const Vector lhs = pseudo_outcomes(Y + Y2, pi, mu0, mu1);
  const Vector rhs = pseudo_outcomes(Y, pi, mu0, mu1) + Y2;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}
