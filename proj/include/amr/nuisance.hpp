#pragma once

#include <string>
#include <variant>
#include <vector>

#include "amr/feedforward.hpp"
#include "amr/types.hpp"

namespace amr {

// ---------------------------------------------------------------------------
// Propensity score

struct PropensityConfig {
  int max_iter = 100;
  /// Convergence threshold on max |score| / n.
  double tol = 1e-8;
  /// Optional symmetric clip floor in [0, 0.5); 0 disables clipping.
  double clip_eps = 0.0;
};

/// Logistic model P(A=1|X) = expit(b0 + X b).
class PropensityModel {
 public:
  PropensityModel() = default;
  PropensityModel(Vector beta, double clip_eps);

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict(const Matrix& X) const;

  const Vector& beta() const { return beta_; }
  double clip_eps() const { return clip_eps_; }

  // Fit diagnostics.
  bool penalized = false;  ///< separation fallback was used
  int iterations = 0;
  std::vector<double> loglik_trace;  ///< objective after each accepted step

 private:
  Vector beta_;
  double clip_eps_ = 0.0;
};

/// Smallest distance from 0 and 1 that a propensity evaluation may take;
/// keeps 1/pi and 1/(1-pi) finite when the linear predictor saturates.
inline constexpr double kPropensityFloor = 0x1p-53;

/// Logistic regression by iteratively reweighted least squares with
/// step-halving. Restarts with an L2 penalty of 1e-4 on the slopes when an
/// iterate exceeds |beta| = 30 or the Hessian is numerically singular.
PropensityModel fit_propensity(const Matrix& X, const Vector& A, const PropensityConfig& cfg = {});

// ---------------------------------------------------------------------------
// Outcome regressions

enum class OutcomeLearner { ridge, feedforward };

std::string to_string(OutcomeLearner learner);
OutcomeLearner parse_outcome_learner(const std::string& name);

struct OutcomeConfig {
  OutcomeLearner learner = OutcomeLearner::ridge;
  /// Penalty on standardized slopes; intercept unpenalized.
  double ridge_lambda = 1e-6;
  FeedforwardConfig ffnn;
  int ffnn_min_rows = 20;
};

/// Linear model with coefficients on standardized columns.
class RidgeRegressor {
 public:
  static RidgeRegressor fit(const Matrix& X, const Vector& y, double lambda);
  Vector predict(const Matrix& X) const;
  double intercept() const { return intercept_; }
  /// Coefficients on the original column scale.
  Vector slopes() const;

 private:
  Vector mean_, scale_, coef_;
  double intercept_ = 0.0;
};

using ArmRegressor = std::variant<RidgeRegressor, FeedforwardRegressor>;

/// Per-arm outcome fits: mu0 trained on A=0 rows only, mu1 on A=1 rows only.
class OutcomePair {
 public:
  OutcomePair(OutcomeLearner kind, ArmRegressor mu0, ArmRegressor mu1);

  Vector predict_mu0(const Matrix& X) const;
  Vector predict_mu1(const Matrix& X) const;
  OutcomeLearner kind() const { return kind_; }

 private:
  OutcomeLearner kind_;
  ArmRegressor mu0_, mu1_;
};

OutcomePair fit_outcome(const Matrix& X, const Vector& Y, const Vector& A, const OutcomeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Derived quantities

/// h_i = A_i/pi_i - (1-A_i)/(1-pi_i).
Vector clever_covariates(const Vector& A, const Vector& pi_hat);

/// Y*_i = Y_i - [pi_i mu0_i + (1-pi_i) mu1_i]. The pairing of pi with mu0 is
/// intentional: Y* is not the residual Y - E[Y|X].
Vector pseudo_outcomes(const Vector& Y, const Vector& pi_hat, const Vector& mu0_hat, const Vector& mu1_hat);

/// Per-row nuisance evaluations on a designated evaluation set.
struct NuisanceVectors {
  Vector pi, mu0, mu1;
};

/// Fitted propensity and outcome models plus their cached evaluations.
struct NuisanceFit {
  PropensityModel propensity;
  OutcomePair outcome;
  NuisanceVectors cached;

  /// Fits both models on (X, A, Y) and caches evaluations on `eval_X`.
  static NuisanceFit fit(const Matrix& X, const Vector& A, const Vector& Y, const Matrix& eval_X,
                         const PropensityConfig& pcfg, const OutcomeConfig& ocfg);
};

}  // namespace amr
