#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amr/types.hpp"

namespace amr {

enum class WeightMethod { kernel_ridge, nadaraya_watson };

std::string to_string(WeightMethod method);
WeightMethod parse_weight_method(const std::string& name);

/// Level the kernel part is fitted around. `none` is plain kernel ridge
/// (predictions shrink toward 0 away from the data); `mean` subtracts the
/// target mean first. A constant target is reproduced exactly under either.
enum class Centering { none, mean };

std::string to_string(Centering centering);
Centering parse_centering(const std::string& name);

/// Hyperparameter search for the univariate weight regression.
struct CrossValidationPlan {
  WeightMethod method = WeightMethod::kernel_ridge;
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  /// Multipliers applied to the median-heuristic bandwidth.
  std::vector<double> gamma_multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};
  int folds = 5;
  std::uint64_t seed = 0;
  /// Absolute bandwidth; when set it replaces median heuristic x multipliers.
  std::optional<double> bandwidth;
  /// Upper bound on kernel-ridge anchor points.
  Index max_anchors = 4000;
  Centering centering = Centering::none;

  void validate() const;
};

/// Fitted univariate regression u -> w(u).
///
/// Kernel ridge models are stored in feature form: the kernel restricted to a
/// set of anchor points (chosen by pivoted Cholesky) is factored as L L^T and
/// w(u) = center + beta . L^{-1} k(anchors, u). With every training point as an
/// anchor this is exactly the m x m Gaussian-kernel ridge solution.
class WeightModel {
 public:
  Vector evaluate(const Vector& u) const;
  double operator()(double u) const;

  WeightMethod method() const { return method_; }
  double center() const { return center_; }
  double bandwidth() const { return gamma_; }
  double lambda() const { return lambda_; }
  const Vector& anchors() const { return anchors_; }
  /// alpha with w(u) = center + sum_j alpha_j exp(-(u - a_j)^2 / (2 gamma^2)); kernel ridge only.
  Vector dual_coefficients() const;
  /// Out-of-fold squared error per (gamma, lambda) candidate, empty when no search ran.
  const std::vector<double>& cv_errors() const { return cv_errors_; }

  friend WeightModel fit_weight_model(const Vector& u, const Vector& t, const CrossValidationPlan& plan);
  friend WeightModel fit_weight_model_fixed(const Vector& u, const Vector& t, WeightMethod method, double gamma,
                                            double lambda, double fallback_lambda, Index max_anchors,
                                            Centering centering);

 private:
  WeightMethod method_ = WeightMethod::kernel_ridge;
  double center_ = 0.0;
  double gamma_ = 1.0;
  double lambda_ = 0.0;
  Vector anchors_;
  Matrix chol_;  // kernel ridge: lower-triangular factor on anchors
  Vector coef_;  // kernel ridge: feature coefficients; Nadaraya-Watson: centered targets
  std::vector<double> cv_errors_;
};

/// Median of |u_i - u_j| over pairs i < j; exact up to 2000 points, computed
/// on a seeded 2000-point subsample above that. If more than half of the
/// gaps are zero the median of the positive gaps is returned.
double median_heuristic_bandwidth(const Vector& u, std::uint64_t seed = 0);

/// Centers t per plan.centering, searches (lambda, gamma) by V-fold cross-validation, refits on
/// all points with the winner. A single-candidate plan skips the search.
WeightModel fit_weight_model(const Vector& u, const Vector& t, const CrossValidationPlan& plan = {});

/// Fit with fixed hyperparameters. `fallback_lambda` replaces lambda = 0 when
/// the kernel system is singular (duplicate abscissae).
WeightModel fit_weight_model_fixed(const Vector& u, const Vector& t, WeightMethod method, double gamma, double lambda,
                                   double fallback_lambda = 0.0, Index max_anchors = 4000,
                                   Centering centering = Centering::none);

inline Vector evaluate_weight_model(const WeightModel& model, const Vector& u) { return model.evaluate(u); }

}  // namespace amr
