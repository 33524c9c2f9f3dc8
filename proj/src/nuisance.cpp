#include "amr/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "amr/error.hpp"

namespace amr {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double expit(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix with_intercept(const Matrix& X) {
  Matrix Z(X.rows(), X.cols() + 1);
  Z.col(0).setOnes();
  Z.rightCols(X.cols()) = X;
  return Z;
}

enum class IrlsStatus { converged, separation, singular, stalled, iteration_cap };

struct IrlsResult {
  Vector beta;
  IrlsStatus status = IrlsStatus::iteration_cap;
  int iterations = 0;
  std::vector<double> trace;
};

IrlsResult irls(const Matrix& Z, const Vector& A, double penalty, const PropensityConfig& cfg, bool watch_separation) {
  const Index n = Z.rows();
  const Index k = Z.cols();
  IrlsResult res;
  res.beta = Vector::Zero(k);

  auto objective = [&](const Vector& b) {
    const Vector eta = Z * b;
    const double ll = (A.array() * eta.array() - eta.array().unaryExpr([](double z) { return softplus(z); })).sum();
    return ll - 0.5 * penalty * b.tail(k - 1).squaredNorm();
  };

  double obj = objective(res.beta);
  res.trace.push_back(obj);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Vector eta = Z * res.beta;
    Vector mu(n), w(n);
    for (Index i = 0; i < n; ++i) {
      mu[i] = expit(eta[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    Vector grad = Z.transpose() * (A - mu);
    grad.tail(k - 1) -= penalty * res.beta.tail(k - 1);
    if (grad.cwiseAbs().maxCoeff() / double(n) < cfg.tol) {
      res.status = IrlsStatus::converged;
      return res;
    }
    Matrix H = Z.transpose() * w.asDiagonal() * Z;
    H.diagonal().tail(k - 1).array() += penalty;
    Eigen::LDLT<Matrix> ldlt(H);
    const Vector d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-12 * d.cwiseAbs().maxCoeff())) {
      res.status = IrlsStatus::singular;
      return res;
    }
    const Vector delta = ldlt.solve(grad);
    // Newton decrement: the largest gain still available is below what the
    // summed objective can resolve.
    if (grad.dot(delta) <= 1e-12 * (1.0 + std::abs(obj))) {
      res.status = IrlsStatus::converged;
      return res;
    }

    double step = 1.0;
    Vector candidate;
    double cand_obj = 0.0;
    bool accepted = false;
    // Near the optimum the Newton gain falls below the rounding error of the
    // summed objective; accept steps that lose no more than that.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(obj));
    while (step > 1e-12) {
      candidate = res.beta + step * delta;
      cand_obj = objective(candidate);
      if (cand_obj >= obj - slack) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!accepted) {
      // No ascent available along the Newton direction: at the optimum up to rounding.
      res.status = grad.cwiseAbs().maxCoeff() / double(n) < std::sqrt(cfg.tol) ? IrlsStatus::converged
                                                                                 : IrlsStatus::stalled;
      return res;
    }
    res.beta = candidate;
    obj = cand_obj;
    res.trace.push_back(obj);
    if (watch_separation && res.beta.cwiseAbs().maxCoeff() > 30.0) {
      res.status = IrlsStatus::separation;
      return res;
    }
  }
  res.status = IrlsStatus::iteration_cap;
  return res;
}

const char* describe(IrlsStatus s) {
  switch (s) {
    case IrlsStatus::converged: return "converged";
    case IrlsStatus::separation: return "coefficients exceeded 30 (separation)";
    case IrlsStatus::singular: return "singular Hessian";
    case IrlsStatus::stalled: return "line search stalled";
    case IrlsStatus::iteration_cap: return "iteration cap reached";
  }
  return "unknown";
}

}  // namespace

PropensityModel::PropensityModel(Vector beta, double clip_eps) : beta_(std::move(beta)), clip_eps_(clip_eps) {
  if (!(clip_eps_ >= 0.0 && clip_eps_ < 0.5)) throw ArgumentError("propensity clip floor must lie in [0, 0.5)");
}

double PropensityModel::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() + 1 != beta_.size()) throw ArgumentError("propensity predict: column count mismatch");
  const double p = expit(beta_[0] + x.dot(beta_.tail(beta_.size() - 1)));
  const double floor = std::max(clip_eps_, kPropensityFloor);
  return std::clamp(p, floor, 1.0 - floor);
}

Vector PropensityModel::predict(const Matrix& X) const {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
  return out;
}

PropensityModel fit_propensity(const Matrix& X, const Vector& A, const PropensityConfig& cfg) {
  if (X.rows() != A.size()) throw ArgumentError("fit_propensity: X and A lengths differ");
  if (!X.allFinite()) throw ArgumentError("fit_propensity: covariates must be finite");
  const double treated = A.sum();
  if (treated < 0.5 || treated > double(A.size()) - 0.5) {
    throw FitError("fit_propensity: both treatment arms must be present");
  }
  // Constant columns duplicate the intercept; they are fitted with slope 0.
  IndexList varying;
  for (Index j = 0; j < X.cols(); ++j)
    if (X.col(j).maxCoeff() > X.col(j).minCoeff()) varying.push_back(j);
  Matrix Xv(X.rows(), static_cast<Index>(varying.size()));
  for (std::size_t j = 0; j < varying.size(); ++j) Xv.col(static_cast<Index>(j)) = X.col(varying[j]);
  const Matrix Z = with_intercept(Xv);

  IrlsResult res = irls(Z, A, 0.0, cfg, true);
  bool penalized = false;
  if (res.status != IrlsStatus::converged) {
    const IrlsStatus first = res.status;
    res = irls(Z, A, 1e-4, cfg, false);
    penalized = true;
    if (res.status != IrlsStatus::converged) {
      throw FitError(std::string("fit_propensity: no convergence (unpenalized: ") + describe(first) +
                     "; penalized: " + describe(res.status) + ")");
    }
  }
  Vector beta = Vector::Zero(X.cols() + 1);
  beta[0] = res.beta[0];
  for (std::size_t j = 0; j < varying.size(); ++j) beta[varying[j] + 1] = res.beta[static_cast<Index>(j) + 1];
  PropensityModel model(std::move(beta), cfg.clip_eps);
  model.penalized = penalized;
  model.iterations = res.iterations;
  model.loglik_trace = std::move(res.trace);
  return model;
}

std::string to_string(OutcomeLearner learner) {
  return learner == OutcomeLearner::ridge ? "ridge" : "ffnn";
}

OutcomeLearner parse_outcome_learner(const std::string& name) {
  if (name == "ridge" || name == "ridge-linear" || name == "linear") return OutcomeLearner::ridge;
  if (name == "ffnn" || name == "feedforward") return OutcomeLearner::feedforward;
  throw ArgumentError("unknown outcome learner '" + name + "' (expected ridge or ffnn)");
}

RidgeRegressor RidgeRegressor::fit(const Matrix& X, const Vector& y, double lambda) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (n == 0 || y.size() != n) throw ArgumentError("ridge fit: empty or mismatched data");
  if (!(lambda >= 0.0)) throw ArgumentError("ridge fit: penalty must be non-negative");
  RidgeRegressor r;
  r.mean_ = X.colwise().mean().transpose();
  r.scale_ = ((X.rowwise() - r.mean_.transpose()).colwise().squaredNorm().transpose() / double(n)).cwiseSqrt();
  Matrix aug = Matrix::Zero(n + p, p);
  for (Index j = 0; j < p; ++j) {
    if (r.scale_[j] > 1e-12) {
      aug.block(0, j, n, 1) = (X.col(j).array() - r.mean_[j]) / r.scale_[j];
    } else {
      r.scale_[j] = 1.0;  // constant column: stays zero in the design
    }
  }
  aug.bottomRows(p).diagonal().setConstant(std::sqrt(lambda));
  const double ybar = y.mean();
  Vector rhs = Vector::Zero(n + p);
  rhs.head(n) = y.array() - ybar;
  r.coef_ = p > 0 ? Vector(aug.colPivHouseholderQr().solve(rhs)) : Vector();
  r.intercept_ = ybar;
  return r;
}

Vector RidgeRegressor::predict(const Matrix& X) const {
  if (X.cols() != mean_.size()) throw ArgumentError("ridge predict: column count mismatch");
  Vector out = Vector::Constant(X.rows(), intercept_);
  if (coef_.size() > 0) {
    out += ((X.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array()).matrix() * coef_;
  }
  return out;
}

Vector RidgeRegressor::slopes() const { return coef_.cwiseQuotient(scale_); }

OutcomePair::OutcomePair(OutcomeLearner kind, ArmRegressor mu0, ArmRegressor mu1)
    : kind_(kind), mu0_(std::move(mu0)), mu1_(std::move(mu1)) {}

namespace {

Vector predict_arm(const ArmRegressor& reg, const Matrix& X) {
  return std::visit([&](const auto& r) { return r.predict(X); }, reg);
}

ArmRegressor fit_arm(const Matrix& X, const Vector& y, const OutcomeConfig& cfg, int arm) {
  const Index rows = X.rows();
  if (rows == 0) throw FitError("fit_outcome: arm A=" + std::to_string(arm) + " has no rows");
  if (cfg.learner == OutcomeLearner::ridge) {
    if (rows < X.cols() + 1) {
      throw FitError("fit_outcome: ridge needs at least p+1=" + std::to_string(X.cols() + 1) + " rows in arm A=" +
                     std::to_string(arm) + ", got " + std::to_string(rows));
    }
    return RidgeRegressor::fit(X, y, cfg.ridge_lambda);
  }
  if (rows < cfg.ffnn_min_rows) {
    throw FitError("fit_outcome: feedforward needs at least " + std::to_string(cfg.ffnn_min_rows) +
                   " rows in arm A=" + std::to_string(arm) + ", got " + std::to_string(rows));
  }
  FeedforwardConfig fcfg = cfg.ffnn;
  fcfg.seed = cfg.ffnn.seed * 2 + static_cast<std::uint64_t>(arm);
  return FeedforwardRegressor::fit(X, y, fcfg);
}

}  // namespace

Vector OutcomePair::predict_mu0(const Matrix& X) const { return predict_arm(mu0_, X); }
Vector OutcomePair::predict_mu1(const Matrix& X) const { return predict_arm(mu1_, X); }

OutcomePair fit_outcome(const Matrix& X, const Vector& Y, const Vector& A, const OutcomeConfig& cfg) {
  if (X.rows() != Y.size() || A.size() != Y.size()) throw ArgumentError("fit_outcome: length mismatch");
  IndexList rows0, rows1;
  for (Index i = 0; i < A.size(); ++i) (A[i] == 1.0 ? rows1 : rows0).push_back(i);
  ArmRegressor mu0 = fit_arm(take_rows(X, rows0), take(Y, rows0), cfg, 0);
  ArmRegressor mu1 = fit_arm(take_rows(X, rows1), take(Y, rows1), cfg, 1);
  return OutcomePair(cfg.learner, std::move(mu0), std::move(mu1));
}

Vector clever_covariates(const Vector& A, const Vector& pi_hat) {
  if (A.size() != pi_hat.size()) throw ArgumentError("clever_covariates: length mismatch");
  Vector h(A.size());
  for (Index i = 0; i < A.size(); ++i) {
    const double p = pi_hat[i];
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("clever_covariates: propensity at row " + std::to_string(i) + " is outside (0,1)");
    }
    h[i] = A[i] / p - (1.0 - A[i]) / (1.0 - p);
  }
  return h;
}

Vector pseudo_outcomes(const Vector& Y, const Vector& pi_hat, const Vector& mu0_hat, const Vector& mu1_hat) {
  const Index n = Y.size();
  if (pi_hat.size() != n || mu0_hat.size() != n || mu1_hat.size() != n) {
    throw ArgumentError("pseudo_outcomes: length mismatch");
  }
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const double p = pi_hat[i];
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("pseudo_outcomes: propensity at row " + std::to_string(i) + " is outside (0,1)");
    }
    out[i] = Y[i] - (p * mu0_hat[i] + (1.0 - p) * mu1_hat[i]);
  }
  return out;
}

NuisanceFit NuisanceFit::fit(const Matrix& X, const Vector& A, const Vector& Y, const Matrix& eval_X,
                             const PropensityConfig& pcfg, const OutcomeConfig& ocfg) {
  PropensityModel prop = fit_propensity(X, A, pcfg);
  OutcomePair outcome = fit_outcome(X, Y, A, ocfg);
  NuisanceVectors cached{prop.predict(eval_X), outcome.predict_mu0(eval_X), outcome.predict_mu1(eval_X)};
  return NuisanceFit{std::move(prop), std::move(outcome), std::move(cached)};
}

}  // namespace amr
