#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amr/dataset.hpp"
#include "amr/nuisance.hpp"
#include "amr/types.hpp"
#include "amr/weightfit.hpp"

namespace amr {

enum class Method { ipw, aipw, mr, amr, mr_oracle, amr_oracle, att_amr, atc_amr, policy };

/// Report tags: IPW, AIPW, MR, AMR, MR-oracleW, AMR-oracleW, ATT-AMR, ATC-AMR, POLICY.
std::string to_string(Method method);
/// Accepts the report tags case-insensitively plus the CLI names att and atc.
Method parse_method(const std::string& name);

struct EstimateReport {
  Method method = Method::ipw;
  double theta_hat = 0.0;
  /// Per-unit terms; theta_hat is their mean.
  Vector contributions;
  int folds = 1;
  std::string fingerprint;
  /// Per-unit weight that multiplied the outcome (h, w(Y), w*(Y*), ...).
  Vector weights;
  /// AMR only: h_i Y*_i on held-out units, for the conservative interval.
  std::optional<Vector> aipw_contributions;

  Index n() const { return contributions.size(); }
};

/// Fixed per-row nuisance values that replace the fitted ones, e.g. true
/// propensities or mu0 = mu1 = 0.
struct NuisanceOverrides {
  std::optional<Vector> pi, mu0, mu1;

  bool any() const { return pi || mu0 || mu1; }
  static NuisanceOverrides zero_outcome(Index n);
};

struct EstimatorConfig {
  /// Cross-fitting folds; 1 fits and evaluates on the full sample.
  int folds = 5;
  std::uint64_t seed = 0;
  PropensityConfig propensity;
  OutcomeConfig outcome;
  CrossValidationPlan weights;
  NuisanceOverrides overrides;

  /// 16 hex digits identifying the configuration (FNV-1a over its fields).
  std::string fingerprint() const;
};

/// Nuisances fitted on each training complement, evaluated both on that
/// complement and on the held-out fold.
struct CrossFit {
  struct Fold {
    IndexList train, eval;
    NuisanceVectors on_train, on_eval;
  };
  std::vector<Fold> folds;
  /// Held-out evaluations assembled over all n units.
  NuisanceVectors held_out;
  bool has_outcome = false;
};

CrossFit cross_fit_nuisances(const ObservationSet& data, const EstimatorConfig& cfg, bool need_outcome);

EstimateReport estimate_ipw(const ObservationSet& data, const Vector& pi_hat);
EstimateReport estimate_aipw(const ObservationSet& data, const NuisanceVectors& nuisances);
EstimateReport estimate_aipw(const ObservationSet& data, const NuisanceFit& fit);

/// Cross-fitted IPW / AIPW with nuisances from `cfg`.
EstimateReport estimate_ipw(const ObservationSet& data, const EstimatorConfig& cfg);
EstimateReport estimate_aipw(const ObservationSet& data, const EstimatorConfig& cfg);

/// Cross-fitted weight regression of h on Y; contributions w(Y_i) Y_i.
EstimateReport estimate_mr(const ObservationSet& data, const EstimatorConfig& cfg);
/// Cross-fitted weight regression of h on Y*; contributions w*(Y*_i) Y*_i.
EstimateReport estimate_amr(const ObservationSet& data, const EstimatorConfig& cfg);

enum class TreatedMode { att, atc };
/// ATT regresses A/pi on Y - (1-pi) mu1; ATC regresses (1-A)/(1-pi) on Y - pi mu0.
EstimateReport estimate_att_atc(const ObservationSet& data, const EstimatorConfig& cfg, TreatedMode mode);

/// Regresses `ratio` on `residuals` with cross-fitting; contributions
/// w(r_i) r_i. No plug-in term is added.
EstimateReport estimate_policy_value(const Vector& residuals, const Vector& ratio, const CrossValidationPlan& plan,
                                     int folds, std::uint64_t seed);

/// Runs the requested estimators on one shared set of cross-fitted nuisances.
std::vector<EstimateReport> estimator_suite(const ObservationSet& data, const EstimatorConfig& cfg,
                                            const std::vector<Method>& methods = {Method::ipw, Method::aipw,
                                                                                  Method::mr, Method::amr});

}  // namespace amr
