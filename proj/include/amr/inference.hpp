#pragma once

#include "amr/estimators.hpp"
#include "amr/types.hpp"

namespace amr {

enum class IntervalKind { efficient, conservative };

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  /// Nominal coverage 1 - alpha.
  double level = 0.95;
  IntervalKind kind = IntervalKind::efficient;
  /// Standard deviation the width was built from.
  double sigma_hat = 0.0;

  double width() const { return upper - lower; }
  bool contains(double theta) const { return lower <= theta && theta <= upper; }
};

/// Mean of (c_i - theta)^2 with divisor n.
double influence_variance(const Vector& contributions, double theta_hat);

/// Inverse standard-normal CDF.
double normal_quantile(double p);

/// theta +- z_{1-alpha/2} sigma / sqrt(n).
ConfidenceInterval wald_interval(double theta_hat, double sigma_hat, Index n, double alpha,
                                 IntervalKind kind = IntervalKind::efficient);

/// Interval from a report's own contributions.
ConfidenceInterval efficient_interval(const EstimateReport& report, double alpha);

struct ConservativeInterval {
  ConfidenceInterval interval;
  double var_efficient = 0.0;
  double var_conservative = 0.0;
  /// var_conservative - var_efficient.
  double delta_hat = 0.0;
};

/// AMR-centered interval whose width uses the recorded h Y* terms.
ConservativeInterval conservative_interval(const EstimateReport& amr_report, double alpha);

}  // namespace amr
