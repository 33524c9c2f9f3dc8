#pragma once

#include <string>
#include <vector>

#include "amr/estimators.hpp"
#include "amr/types.hpp"

namespace amr {

/// Exponent on the normalized weighted moment s_j = mean(b x_j)^2 / mean(x_j^2).
/// `corrected` reports s^(1/2), so zero weights give zero imbalance;
/// `inverse` reports s^(-1/2).
enum class ImbalanceConvention { corrected, inverse };

struct ImbalanceProfile {
  /// One value per covariate; NaN for flagged (all-zero) columns.
  Vector values;
  std::vector<bool> flagged;
  std::string weights_tag;
  ImbalanceConvention convention = ImbalanceConvention::corrected;

  /// Mean over unflagged columns.
  double mean() const;
};

ImbalanceProfile imbalance_profile(const Matrix& X, const Vector& b,
                                   ImbalanceConvention convention = ImbalanceConvention::corrected,
                                   std::string weights_tag = "");

struct WeightSummary {
  double min = 0.0, max = 0.0, mean = 0.0, mean_abs = 0.0;
  /// Type-7 quantiles at 1, 5, 50, 95 and 99 percent.
  double q01 = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, q99 = 0.0;
};

WeightSummary weight_summary(const EstimateReport& report);
WeightSummary weight_summary(const Vector& weights);

struct Histogram {
  /// bins + 1 edges on [0, 1].
  Vector edges;
  std::vector<Index> counts;
};

/// Equal-width bins on [0, 1]; bin k is [k/B, (k+1)/B), the last bin also holds 1.
Histogram propensity_histogram(const Vector& pi_hat, int bins = 50);

}  // namespace amr
