#include "amr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amr/error.hpp"

namespace amr {

double ImbalanceProfile::mean() const {
  double sum = 0.0;
  Index k = 0;
  for (Index j = 0; j < values.size(); ++j) {
    if (!flagged[static_cast<std::size_t>(j)]) {
      sum += values[j];
      ++k;
    }
  }
  return k > 0 ? sum / double(k) : std::numeric_limits<double>::quiet_NaN();
}

ImbalanceProfile imbalance_profile(const Matrix& X, const Vector& b, ImbalanceConvention convention,
                                   std::string weights_tag) {
  if (X.rows() != b.size()) throw ArgumentError("imbalance_profile: X rows and weight length differ");
  if (X.rows() == 0) throw ArgumentError("imbalance_profile: no rows");
  ImbalanceProfile prof;
  prof.values = Vector(X.cols());
  prof.flagged.assign(static_cast<std::size_t>(X.cols()), false);
  prof.weights_tag = std::move(weights_tag);
  prof.convention = convention;
  const double n = double(X.rows());
  for (Index j = 0; j < X.cols(); ++j) {
    const double second = X.col(j).squaredNorm() / n;
    if (!(second > 0.0)) {
      prof.flagged[static_cast<std::size_t>(j)] = true;
      prof.values[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double moment = X.col(j).dot(b) / n;
    const double s = moment * moment / second;
    prof.values[j] = convention == ImbalanceConvention::corrected ? std::sqrt(s) : 1.0 / std::sqrt(s);
  }
  return prof;
}

WeightSummary weight_summary(const Vector& weights) {
  if (weights.size() == 0) throw StateError("weight_summary: no weights recorded");
  std::vector<double> v(weights.data(), weights.data() + weights.size());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double h = q * double(v.size() - 1);
    const std::size_t k = static_cast<std::size_t>(std::floor(h));
    return k + 1 < v.size() ? v[k] + (h - double(k)) * (v[k + 1] - v[k]) : v.back();
  };
  WeightSummary s;
  s.min = v.front();
  s.max = v.back();
  s.mean = weights.mean();
  s.mean_abs = weights.cwiseAbs().mean();
  s.q01 = quantile(0.01);
  s.q05 = quantile(0.05);
  s.q50 = quantile(0.50);
  s.q95 = quantile(0.95);
  s.q99 = quantile(0.99);
  return s;
}

WeightSummary weight_summary(const EstimateReport& report) { return weight_summary(report.weights); }

Histogram propensity_histogram(const Vector& pi_hat, int bins) {
  if (bins < 2) throw ArgumentError("propensity_histogram: need at least 2 bins");
  Histogram h;
  h.edges = Vector(bins + 1);
  for (int k = 0; k <= bins; ++k) h.edges[k] = double(k) / double(bins);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < pi_hat.size(); ++i) {
    const double p = pi_hat[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("propensity_histogram: value at row " + std::to_string(i) + " is outside [0,1]");
    }
    int k = std::min(bins - 1, static_cast<int>(std::floor(p * bins)));
    if (k + 1 < bins && p >= h.edges[k + 1]) ++k;  // p * bins rounded down across an edge
    if (k > 0 && p < h.edges[k]) --k;
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

}  // namespace amr
