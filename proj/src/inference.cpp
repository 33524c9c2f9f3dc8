#include "amr/inference.hpp"

#include <cmath>
#include <numbers>

#include "amr/error.hpp"

namespace amr {

double influence_variance(const Vector& contributions, double theta_hat) {
  if (contributions.size() < 2) throw ArgumentError("influence_variance: need at least 2 contributions");
  return (contributions.array() - theta_hat).square().mean();
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("normal_quantile: p must lie in (0,1)");
  // Acklam's rational approximation, then one Halley step on erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

ConfidenceInterval wald_interval(double theta_hat, double sigma_hat, Index n, double alpha, IntervalKind kind) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("wald_interval: alpha must lie in (0,1)");
  if (n < 2) throw ArgumentError("wald_interval: n must be at least 2");
  if (!(sigma_hat >= 0.0)) throw ArgumentError("wald_interval: sigma must be non-negative");
  const double half = normal_quantile(1.0 - alpha / 2.0) * sigma_hat / std::sqrt(double(n));
  return ConfidenceInterval{theta_hat - half, theta_hat + half, 1.0 - alpha, kind, sigma_hat};
}

ConfidenceInterval efficient_interval(const EstimateReport& report, double alpha) {
  const double var = influence_variance(report.contributions, report.theta_hat);
  return wald_interval(report.theta_hat, std::sqrt(var), report.n(), alpha, IntervalKind::efficient);
}

ConservativeInterval conservative_interval(const EstimateReport& amr_report, double alpha) {
  if (!amr_report.aipw_contributions) {
    throw StateError("conservative_interval: report carries no recorded h*Y* contributions");
  }
  ConservativeInterval out;
  out.var_efficient = influence_variance(amr_report.contributions, amr_report.theta_hat);
  out.var_conservative = influence_variance(*amr_report.aipw_contributions, amr_report.theta_hat);
  out.delta_hat = out.var_conservative - out.var_efficient;
  out.interval = wald_interval(amr_report.theta_hat, std::sqrt(out.var_conservative), amr_report.n(), alpha,
                               IntervalKind::conservative);
  return out;
}

}  // namespace amr
