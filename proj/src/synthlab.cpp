#include "amr/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "amr/error.hpp"
#include "csv_util.hpp"

namespace amr {

namespace {

double expit(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::vector<std::string> block_names(const SimulationConfig& cfg) {
  std::vector<std::string> names;
  for (int j = 1; j <= cfg.p(); ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace

std::string to_string(Mu0Form form) {
  switch (form) {
    case Mu0Form::nonlinear: return "nonlinear";
    case Mu0Form::linear: return "linear";
    case Mu0Form::zero: return "zero";
  }
  return "?";
}

Mu0Form parse_mu0_form(const std::string& name) {
  if (name == "nonlinear") return Mu0Form::nonlinear;
  if (name == "linear") return Mu0Form::linear;
  if (name == "zero") return Mu0Form::zero;
  throw ArgumentError("unknown mu0 form '" + name + "' (expected nonlinear, linear or zero)");
}

void SimulationConfig::validate() const {
  if (n < 2) throw ArgumentError("simulation: n must be at least 2");
  if (p_i < 0 || p_c < 0 || p_o < 0 || p_s < 0) throw ArgumentError("simulation: block sizes must be >= 0");
  if (p() < 1) throw ArgumentError("simulation: need at least one covariate");
  if (!(sigma > 0.0)) throw ArgumentError("simulation: sigma must be positive");
  if (!std::isfinite(effect)) throw ArgumentError("simulation: effect must be finite");
}

SyntheticDraw generate_synthetic(const SimulationConfig& cfg) {
  cfg.validate();
  const Index n = cfg.n;
  const int p = cfg.p();
  Engine eng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix X(n, p);
  Vector A(n), Y(n), pi(n), mu0(n), mu1(n);
  for (Index i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = normal(eng);
    const auto row = X.row(i);
    const double sI = row.segment(0, cfg.p_i).sum();
    const double sC = row.segment(cfg.p_i, cfg.p_c).sum();
    const double sO = row.segment(cfg.p_i + cfg.p_c, cfg.p_o).sum();
    double m0 = 0.0;
    if (cfg.mu0 == Mu0Form::nonlinear) {
      const double c = sC * std::cos(std::numbers::pi * sO);
      m0 = 10.0 * std::sin(std::numbers::pi * sO) + 20.0 * sO * sO + c * c;
    } else if (cfg.mu0 == Mu0Form::linear) {
      m0 = sO + sC;
    }
    pi[i] = expit(sI + 0.5 * sC);
    A[i] = unif(eng) < pi[i] ? 1.0 : 0.0;
    mu0[i] = m0;
    mu1[i] = m0 + cfg.effect;
    Y[i] = cfg.effect * A[i] + m0 + cfg.sigma * normal(eng);
  }
  return SyntheticDraw{ObservationSet(std::move(X), std::move(A), std::move(Y), block_names(cfg)), cfg.effect,
                       NuisanceVectors{std::move(pi), std::move(mu0), std::move(mu1)}};
}

void GaussianDesign::validate() const {
  if (!pi || !mu0 || !mu1) throw ArgumentError("gaussian design: pi, mu0 and mu1 must all be set");
  if (!(sigma > 0.0)) throw ArgumentError("gaussian design: sigma must be positive");
  if (p() < 1) throw ArgumentError("gaussian design: covariate dimension must be at least 1");
  if (law == Law::point_mass && !point.allFinite()) throw ArgumentError("gaussian design: point must be finite");
}

Matrix GaussianDesign::draw_covariates(Index n, Engine& eng) const {
  if (law == Law::point_mass) return point.transpose().replicate(n, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix X(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) X(i, j) = normal(eng);
  return X;
}

double GaussianDesign::true_theta(std::uint64_t seed, Index M) const {
  validate();
  if (known_theta) return *known_theta;
  if (law == Law::point_mass) return mu1(point) - mu0(point);
  Engine eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(dim);
  double sum = 0.0;
  for (Index m = 0; m < M; ++m) {
    for (Index j = 0; j < dim; ++j) x[j] = normal(eng);
    sum += mu1(x) - mu0(x);
  }
  return sum / double(M);
}

GaussianDesign GaussianDesign::point_mass_design(double pi_value, double mu0_value, double mu1_value, double sigma) {
  GaussianDesign d;
  d.law = Law::point_mass;
  d.point = Vector::Zero(1);
  d.pi = [pi_value](const Vector&) { return pi_value; };
  d.mu0 = [mu0_value](const Vector&) { return mu0_value; };
  d.mu1 = [mu1_value](const Vector&) { return mu1_value; };
  d.sigma = sigma;
  d.known_theta = mu1_value - mu0_value;
  return d;
}

NuisanceVectors design_nuisances(const GaussianDesign& design, const Matrix& X) {
  NuisanceVectors nv{Vector(X.rows()), Vector(X.rows()), Vector(X.rows())};
  Vector x(X.cols());
  for (Index i = 0; i < X.rows(); ++i) {
    x = X.row(i).transpose();
    nv.pi[i] = design.pi(x);
    nv.mu0[i] = design.mu0(x);
    nv.mu1[i] = design.mu1(x);
    if (!(nv.pi[i] > 0.0 && nv.pi[i] < 1.0)) {
      throw DomainError("gaussian design: pi at row " + std::to_string(i) + " is outside (0,1)");
    }
  }
  return nv;
}

GaussianDraw generate_gaussian_example(const GaussianDesign& design, Index n, std::uint64_t seed) {
  design.validate();
  if (n < 2) throw ArgumentError("generate_gaussian_example: n must be at least 2");
  Engine eng(seed);
  Matrix X = design.draw_covariates(n, eng);
  NuisanceVectors truth = design_nuisances(design, X);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector A(n), Y(n);
  for (Index i = 0; i < n; ++i) {
    A[i] = unif(eng) < truth.pi[i] ? 1.0 : 0.0;
    Y[i] = (A[i] == 1.0 ? truth.mu1[i] : truth.mu0[i]) + design.sigma * normal(eng);
  }
  const double theta = design.true_theta(derive_seed(seed, {0x7e7a}));
  return GaussianDraw{ObservationSet(std::move(X), std::move(A), std::move(Y)), theta, std::move(truth)};
}

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::w: return "w";
    case OracleKind::w0: return "w0";
    case OracleKind::wstar: return "wstar";
    case OracleKind::wstar0: return "wstar0";
  }
  return "?";
}

OracleKind parse_oracle_kind(const std::string& name) {
  if (name == "w") return OracleKind::w;
  if (name == "w0") return OracleKind::w0;
  if (name == "wstar" || name == "w*") return OracleKind::wstar;
  if (name == "wstar0" || name == "w*0") return OracleKind::wstar0;
  throw ArgumentError("unknown oracle kind '" + name + "' (expected w, w0, wstar or wstar0)");
}

double OracleWeightTable::evaluate(double u, bool* uncovered) const {
  const Index G = grid.size();
  if (G == 0) throw StateError("oracle table is empty");
  bool off = false;
  Index lo = 0, hi = 0;
  double frac = 0.0;
  if (u <= grid[0]) {
    off = u < grid[0];
  } else if (u >= grid[G - 1]) {
    off = u > grid[G - 1];
    lo = hi = G - 1;
  } else {
    hi = static_cast<Index>(std::upper_bound(grid.data(), grid.data() + G, u) - grid.data());
    lo = hi - 1;
    frac = (u - grid[lo]) / (grid[hi] - grid[lo]);
  }
  double value;
  const auto ok = [&](Index i) { return bool(in_support[static_cast<std::size_t>(i)]); };
  if (ok(lo) && ok(hi)) {
    value = values[lo] + frac * (values[hi] - values[lo]);
  } else {
    off = true;
    Index best = -1;
    for (Index d = 0; d < G && best < 0; ++d) {
      if (lo - d >= 0 && ok(lo - d)) best = lo - d;
      else if (hi + d < G && ok(hi + d)) best = hi + d;
    }
    value = best >= 0 ? values[best] : 0.0;
  }
  if (uncovered) *uncovered = off;
  return value;
}

Vector default_oracle_grid(const Vector& regressand, Index points) {
  if (regressand.size() < 2 || points < 2) throw ArgumentError("default_oracle_grid: need >= 2 values and points");
  std::vector<double> v(regressand.data(), regressand.data() + regressand.size());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double h = q * double(v.size() - 1);
    const std::size_t k = static_cast<std::size_t>(h);
    return k + 1 < v.size() ? v[k] + (h - double(k)) * (v[k + 1] - v[k]) : v.back();
  };
  const double lo = quantile(0.005), hi = quantile(0.995);
  if (!(hi > lo)) throw DomainError("default_oracle_grid: regressand has no spread");
  return Vector::LinSpaced(points, lo, hi);
}

OracleWeightTable oracle_weight_table(const GaussianDesign& design, OracleKind kind, const Vector& grid, Index M,
                                      std::uint64_t seed, const std::optional<PlugInNuisances>& plug_in) {
  design.validate();
  if (grid.size() < 1 || !grid.allFinite()) throw ArgumentError("oracle_weight_table: grid must be finite and non-empty");
  for (Index g = 1; g < grid.size(); ++g)
    if (!(grid[g] > grid[g - 1])) throw ArgumentError("oracle_weight_table: grid must be strictly increasing");
  if (M < 10'000) throw ArgumentError("oracle_weight_table: M must be at least 1e4");
  const bool plug = kind == OracleKind::w0 || kind == OracleKind::wstar0;
  if (plug && (!plug_in || !plug_in->pi || !plug_in->mu0 || !plug_in->mu1)) {
    throw ArgumentError("oracle_weight_table: kind " + to_string(kind) + " needs plug-in nuisance functions");
  }

  Engine eng(seed);
  const Index draws = design.law == GaussianDesign::Law::point_mass ? 1 : M;
  const Matrix X = design.draw_covariates(draws, eng);
  // Per draw: arm probabilities p, numerator ratios r, and arm means m.
  Vector p(draws), r1(draws), r0(draws), m1(draws), m0(draws);
  Vector x(X.cols());
  for (Index d = 0; d < draws; ++d) {
    x = X.row(d).transpose();
    const double pi = design.pi(x), mu0 = design.mu0(x), mu1 = design.mu1(x);
    p[d] = pi;
    r1[d] = 1.0;
    r0[d] = 1.0;
    m1[d] = mu1;
    m0[d] = mu0;
    if (plug) {
      const double ph = plug_in->pi(x);
      if (!(ph > 0.0 && ph < 1.0)) throw DomainError("oracle_weight_table: plug-in pi outside (0,1)");
      r1[d] = pi / ph;
      r0[d] = (1.0 - pi) / (1.0 - ph);
      if (kind == OracleKind::wstar0) {
        const double mstar = ph * plug_in->mu0(x) + (1.0 - ph) * plug_in->mu1(x);
        m1[d] = mu1 - mstar;
        m0[d] = mu0 - mstar;
      }
    } else if (kind == OracleKind::wstar) {
      const double tau = mu1 - mu0;
      m1[d] = pi * tau;
      m0[d] = -(1.0 - pi) * tau;
    }
  }

  OracleWeightTable table;
  table.kind = kind;
  table.grid = grid;
  table.values = Vector(grid.size());
  table.in_support.assign(static_cast<std::size_t>(grid.size()), true);
  table.M = draws;
  table.seed = seed;
  const double s2 = 2.0 * design.sigma * design.sigma;
  const double log_norm = -std::log(design.sigma * std::sqrt(2.0 * std::numbers::pi));
  const double log_floor = std::log(1e-300);
  Vector e1(draws), e0(draws);
  for (Index g = 0; g < grid.size(); ++g) {
    const double y = grid[g];
    e1 = -(y - m1.array()).square() / s2;
    e0 = -(y - m0.array()).square() / s2;
    const double top = std::max(e1.maxCoeff(), e0.maxCoeff());
    e1 = (e1.array() - top).exp();
    e0 = (e0.array() - top).exp();
    const double num = (r1.cwiseProduct(e1) - r0.cwiseProduct(e0)).sum();
    const double den = (p.cwiseProduct(e1) + (1.0 - p.array()).matrix().cwiseProduct(e0)).sum();
    const double log_den = std::log(den / double(draws)) + top + log_norm;
    if (!(den > 0.0) || log_den < log_floor) {
      table.values[g] = std::numeric_limits<double>::quiet_NaN();
      table.in_support[static_cast<std::size_t>(g)] = false;
    } else {
      table.values[g] = num / den;
    }
  }
  return table;
}

void export_oracle_table(const OracleWeightTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "u,weight\n";
  for (Index g = 0; g < table.grid.size(); ++g) {
    out << detail::format_double(table.grid[g]) << ',' << detail::format_double(table.values[g]) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

OracleEstimates oracle_estimates(const ObservationSet& data, const GaussianDesign& design,
                                 const std::vector<OracleWeightTable>& tables, const NuisanceVectors* plug_in) {
  const Index n = data.n();
  const NuisanceVectors truth = design_nuisances(design, data.X());
  if (plug_in && (plug_in->pi.size() != n || plug_in->mu0.size() != n || plug_in->mu1.size() != n)) {
    throw ArgumentError("oracle_estimates: plug-in evaluations must cover every row");
  }
  OracleEstimates out;
  EstimateReport ipw = estimate_ipw(data, truth.pi);
  ipw.fingerprint = "oracle";
  EstimateReport aipw = estimate_aipw(data, truth);
  aipw.fingerprint = "oracle";
  out.reports.push_back(std::move(ipw));
  out.reports.push_back(std::move(aipw));

  const NuisanceVectors& star = plug_in ? *plug_in : truth;
  const Vector ystar = pseudo_outcomes(data.Y(), star.pi, star.mu0, star.mu1);
  for (const auto& table : tables) {
    const bool amr = table.kind == OracleKind::wstar || table.kind == OracleKind::wstar0;
    const Vector& u = amr ? ystar : data.Y();
    Vector w(n);
    Index uncovered = 0;
    for (Index i = 0; i < n; ++i) {
      bool off = false;
      w[i] = table.evaluate(u[i], &off);
      uncovered += off ? 1 : 0;
    }
    if (double(uncovered) > 0.01 * double(n)) {
      throw CoverageError("oracle_estimates: " + to_string(table.kind) + " table covers only " +
                          std::to_string(n - uncovered) + " of " + std::to_string(n) + " regressand values");
    }
    out.uncovered += uncovered;
    EstimateReport r;
    r.method = amr ? Method::amr_oracle : Method::mr_oracle;
    r.contributions = w.cwiseProduct(u);
    r.theta_hat = r.contributions.mean();
    r.weights = std::move(w);
    r.folds = 1;
    r.fingerprint = "oracle";
    if (amr) r.aipw_contributions = clever_covariates(data.A(), star.pi).cwiseProduct(ystar);
    out.reports.push_back(std::move(r));
  }
  return out;
}

}  // namespace amr
