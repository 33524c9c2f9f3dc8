#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amr/dataset.hpp"
#include "amr/estimators.hpp"
#include "amr/nuisance.hpp"
#include "amr/rng.hpp"
#include "amr/types.hpp"

namespace amr {

// ---------------------------------------------------------------------------
// Block-structured benchmark design

enum class Mu0Form { nonlinear, linear, zero };

std::string to_string(Mu0Form form);
Mu0Form parse_mu0_form(const std::string& name);

/// Covariates come in four blocks: instrumental (I), confounders (C),
/// prognostic (O) and spurious (S), laid out in that column order.
struct SimulationConfig {
  Index n = 400;
  int p_i = 10;
  int p_c = 5;
  int p_o = 5;
  int p_s = 5;
  double effect = 5.0;
  double sigma = 1.0;
  Mu0Form mu0 = Mu0Form::nonlinear;
  std::uint64_t seed = 0;

  int p() const { return p_i + p_c + p_o + p_s; }
  void validate() const;
};

struct SyntheticDraw {
  ObservationSet data;
  double theta = 0.0;
  /// True pi, mu0, mu1 at each row.
  NuisanceVectors truth;
};

/// X ~ N(0, I); pi = expit(sum I + 0.5 sum C); Y | A, X ~ N(effect A + mu0(X), sigma^2).
/// nonlinear: mu0 = 10 sin(pi sum O) + 20 (sum O)^2 + (sum C cos(pi sum O))^2
/// linear: mu0 = sum O + sum C
/// zero:   mu0 = 0
SyntheticDraw generate_synthetic(const SimulationConfig& cfg);

// ---------------------------------------------------------------------------
// Gaussian outcome designs with closed-form weights

using CovariateFn = std::function<double(const Vector&)>;

/// A | X ~ Bernoulli(pi(X)), Y^a | X ~ N(mu_a(X), sigma^2), with X either a
/// fixed point or a standard-normal vector.
struct GaussianDesign {
  enum class Law { point_mass, standard_normal };
  Law law = Law::point_mass;
  /// Point-mass location; its size is the covariate dimension.
  Vector point = Vector::Zero(1);
  /// Dimension of the standard-normal law.
  Index dim = 1;
  CovariateFn pi, mu0, mu1;
  double sigma = 1.0;
  /// Exact E[mu1 - mu0] when known; skips the Monte Carlo approximation.
  std::optional<double> known_theta;

  Index p() const { return law == Law::point_mass ? point.size() : dim; }
  void validate() const;
  Matrix draw_covariates(Index n, Engine& eng) const;
  /// Exact for a point mass or a known value, else a mean over M draws.
  double true_theta(std::uint64_t seed, Index M = 1'000'000) const;

  static GaussianDesign point_mass_design(double pi, double mu0, double mu1, double sigma = 1.0);
};

struct GaussianDraw {
  ObservationSet data;
  double theta = 0.0;
  NuisanceVectors truth;
};

GaussianDraw generate_gaussian_example(const GaussianDesign& design, Index n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Oracle weight tables

enum class OracleKind { w, w0, wstar, wstar0 };

std::string to_string(OracleKind kind);
OracleKind parse_oracle_kind(const std::string& name);

/// Plug-in nuisance functions for the w0 / wstar0 kinds.
struct PlugInNuisances {
  CovariateFn pi, mu0, mu1;
};

/// Weight function tabulated on an increasing grid, linearly interpolated.
struct OracleWeightTable {
  OracleKind kind = OracleKind::w;
  Vector grid;
  Vector values;
  /// False where the outcome density underflowed (below 1e-300); values there are NaN.
  std::vector<bool> in_support;
  Index M = 0;
  std::uint64_t seed = 0;

  /// Interpolated weight; points outside the grid clamp to the nearest
  /// endpoint and set `*uncovered`. Unsupported cells fall back to the nearest supported value.
  double evaluate(double u, bool* uncovered = nullptr) const;
};

/// 201 (by default) equally spaced points between the 0.5% and 99.5% quantiles of `regressand`.
Vector default_oracle_grid(const Vector& regressand, Index points = 201);

/// Numerator and denominator expectations over X are averaged over M seeded
/// draws (one exact evaluation for a point mass). w0 and wstar0 require `plug_in`.
OracleWeightTable oracle_weight_table(const GaussianDesign& design, OracleKind kind, const Vector& grid,
                                      Index M = 100'000, std::uint64_t seed = 0,
                                      const std::optional<PlugInNuisances>& plug_in = std::nullopt);

void export_oracle_table(const OracleWeightTable& table, const std::filesystem::path& path);

struct OracleEstimates {
  /// IPW and AIPW with the true nuisances, then one MR-oracleW / AMR-oracleW
  /// report per supplied table.
  std::vector<EstimateReport> reports;
  /// Regressand values outside a table's grid or support, summed over tables.
  Index uncovered = 0;
};

/// True nuisances come from `design`. The Y* regressand uses `plug_in`
/// evaluations when supplied. Throws CoverageError if any table covers fewer
/// than 99% of the realized regressand values.
OracleEstimates oracle_estimates(const ObservationSet& data, const GaussianDesign& design,
                                 const std::vector<OracleWeightTable>& tables,
                                 const NuisanceVectors* plug_in = nullptr);

/// True pi, mu0, mu1 of `design` at the rows of X.
NuisanceVectors design_nuisances(const GaussianDesign& design, const Matrix& X);

}  // namespace amr
