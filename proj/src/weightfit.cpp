#include "amr/weightfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "amr/dataset.hpp"
#include "amr/error.hpp"
#include "amr/rng.hpp"

namespace amr {

namespace {

// Residual kernel diagonal below which pivoting stops.
constexpr double kPivotTol = 1e-12;

struct PivotedFactor {
  IndexList pivots;
  Matrix G;  // m x r, G G^T approximates the kernel matrix
};

PivotedFactor pivoted_cholesky(const Vector& u, double gamma, Index max_rank) {
  const Index m = u.size();
  const Index cap = std::min(max_rank, m);
  const double inv2g2 = 1.0 / (2.0 * gamma * gamma);
  PivotedFactor f;
  f.G = Matrix::Zero(m, cap);
  Vector d = Vector::Ones(m);
  std::vector<char> used(static_cast<std::size_t>(m), 0);
  Vector col(m);
  Index r = 0;
  while (r < cap) {
    Index best = -1;
    double dmax = kPivotTol;
    for (Index i = 0; i < m; ++i) {
      if (!used[static_cast<std::size_t>(i)] && d[i] > dmax) {
        dmax = d[i];
        best = i;
      }
    }
    if (best < 0) break;
    const double piv = std::sqrt(dmax);
    for (Index i = 0; i < m; ++i) {
      const double diff = u[i] - u[best];
      col[i] = std::exp(-diff * diff * inv2g2);
    }
    if (r > 0) col.noalias() -= f.G.leftCols(r) * f.G.row(best).head(r).transpose();
    col /= piv;
    for (Index pv : f.pivots) col[pv] = 0.0;
    col[best] = piv;
    f.G.col(r) = col;
    used[static_cast<std::size_t>(best)] = 1;
    f.pivots.push_back(best);
    for (Index i = 0; i < m; ++i) d[i] = used[static_cast<std::size_t>(i)] ? 0.0 : d[i] - col[i] * col[i];
    ++r;
  }
  f.G.conservativeResize(m, r);
  return f;
}

Matrix anchor_factor(const PivotedFactor& f) {
  const Index r = f.G.cols();
  Matrix L(r, r);
  for (Index a = 0; a < r; ++a) L.row(a) = f.G.row(f.pivots[static_cast<std::size_t>(a)]);
  return L.triangularView<Eigen::Lower>();
}

Vector anchor_values(const Vector& u, const IndexList& pivots) { return take(u, pivots); }

/// L^{-1} k(anchors, v): one feature column per evaluation point.
Matrix kernel_features(const Matrix& L, const Vector& anchors, const Vector& v, double gamma) {
  const double inv2g2 = 1.0 / (2.0 * gamma * gamma);
  Matrix K(anchors.size(), v.size());
  for (Index j = 0; j < v.size(); ++j)
    for (Index a = 0; a < anchors.size(); ++a) {
      const double diff = v[j] - anchors[a];
      K(a, j) = std::exp(-diff * diff * inv2g2);
    }
  L.triangularView<Eigen::Lower>().solveInPlace(K);
  return K;
}

/// Ridge path over the features of one training set: the SVD is computed
/// once and any lambda costs O(m r).
class KernelRidgePath {
 public:
  KernelRidgePath(const Vector& u, const Vector& tc, double gamma, Index max_anchors)
      : factor_(pivoted_cholesky(u, gamma, max_anchors)), m_(u.size()) {
    anchors_ = anchor_values(u, factor_.pivots);
    L_ = anchor_factor(factor_);
    if (factor_.G.cols() > 0) {
      Eigen::BDCSVD<Matrix> svd(factor_.G, Eigen::ComputeThinU | Eigen::ComputeThinV);
      s_ = svd.singularValues();
      V_ = svd.matrixV();
      Ut_ = svd.matrixU().transpose() * tc;
    }
  }

  bool full_rank() const { return factor_.G.cols() == m_; }

  Vector beta(double lambda) const {
    const Index r = s_.size();
    Vector shrink(r);
    const double smax = r > 0 ? s_.maxCoeff() : 0.0;
    const double cut = smax * double(m_) * std::numeric_limits<double>::epsilon();
    for (Index i = 0; i < r; ++i) {
      const double s = s_[i];
      if (lambda > 0.0) {
        shrink[i] = s / (s * s + double(m_) * lambda);
      } else {
        shrink[i] = s > cut ? 1.0 / s : 0.0;
      }
    }
    return r > 0 ? Vector(V_ * shrink.cwiseProduct(Ut_)) : Vector();
  }

  const Matrix& L() const { return L_; }
  const Vector& anchors() const { return anchors_; }

 private:
  PivotedFactor factor_;
  Index m_;
  Vector anchors_;
  Matrix L_;
  Vector s_;
  Matrix V_;
  Vector Ut_;
};

double target_center(const Vector& t, Centering centering) {
  if ((t.array() == t[0]).all()) return t[0];
  return centering == Centering::mean ? t.mean() : 0.0;
}

Vector nadaraya_watson(const Vector& train_u, const Vector& train_tc, double gamma, const Vector& v) {
  const double inv2g2 = 1.0 / (2.0 * gamma * gamma);
  Vector out(v.size());
  Vector d2(train_u.size());
  for (Index j = 0; j < v.size(); ++j) {
    d2 = (train_u.array() - v[j]).square();
    const double dmin = d2.minCoeff();
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < train_u.size(); ++i) {
      const double w = std::exp(-(d2[i] - dmin) * inv2g2);
      num += w * train_tc[i];
      den += w;
    }
    out[j] = num / den;
  }
  return out;
}

double effective_lambda(double lambda, bool full_rank, double fallback) {
  if (lambda == 0.0 && !full_rank && fallback > 0.0) return fallback;
  return lambda;
}

}  // namespace

std::string to_string(WeightMethod method) {
  return method == WeightMethod::kernel_ridge ? "kernel-ridge" : "nadaraya-watson";
}

std::string to_string(Centering centering) { return centering == Centering::mean ? "mean" : "none"; }

Centering parse_centering(const std::string& name) {
  if (name == "mean") return Centering::mean;
  if (name == "none") return Centering::none;
  throw ArgumentError("unknown centering '" + name + "' (expected mean or none)");
}

WeightMethod parse_weight_method(const std::string& name) {
  if (name == "kernel-ridge" || name == "krr" || name == "kernel_ridge") return WeightMethod::kernel_ridge;
  if (name == "nadaraya-watson" || name == "nw" || name == "nadaraya_watson") return WeightMethod::nadaraya_watson;
  throw ArgumentError("unknown weight method '" + name + "' (expected kernel-ridge or nadaraya-watson)");
}

void CrossValidationPlan::validate() const {
  if (method == WeightMethod::kernel_ridge && lambda_grid.empty()) throw ArgumentError("weight plan: empty lambda grid");
  if (!bandwidth && gamma_multipliers.empty()) throw ArgumentError("weight plan: empty bandwidth multiplier grid");
  for (double l : lambda_grid)
    if (!(l >= 0.0) || !std::isfinite(l)) throw ArgumentError("weight plan: lambda values must be finite and >= 0");
  for (double g : gamma_multipliers)
    if (!(g > 0.0) || !std::isfinite(g)) throw ArgumentError("weight plan: bandwidth multipliers must be positive");
  if (bandwidth && !(*bandwidth > 0.0)) throw ArgumentError("weight plan: bandwidth must be positive");
  if (folds < 2) throw ArgumentError("weight plan: need at least 2 inner folds");
  if (max_anchors < 1) throw ArgumentError("weight plan: max_anchors must be positive");
}

double median_heuristic_bandwidth(const Vector& u, std::uint64_t seed) {
  Index m = u.size();
  if (m < 2) throw ArgumentError("median heuristic needs at least 2 points");
  if (!u.allFinite()) throw ArgumentError("median heuristic: non-finite input");
  if ((u.array() == u[0]).all()) throw DomainError("median heuristic: all points identical (degenerate input)");

  Vector pts = u;
  constexpr Index kExactLimit = 2000;
  if (m > kExactLimit) {
    std::vector<Index> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), Index{0});
    Engine eng(seed);
    for (Index i = 0; i < kExactLimit; ++i) {
      std::uniform_int_distribution<Index> pick(i, m - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(eng))]);
    }
    idx.resize(static_cast<std::size_t>(kExactLimit));
    pts = take(u, idx);
    m = kExactLimit;
    if ((pts.array() == pts[0]).all()) throw DomainError("median heuristic: subsample is degenerate");
  }

  std::vector<double> gaps;
  gaps.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) gaps.push_back(std::abs(pts[i] - pts[j]));

  auto median_of = [](std::vector<double>& v) {
    const std::size_t k = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(k / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (k % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
  };
  double med = median_of(gaps);
  if (!(med > 0.0)) {
    std::vector<double> positive;
    for (double g : gaps)
      if (g > 0.0) positive.push_back(g);
    med = median_of(positive);
  }
  return med;
}

WeightModel fit_weight_model_fixed(const Vector& u, const Vector& t, WeightMethod method, double gamma, double lambda,
                                   double fallback_lambda, Index max_anchors, Centering centering) {
  if (u.size() != t.size()) throw ArgumentError("fit_weight_model: u and t lengths differ");
  if (u.size() < 1) throw ArgumentError("fit_weight_model: no data");
  if (!u.allFinite() || !t.allFinite()) throw ArgumentError("fit_weight_model: inputs must be finite");
  if (!(gamma > 0.0)) throw ArgumentError("fit_weight_model: bandwidth must be positive");
  if (!(lambda >= 0.0)) throw ArgumentError("fit_weight_model: lambda must be non-negative");

  WeightModel model;
  model.method_ = method;
  model.gamma_ = gamma;
  model.center_ = target_center(t, centering);
  const Vector tc = t.array() - model.center_;
  if (method == WeightMethod::nadaraya_watson) {
    model.lambda_ = 0.0;
    model.anchors_ = u;
    model.coef_ = tc;
    return model;
  }
  KernelRidgePath path(u, tc, gamma, max_anchors);
  model.lambda_ = effective_lambda(lambda, path.full_rank(), fallback_lambda);
  model.anchors_ = path.anchors();
  model.chol_ = path.L();
  model.coef_ = path.beta(model.lambda_);
  return model;
}

WeightModel fit_weight_model(const Vector& u, const Vector& t, const CrossValidationPlan& plan) {
  plan.validate();
  const Index m = u.size();
  if (t.size() != m) throw ArgumentError("fit_weight_model: u and t lengths differ");
  if (!u.allFinite() || !t.allFinite()) throw ArgumentError("fit_weight_model: inputs must be finite");

  if (m > 0 && u.maxCoeff() == u.minCoeff()) {
    // A constant regressor carries no information: the fit is the target mean.
    return fit_weight_model_fixed(u, t, WeightMethod::nadaraya_watson, 1.0, 0.0, 0.0, plan.max_anchors,
                                  plan.centering);
  }

  std::vector<double> gammas;
  if (plan.bandwidth) {
    gammas.push_back(*plan.bandwidth);
  } else {
    const double base = median_heuristic_bandwidth(u, derive_seed(plan.seed, {1}));
    for (double g : plan.gamma_multipliers) gammas.push_back(base * g);
  }
  const bool krr = plan.method == WeightMethod::kernel_ridge;
  const std::vector<double> lambdas = krr ? plan.lambda_grid : std::vector<double>{0.0};
  double fallback = 0.0;
  for (double l : plan.lambda_grid)
    if (l > 0.0 && (fallback == 0.0 || l < fallback)) fallback = l;

  const std::size_t G = gammas.size(), Lc = lambdas.size();
  if (G * Lc == 1) return fit_weight_model_fixed(u, t, plan.method, gammas[0], lambdas[0], fallback, plan.max_anchors,
                                  plan.centering);

  if (m < 5) throw ArgumentError("fit_weight_model: cross-validation needs at least 5 points");
  const int V = std::min<int>(plan.folds, static_cast<int>(m));
  const FoldAssignment folds = make_folds(m, V, derive_seed(plan.seed, {2}));
  std::vector<double> sse(G * Lc, 0.0);
  for (int v = 0; v < V; ++v) {
    const IndexList tr = folds.complement(v);
    const IndexList va = folds.members(v);
    const Vector u_tr = take(u, tr), t_tr = take(t, tr);
    const Vector u_va = take(u, va), t_va = take(t, va);
    const double c = target_center(t_tr, plan.centering);
    const Vector tc_tr = t_tr.array() - c;
    for (std::size_t g = 0; g < G; ++g) {
      if (krr) {
        KernelRidgePath path(u_tr, tc_tr, gammas[g], plan.max_anchors);
        const Matrix F = kernel_features(path.L(), path.anchors(), u_va, gammas[g]);
        for (std::size_t l = 0; l < Lc; ++l) {
          const Vector beta = path.beta(effective_lambda(lambdas[l], path.full_rank(), fallback));
          const Vector pred = beta.size() > 0 ? Vector((F.transpose() * beta).array() + c)
                                              : Vector(Vector::Constant(u_va.size(), c));
          sse[g * Lc + l] += (t_va - pred).squaredNorm();
        }
      } else {
        const Vector pred = nadaraya_watson(u_tr, tc_tr, gammas[g], u_va).array() + c;
        sse[g] += (t_va - pred).squaredNorm();
      }
    }
  }
  const std::size_t best =
      static_cast<std::size_t>(std::min_element(sse.begin(), sse.end()) - sse.begin());
  WeightModel model =
      fit_weight_model_fixed(u, t, plan.method, gammas[best / Lc], lambdas[best % Lc], fallback,
                             plan.max_anchors, plan.centering);
  model.cv_errors_ = std::move(sse);
  return model;
}

Vector WeightModel::evaluate(const Vector& u) const {
  if (!u.allFinite()) throw ArgumentError("evaluate_weight_model: non-finite input");
  if (method_ == WeightMethod::nadaraya_watson) {
    return nadaraya_watson(anchors_, coef_, gamma_, u).array() + center_;
  }
  if (coef_.size() == 0) return Vector::Constant(u.size(), center_);
  const Matrix F = kernel_features(chol_, anchors_, u, gamma_);
  return (F.transpose() * coef_).array() + center_;
}

double WeightModel::operator()(double u) const { return evaluate(Vector::Constant(1, u))[0]; }

Vector WeightModel::dual_coefficients() const {
  if (method_ != WeightMethod::kernel_ridge) throw StateError("dual coefficients exist only for kernel ridge models");
  if (coef_.size() == 0) return Vector();
  return chol_.transpose().triangularView<Eigen::Upper>().solve(coef_);
}

}  // namespace amr
