#include "amr/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "amr/error.hpp"
#include "amr/rng.hpp"

namespace amr {

std::string to_string(Method method) {
  switch (method) {
    case Method::ipw: return "IPW";
    case Method::aipw: return "AIPW";
    case Method::mr: return "MR";
    case Method::amr: return "AMR";
    case Method::mr_oracle: return "MR-oracleW";
    case Method::amr_oracle: return "AMR-oracleW";
    case Method::att_amr: return "ATT-AMR";
    case Method::atc_amr: return "ATC-AMR";
    case Method::policy: return "POLICY";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  if (s == "ipw") return Method::ipw;
  if (s == "aipw") return Method::aipw;
  if (s == "mr") return Method::mr;
  if (s == "amr") return Method::amr;
  if (s == "mr-oraclew") return Method::mr_oracle;
  if (s == "amr-oraclew") return Method::amr_oracle;
  if (s == "att" || s == "att-amr") return Method::att_amr;
  if (s == "atc" || s == "atc-amr") return Method::atc_amr;
  if (s == "policy") return Method::policy;
  throw ArgumentError("unknown method '" + name + "'");
}

NuisanceOverrides NuisanceOverrides::zero_outcome(Index n) {
  NuisanceOverrides o;
  o.mu0 = Vector::Zero(n);
  o.mu1 = Vector::Zero(n);
  return o;
}

namespace {

class Fnv1a {
 public:
  void add(const std::string& s) {
    for (unsigned char c : s) mix(c);
    mix(0xff);
  }
  void add(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    add(std::string(buf));
  }
  void add(std::uint64_t v) { add(std::to_string(v)); }
  void add(const Vector& v) {
    add(std::uint64_t(v.size()));
    for (Index i = 0; i < v.size(); ++i) add(v[i]);
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  void mix(unsigned char c) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

EstimateReport make_report(Method method, Vector contributions, Vector weights, int folds, std::string fingerprint) {
  EstimateReport r;
  r.method = method;
  r.theta_hat = contributions.size() > 0 ? contributions.mean() : 0.0;
  r.contributions = std::move(contributions);
  r.weights = std::move(weights);
  r.folds = folds;
  r.fingerprint = std::move(fingerprint);
  return r;
}

void require_both_arms(const Vector& A, const std::string& where) {
  const double treated = A.sum();
  if (treated < 0.5 || treated > double(A.size()) - 0.5) {
    throw FitError(where + " contains a single treatment arm; use fewer folds");
  }
}

/// Training/evaluation row sets: K-fold complements, or the full sample twice when K = 1.
std::vector<std::pair<IndexList, IndexList>> fold_rows(Index n, int K, std::uint64_t seed) {
  std::vector<std::pair<IndexList, IndexList>> out;
  if (K == 1) {
    IndexList all(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    out.emplace_back(all, all);
    return out;
  }
  if (K < 1) throw ArgumentError("folds must be at least 1");
  const FoldAssignment fa = make_folds(n, K, seed);
  for (int k = 0; k < K; ++k) out.emplace_back(fa.complement(k), fa.members(k));
  return out;
}

CrossValidationPlan fold_plan(const CrossValidationPlan& base, std::uint64_t seed, std::size_t k) {
  CrossValidationPlan plan = base;
  plan.seed = derive_seed(base.seed, {seed, static_cast<std::uint64_t>(k)});
  return plan;
}

/// Shared cross-fitted weight regression. `regress` yields per-fold
/// (training regressand u, training target t, held-out regressand v).
struct WeightedTerms {
  Vector contributions, weights;
};

struct FoldRegression {
  Vector u_train, t_train, u_eval;
};

WeightedTerms weighted_crossfit(Index n, const std::vector<IndexList>& eval_rows,
                                const std::function<FoldRegression(std::size_t)>& regress,
                                const CrossValidationPlan& base, std::uint64_t seed) {
  WeightedTerms out{Vector::Zero(n), Vector::Zero(n)};
  for (std::size_t k = 0; k < eval_rows.size(); ++k) {
    const FoldRegression fr = regress(k);
    const WeightModel model = fit_weight_model(fr.u_train, fr.t_train, fold_plan(base, seed, k));
    const Vector w = model.evaluate(fr.u_eval);
    scatter(out.weights, eval_rows[k], w);
    scatter(out.contributions, eval_rows[k], w.cwiseProduct(fr.u_eval));
  }
  return out;
}

std::vector<IndexList> eval_sets(const CrossFit& cf) {
  std::vector<IndexList> out;
  for (const auto& f : cf.folds) out.push_back(f.eval);
  return out;
}

}  // namespace

std::string EstimatorConfig::fingerprint() const {
  Fnv1a h;
  h.add(std::uint64_t(folds));
  h.add(seed);
  h.add(std::uint64_t(propensity.max_iter));
  h.add(propensity.tol);
  h.add(propensity.clip_eps);
  h.add(to_string(outcome.learner));
  h.add(outcome.ridge_lambda);
  for (int w : outcome.ffnn.widths) h.add(std::uint64_t(w));
  h.add(std::uint64_t(outcome.ffnn.epochs));
  h.add(std::uint64_t(outcome.ffnn.batch));
  h.add(outcome.ffnn.step);
  h.add(outcome.ffnn.seed);
  h.add(std::uint64_t(outcome.ffnn_min_rows));
  h.add(to_string(weights.method));
  for (double l : weights.lambda_grid) h.add(l);
  h.add("|");
  for (double g : weights.gamma_multipliers) h.add(g);
  h.add(std::uint64_t(weights.folds));
  h.add(weights.seed);
  h.add(weights.bandwidth ? *weights.bandwidth : -1.0);
  h.add(std::uint64_t(weights.max_anchors));
  h.add(to_string(weights.centering));
  for (const auto* o : {&overrides.pi, &overrides.mu0, &overrides.mu1}) {
    if (*o) {
      h.add(**o);
    } else {
      h.add("-");
    }
  }
  return h.hex();
}

CrossFit cross_fit_nuisances(const ObservationSet& data, const EstimatorConfig& cfg, bool need_outcome) {
  const Index n = data.n();
  const auto& ov = cfg.overrides;
  for (const auto* o : {&ov.pi, &ov.mu0, &ov.mu1})
    if (*o && (*o)->size() != n) throw ArgumentError("nuisance override length differs from the data");
  if (ov.mu0.has_value() != ov.mu1.has_value()) throw ArgumentError("outcome overrides need both mu0 and mu1");

  CrossFit cf;
  cf.has_outcome = need_outcome || ov.mu0.has_value();
  cf.held_out = {Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  const auto rows = fold_rows(n, cfg.folds, cfg.seed);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CrossFit::Fold fold;
    fold.train = rows[k].first;
    fold.eval = rows[k].second;
    const Matrix X_tr = take_rows(data.X(), fold.train);
    const Matrix X_ev = take_rows(data.X(), fold.eval);
    const Vector A_tr = take(data.A(), fold.train);
    const Vector Y_tr = take(data.Y(), fold.train);
    require_both_arms(A_tr, rows.size() == 1 ? "the sample" : "training fold " + std::to_string(k));

    if (ov.pi) {
      fold.on_train.pi = take(*ov.pi, fold.train);
      fold.on_eval.pi = take(*ov.pi, fold.eval);
    } else {
      const PropensityModel prop = fit_propensity(X_tr, A_tr, cfg.propensity);
      fold.on_train.pi = prop.predict(X_tr);
      fold.on_eval.pi = prop.predict(X_ev);
    }
    if (ov.mu0) {
      fold.on_train.mu0 = take(*ov.mu0, fold.train);
      fold.on_train.mu1 = take(*ov.mu1, fold.train);
      fold.on_eval.mu0 = take(*ov.mu0, fold.eval);
      fold.on_eval.mu1 = take(*ov.mu1, fold.eval);
    } else if (need_outcome) {
      OutcomeConfig ocfg = cfg.outcome;
      ocfg.ffnn.seed = derive_seed(cfg.outcome.ffnn.seed, {cfg.seed, static_cast<std::uint64_t>(k)});
      const OutcomePair pair = fit_outcome(X_tr, Y_tr, A_tr, ocfg);
      fold.on_train.mu0 = pair.predict_mu0(X_tr);
      fold.on_train.mu1 = pair.predict_mu1(X_tr);
      fold.on_eval.mu0 = pair.predict_mu0(X_ev);
      fold.on_eval.mu1 = pair.predict_mu1(X_ev);
    } else {
      fold.on_train.mu0 = fold.on_train.mu1 = Vector::Zero(X_tr.rows());
      fold.on_eval.mu0 = fold.on_eval.mu1 = Vector::Zero(X_ev.rows());
    }
    scatter(cf.held_out.pi, fold.eval, fold.on_eval.pi);
    scatter(cf.held_out.mu0, fold.eval, fold.on_eval.mu0);
    scatter(cf.held_out.mu1, fold.eval, fold.on_eval.mu1);
    cf.folds.push_back(std::move(fold));
  }
  return cf;
}

EstimateReport estimate_ipw(const ObservationSet& data, const Vector& pi_hat) {
  if (pi_hat.size() != data.n()) throw ArgumentError("estimate_ipw: propensity length differs from the data");
  Vector h = clever_covariates(data.A(), pi_hat);
  Vector c = h.cwiseProduct(data.Y());
  return make_report(Method::ipw, std::move(c), std::move(h), 1, "");
}

EstimateReport estimate_aipw(const ObservationSet& data, const NuisanceVectors& nv) {
  const Index n = data.n();
  if (nv.pi.size() != n || nv.mu0.size() != n || nv.mu1.size() != n) {
    throw ArgumentError("estimate_aipw: nuisance evaluations must cover every row");
  }
  Vector h = clever_covariates(data.A(), nv.pi);
  Vector c = h.cwiseProduct(pseudo_outcomes(data.Y(), nv.pi, nv.mu0, nv.mu1));
  return make_report(Method::aipw, std::move(c), std::move(h), 1, "");
}

EstimateReport estimate_aipw(const ObservationSet& data, const NuisanceFit& fit) {
  return estimate_aipw(data, fit.cached);
}

namespace {

EstimateReport ipw_from(const ObservationSet& data, const CrossFit& cf, const EstimatorConfig& cfg) {
  EstimateReport r = estimate_ipw(data, cf.held_out.pi);
  r.folds = cfg.folds;
  r.fingerprint = cfg.fingerprint();
  return r;
}

EstimateReport aipw_from(const ObservationSet& data, const CrossFit& cf, const EstimatorConfig& cfg) {
  EstimateReport r = estimate_aipw(data, cf.held_out);
  r.folds = cfg.folds;
  r.fingerprint = cfg.fingerprint();
  return r;
}

EstimateReport mr_from(const ObservationSet& data, const CrossFit& cf, const EstimatorConfig& cfg) {
  auto regress = [&](std::size_t k) {
    const auto& f = cf.folds[k];
    const Vector A_tr = take(data.A(), f.train);
    return FoldRegression{take(data.Y(), f.train), clever_covariates(A_tr, f.on_train.pi), take(data.Y(), f.eval)};
  };
  WeightedTerms t = weighted_crossfit(data.n(), eval_sets(cf), regress, cfg.weights, cfg.seed);
  return make_report(Method::mr, std::move(t.contributions), std::move(t.weights), cfg.folds, cfg.fingerprint());
}

EstimateReport amr_from(const ObservationSet& data, const CrossFit& cf, const EstimatorConfig& cfg) {
  const Index n = data.n();
  Vector aipw = Vector::Zero(n);
  auto regress = [&](std::size_t k) {
    const auto& f = cf.folds[k];
    const Vector A_tr = take(data.A(), f.train);
    const Vector ystar_tr = pseudo_outcomes(take(data.Y(), f.train), f.on_train.pi, f.on_train.mu0, f.on_train.mu1);
    const Vector ystar_ev = pseudo_outcomes(take(data.Y(), f.eval), f.on_eval.pi, f.on_eval.mu0, f.on_eval.mu1);
    const Vector h_ev = clever_covariates(take(data.A(), f.eval), f.on_eval.pi);
    scatter(aipw, f.eval, h_ev.cwiseProduct(ystar_ev));
    return FoldRegression{ystar_tr, clever_covariates(A_tr, f.on_train.pi), ystar_ev};
  };
  WeightedTerms t = weighted_crossfit(n, eval_sets(cf), regress, cfg.weights, cfg.seed);
  EstimateReport r =
      make_report(Method::amr, std::move(t.contributions), std::move(t.weights), cfg.folds, cfg.fingerprint());
  r.aipw_contributions = std::move(aipw);
  return r;
}

EstimateReport treated_from(const ObservationSet& data, const CrossFit& cf, const EstimatorConfig& cfg,
                            TreatedMode mode) {
  const bool att = mode == TreatedMode::att;
  auto regress = [&](std::size_t k) {
    const auto& f = cf.folds[k];
    auto parts = [&](const IndexList& rows, const NuisanceVectors& nv, Vector& ratio) {
      const Vector A = take(data.A(), rows);
      const Vector Y = take(data.Y(), rows);
      if (att) {
        ratio = A.cwiseQuotient(nv.pi);
        return Vector(Y.array() - (1.0 - nv.pi.array()) * nv.mu1.array());
      }
      ratio = (1.0 - A.array()) / (1.0 - nv.pi.array());
      return Vector(Y.array() - nv.pi.array() * nv.mu0.array());
    };
    Vector ratio_tr, ratio_ev;
    Vector u_tr = parts(f.train, f.on_train, ratio_tr);
    Vector u_ev = parts(f.eval, f.on_eval, ratio_ev);
    return FoldRegression{std::move(u_tr), std::move(ratio_tr), std::move(u_ev)};
  };
  WeightedTerms t = weighted_crossfit(data.n(), eval_sets(cf), regress, cfg.weights, cfg.seed);
  return make_report(att ? Method::att_amr : Method::atc_amr, std::move(t.contributions), std::move(t.weights),
                     cfg.folds, cfg.fingerprint());
}

}  // namespace

EstimateReport estimate_ipw(const ObservationSet& data, const EstimatorConfig& cfg) {
  return ipw_from(data, cross_fit_nuisances(data, cfg, false), cfg);
}

EstimateReport estimate_aipw(const ObservationSet& data, const EstimatorConfig& cfg) {
  return aipw_from(data, cross_fit_nuisances(data, cfg, true), cfg);
}

EstimateReport estimate_mr(const ObservationSet& data, const EstimatorConfig& cfg) {
  return mr_from(data, cross_fit_nuisances(data, cfg, false), cfg);
}

EstimateReport estimate_amr(const ObservationSet& data, const EstimatorConfig& cfg) {
  return amr_from(data, cross_fit_nuisances(data, cfg, true), cfg);
}

EstimateReport estimate_att_atc(const ObservationSet& data, const EstimatorConfig& cfg, TreatedMode mode) {
  return treated_from(data, cross_fit_nuisances(data, cfg, true), cfg, mode);
}

EstimateReport estimate_policy_value(const Vector& residuals, const Vector& ratio, const CrossValidationPlan& plan,
                                     int folds, std::uint64_t seed) {
  const Index n = residuals.size();
  if (ratio.size() != n) throw ArgumentError("estimate_policy_value: residual and ratio lengths differ");
  if (n < 1) throw ArgumentError("estimate_policy_value: no units");
  if (!residuals.allFinite()) throw ArgumentError("estimate_policy_value: residuals must be finite");
  for (Index i = 0; i < n; ++i)
    if (!std::isfinite(ratio[i]) || ratio[i] < 0.0) {
      throw ArgumentError("estimate_policy_value: ratio at row " + std::to_string(i) + " must be finite and >= 0");
    }
  const auto rows = fold_rows(n, folds, seed);
  std::vector<IndexList> evals;
  for (const auto& r : rows) evals.push_back(r.second);
  auto regress = [&](std::size_t k) {
    return FoldRegression{take(residuals, rows[k].first), take(ratio, rows[k].first), take(residuals, rows[k].second)};
  };
  WeightedTerms t = weighted_crossfit(n, evals, regress, plan, seed);
  EstimatorConfig fp;
  fp.folds = folds;
  fp.seed = seed;
  fp.weights = plan;
  return make_report(Method::policy, std::move(t.contributions), std::move(t.weights), folds, fp.fingerprint());
}

std::vector<EstimateReport> estimator_suite(const ObservationSet& data, const EstimatorConfig& cfg,
                                            const std::vector<Method>& methods) {
  bool need_outcome = false;
  for (Method m : methods) {
    if (m == Method::mr_oracle || m == Method::amr_oracle || m == Method::policy) {
      throw ArgumentError("estimator_suite: " + to_string(m) + " is not a cross-fitted estimator");
    }
    if (m != Method::ipw && m != Method::mr) need_outcome = true;
  }
  const CrossFit cf = cross_fit_nuisances(data, cfg, need_outcome);
  std::vector<EstimateReport> out;
  for (Method m : methods) {
    switch (m) {
      case Method::ipw: out.push_back(ipw_from(data, cf, cfg)); break;
      case Method::aipw: out.push_back(aipw_from(data, cf, cfg)); break;
      case Method::mr: out.push_back(mr_from(data, cf, cfg)); break;
      case Method::amr: out.push_back(amr_from(data, cf, cfg)); break;
      case Method::att_amr: out.push_back(treated_from(data, cf, cfg, TreatedMode::att)); break;
      case Method::atc_amr: out.push_back(treated_from(data, cf, cfg, TreatedMode::atc)); break;
      default: break;
    }
  }
  return out;
}

}  // namespace amr
