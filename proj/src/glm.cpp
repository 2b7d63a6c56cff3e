#include "accmv/glm.hpp"

#include "accmv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace accmv {

// ---------------------------------------------------------------------------
// Terms

int ModelTerms::size() const {
  const int k = covariate_count();
  return 1 + k + (quadratic ? k * (k + 1) / 2 : 0);
}

void ModelTerms::design_into(const Record& rec, Eigen::Ref<Eigen::VectorXd> out) const {
  out[0] = 1.0;
  int j = 1;
  for (int c = 0; c < x_terms.length(); ++c) {
    if (x_terms.observed(c)) out[j++] = rec.x[c];
  }
  for (int c = 0; c < l_terms.length(); ++c) {
    if (l_terms.observed(c)) out[j++] = rec.l[c];
  }
  if (quadratic) {
    const int k = j - 1;
    for (int u = 1; u <= k; ++u) {
      for (int v = u; v <= k; ++v) out[j++] = out[u] * out[v];
    }
  }
}

Eigen::VectorXd ModelTerms::design(const Record& rec) const {
  Eigen::VectorXd z(size());
  design_into(rec, z);
  if (z.hasNaN()) {
    throw PreconditionError("design covariates not observed on record with R=" +
                            rec.r.to_string() + ", A=" + rec.a.to_string());
  }
  return z;
}

std::vector<std::string> ModelTerms::names(const std::vector<std::string>& x_names,
                                           const std::vector<std::string>& l_names) const {
  std::vector<std::string> out{"(Intercept)"};
  for (int c = 0; c < x_terms.length(); ++c) {
    if (x_terms.observed(c)) out.push_back(x_names.at(static_cast<std::size_t>(c)));
  }
  for (int c = 0; c < l_terms.length(); ++c) {
    if (l_terms.observed(c)) out.push_back(l_names.at(static_cast<std::size_t>(c)));
  }
  if (quadratic) {
    const std::size_t k = out.size() - 1;
    for (std::size_t u = 1; u <= k; ++u) {
      for (std::size_t v = u; v <= k; ++v) out.push_back(out[u] + ":" + out[v]);
    }
  }
  return out;
}

namespace {

ModelTerms checked_terms(const PatternPair& pair, const std::map<PatternPair, ModelTerms>& over) {
  auto it = over.find(pair);
  if (it == over.end()) return ModelTerms::full(pair);
  const auto& t = it->second;
  if (t.x_terms.length() != pair.r.length() || t.l_terms.length() != pair.a.length() ||
      !dominates(pair.r, t.x_terms) || !dominates(pair.a, t.l_terms)) {
    throw ConfigError("model terms " + t.x_terms.to_string() + "|" + t.l_terms.to_string() +
                      " use covariates not observed in stratum " + pair.to_string());
  }
  return t;
}

double clamp_eta(double eta) {
  return std::clamp(eta, -kLinearPredictorClamp, kLinearPredictorClamp);
}

}  // namespace

ModelTerms FitOptions::odds_terms_for(const PatternPair& pair) const {
  return checked_terms(pair, odds_terms);
}

ModelTerms FitOptions::outcome_terms_for(const PatternPair& pair) const {
  return checked_terms(pair, outcome_terms);
}

// ---------------------------------------------------------------------------
// Logistic odds

LogisticProblem build_odds_problem(const Dataset& ds, const StratumIndex& strata,
                                   const PatternPair& pair, const ModelTerms& terms) {
  LogisticProblem problem;
  problem.n = static_cast<double>(ds.size());
  auto sit = strata.strata.find(pair);
  const auto& cases = sit == strata.strata.end() ? std::vector<std::size_t>{} : sit->second;
  const auto& pool = strata.pool(pair.r);
  const auto m = static_cast<Eigen::Index>(cases.size() + pool.size());
  problem.design.resize(m, terms.size());
  problem.label.resize(m);
  problem.rows.reserve(static_cast<std::size_t>(m));
  Eigen::Index row = 0;
  auto add = [&](std::size_t i, double y) {
    Eigen::VectorXd z = terms.design(ds[i]);
    problem.design.row(row) = z.transpose();
    problem.label[row] = y;
    problem.rows.push_back(i);
    ++row;
  };
  for (auto i : cases) add(i, 1.0);
  for (auto i : pool) add(i, 0.0);
  return problem;
}

double log_likelihood(const LogisticProblem& problem, const Eigen::VectorXd& alpha) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < problem.design.rows(); ++i) {
    const double eta = clamp_eta(problem.design.row(i).dot(alpha));
    // log(1 + e^eta) computed without overflow
    const double softplus = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
    ll += problem.label[i] * eta - softplus;
  }
  return ll / problem.n;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> score_and_hessian(const LogisticProblem& problem,
                                                              const Eigen::VectorXd& alpha) {
  const Eigen::Index k = problem.design.cols();
  Eigen::VectorXd score = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < problem.design.rows(); ++i) {
    const auto z = problem.design.row(i).transpose();
    const double eta = clamp_eta(z.dot(alpha));
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    score.noalias() += (problem.label[i] - prob) * z;
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(z, -prob * (1.0 - prob));
  }
  hessian.triangularView<Eigen::StrictlyUpper>() = hessian.transpose();
  return {score / problem.n, hessian / problem.n};
}

double OddsModel::linear_predictor(const Record& rec) const {
  return terms.design(rec).dot(alpha);
}

double OddsModel::evaluate(const Record& rec) const {
  return std::exp(clamp_eta(linear_predictor(rec)));
}

Eigen::VectorXd OddsModel::gradient(const Record& rec) const {
  const Eigen::VectorXd z = terms.design(rec);
  return std::exp(clamp_eta(z.dot(alpha))) * z;
}

OddsModel fit_odds(const Dataset& ds, const StratumIndex& strata, const PatternPair& pair,
                   const FitOptions& options) {
  if (pair.a.is_complete()) {
    throw ArgumentError("no odds model for complete primary pattern " + pair.to_string());
  }
  const auto n_case = strata.stratum_size(pair);
  const auto n_pool = strata.pool(pair.r).size();
  const std::string where = "stratum (R=" + pair.r.to_string() + ", A=" + pair.a.to_string() + ")";
  if (n_pool == 0) throw PositivityError("empty complete-case pool for " + where);
  if (n_case < static_cast<std::size_t>(options.n_min) ||
      n_pool < static_cast<std::size_t>(options.n_min)) {
    throw SampleSizeError("odds model for " + where + " has " + std::to_string(n_case) +
                          " case and " + std::to_string(n_pool) + " pool records; n_min is " +
                          std::to_string(options.n_min));
  }

  OddsModel model;
  model.pair = pair;
  model.terms = options.odds_terms_for(pair);
  model.n_case = n_case;
  model.n_pool = n_pool;
  model.n_total = ds.size();
  const auto problem = build_odds_problem(ds, strata, pair, model.terms);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(model.terms.size());
  alpha[0] = std::log(static_cast<double>(n_case) / static_cast<double>(n_pool));
  double ll = log_likelihood(problem, alpha);

  for (int iter = 0;; ++iter) {
    auto [score, hessian] = score_and_hessian(problem, alpha);
    model.score_norm = score.lpNorm<Eigen::Infinity>();
    if (model.score_norm <= options.score_tolerance) {
      model.converged = true;
      model.iterations = iter;
      break;
    }
    if (iter >= options.max_iterations) {
      throw NonConvergenceError("odds model for " + where + " did not converge in " +
                                    std::to_string(options.max_iterations) + " iterations",
                                alpha);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      if (alpha.lpNorm<Eigen::Infinity>() > options.coefficient_bound / 2) {
        throw SeparationError("odds model for " + where + " separates case and pool");
      }
      throw SingularityError("singular information matrix in odds model for " + where);
    }
    const Eigen::VectorXd step = ldlt.solve(score);
    double t = 1.0;
    Eigen::VectorXd next = alpha + step;
    double ll_next = log_likelihood(problem, next);
    int halvings = 0;
    while (!(ll_next >= ll) && halvings < 40) {
      t *= 0.5;
      next = alpha + t * step;
      ll_next = log_likelihood(problem, next);
      ++halvings;
    }
    if (!(ll_next >= ll)) {
      // No ascent left in floating point: accept the current iterate only if
      // the score is already negligible.
      if (model.score_norm <= 1e3 * options.score_tolerance) {
        model.converged = true;
        model.iterations = iter;
        break;
      }
      throw NonConvergenceError("line search failed in odds model for " + where, alpha);
    }
    alpha = std::move(next);
    ll = ll_next;
    if (alpha.lpNorm<Eigen::Infinity>() > options.coefficient_bound) {
      throw SeparationError("odds model for " + where + " diverges (|alpha| > " +
                            std::to_string(options.coefficient_bound) +
                            "); case and pool look separable");
    }
  }

  // A converged iterate that classifies every row correctly, or that sits on
  // the clamp, certifies (near) separation: the finite MLE cannot exist.
  const Eigen::VectorXd eta = problem.design * alpha;
  bool all_correct = true;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (std::abs(eta[i]) >= kLinearPredictorClamp) {
      throw SeparationError("odds model for " + where + " hits the linear-predictor clamp");
    }
    const double margin = problem.label[i] > 0.5 ? eta[i] : -eta[i];
    if (margin <= 0) all_correct = false;
  }
  if (all_correct) {
    throw SeparationError("odds model for " + where + " perfectly separates case and pool");
  }

  model.alpha = alpha;
  model.log_likelihood = ll;
  auto [score, hessian] = score_and_hessian(problem, alpha);
  model.information = -hessian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(model.information);
  if (!lu.isInvertible()) {
    throw SingularityError("singular information matrix in odds model for " + where);
  }
  model.information_inverse = lu.inverse();
  return model;
}

Eigen::VectorXd psi_odds(const OddsModel& model, const Record& rec) {
  const bool is_case = in_case(rec, model.pair);
  if (!is_case && !in_pool(rec, model.pair.r)) return Eigen::VectorXd::Zero(model.alpha.size());
  const Eigen::VectorXd z = model.terms.design(rec);
  const double eta = clamp_eta(z.dot(model.alpha));
  const double prob = 1.0 / (1.0 + std::exp(-eta));
  return model.information_inverse * (((is_case ? 1.0 : 0.0) - prob) * z);
}

// ---------------------------------------------------------------------------
// Outcome regression

double OutcomeModel::multiplier(const Record& rec) const {
  double m = 1.0;
  for (int c : multiplier_coords) m *= rec.l[c];
  return m;
}

double OutcomeModel::regression(const Record& rec) const { return terms.design(rec).dot(beta); }

double OutcomeModel::evaluate(const Record& rec) const { return multiplier(rec) * regression(rec); }

Eigen::VectorXd OutcomeModel::gradient(const Record& rec) const {
  return multiplier(rec) * terms.design(rec);
}

double OutcomeModel::response(const Record& rec, const Functional& f) const {
  if (!factorized) return f.evaluate(rec.l);
  double y = 1.0;
  for (int c : response_coords) y *= rec.l[c];
  if (!std::isfinite(y)) throw PreconditionError("outcome response is not finite");
  return y;
}

OutcomeModel fit_outcome(const Dataset& ds, const StratumIndex& strata, const PatternPair& pair,
                         const Functional& f, const FitOptions& options) {
  if (pair.a.is_complete()) {
    throw ArgumentError("no outcome model for complete primary pattern " + pair.to_string());
  }
  const std::string where = "stratum (R=" + pair.r.to_string() + ", A=" + pair.a.to_string() + ")";
  const auto& pool = strata.pool(pair.r);
  if (pool.empty()) throw PositivityError("empty complete-case pool for " + where);
  if (pool.size() < static_cast<std::size_t>(options.n_min)) {
    throw SampleSizeError("outcome model for " + where + " has " + std::to_string(pool.size()) +
                          " pool records; n_min is " + std::to_string(options.n_min));
  }

  OutcomeModel model;
  model.pair = pair;
  model.terms = options.outcome_terms_for(pair);
  model.n_pool = pool.size();
  model.n_total = ds.size();
  if (options.factorize_products && f.kind() == Functional::Kind::product) {
    for (int c : f.coords()) {
      if (c >= ds.d()) throw ArgumentError("functional coordinate exceeds d");
      (pair.a.observed(c) ? model.multiplier_coords : model.response_coords).push_back(c);
    }
    model.factorized = !model.multiplier_coords.empty();
    if (!model.factorized) model.response_coords.clear();
  }

  const auto k = static_cast<Eigen::Index>(model.terms.size());
  Eigen::MatrixXd design(static_cast<Eigen::Index>(pool.size()), k);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pool.size()));
  for (std::size_t row = 0; row < pool.size(); ++row) {
    const auto& rec = ds[pool[row]];
    design.row(static_cast<Eigen::Index>(row)) = model.terms.design(rec).transpose();
    y[static_cast<Eigen::Index>(row)] = model.response(rec, f);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k) {
    throw SingularityError("rank-deficient outcome design (rank " + std::to_string(qr.rank()) +
                           " < " + std::to_string(k) + ") for " + where);
  }
  model.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - design * model.beta;
  const double dof = static_cast<double>(pool.size()) - static_cast<double>(k);
  model.residual_variance = dof > 0 ? resid.squaredNorm() / dof : 0.0;
  model.normalizer = design.transpose() * design / static_cast<double>(ds.size());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(model.normalizer);
  if (!lu.isInvertible()) throw SingularityError("singular outcome normalizer for " + where);
  model.normalizer_inverse = lu.inverse();
  return model;
}

Eigen::VectorXd psi_outcome(const OutcomeModel& model, const Record& rec, const Functional& f) {
  if (!in_pool(rec, model.pair.r)) return Eigen::VectorXd::Zero(model.beta.size());
  const Eigen::VectorXd z = model.terms.design(rec);
  return model.normalizer_inverse * ((model.response(rec, f) - z.dot(model.beta)) * z);
}

OddsModelSet fit_all_odds(const Dataset& ds, const StratumIndex& strata, const FitOptions& options) {
  OddsModelSet out;
  for (const auto& pair : strata.incomplete_pairs()) out.emplace(pair, fit_odds(ds, strata, pair, options));
  return out;
}

OutcomeModelSet fit_all_outcomes(const Dataset& ds, const StratumIndex& strata, const Functional& f,
                                 const FitOptions& options) {
  OutcomeModelSet out;
  for (const auto& pair : strata.incomplete_pairs()) {
    out.emplace(pair, fit_outcome(ds, strata, pair, f, options));
  }
  return out;
}

}  // namespace accmv
