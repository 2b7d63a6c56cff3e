#ifndef ACCMV_GLM_HPP
#define ACCMV_GLM_HPP

#include "accmv/data.hpp"
#include "accmv/pattern.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace accmv {

inline constexpr double kLinearPredictorClamp = 30.0;

/// Covariates entering a nuisance model for stratum (r, a): the intercept,
/// x at `x_terms`, l at `l_terms`, and optionally all squares and pairwise
/// products of those covariates. `x_terms <= r` and `l_terms <= a`.
struct ModelTerms {
  Pattern x_terms;
  Pattern l_terms;
  bool quadratic = false;

  static ModelTerms full(const PatternPair& pair) { return {pair.r, pair.a, false}; }
  [[nodiscard]] int covariate_count() const { return x_terms.count() + l_terms.count(); }
  [[nodiscard]] int size() const;

  /// Design row for a record observing at least (x_terms, l_terms).
  [[nodiscard]] Eigen::VectorXd design(const Record& rec) const;
  void design_into(const Record& rec, Eigen::Ref<Eigen::VectorXd> out) const;
  [[nodiscard]] std::vector<std::string> names(const std::vector<std::string>& x_names,
                                               const std::vector<std::string>& l_names) const;

  bool operator==(const ModelTerms&) const = default;
};

struct FitOptions {
  int n_min = 10;
  int max_iterations = 100;
  double score_tolerance = 1e-8;
  double coefficient_bound = 30.0;
  /// Factor observed coordinates of a product functional out of the outcome
  /// regression (m = prod(observed) * E[prod(missing) | ...]).
  bool factorize_products = true;
  std::map<PatternPair, ModelTerms> odds_terms;
  std::map<PatternPair, ModelTerms> outcome_terms;

  [[nodiscard]] ModelTerms odds_terms_for(const PatternPair& pair) const;
  [[nodiscard]] ModelTerms outcome_terms_for(const PatternPair& pair) const;
};

[[nodiscard]] inline bool in_case(const Record& rec, const PatternPair& pair) {
  return rec.r == pair.r && rec.a == pair.a;
}
[[nodiscard]] inline bool in_pool(const Record& rec, const Pattern& r) {
  return rec.a.is_complete() && dominates(rec.r, r);
}

// ---------------------------------------------------------------------------
// Logistic odds model

/// Binary likelihood for one stratum: case rows (R=r, A=a) labelled 1, pool
/// rows (R>=r, A=1_d) labelled 0, averaged over all n records.
struct LogisticProblem {
  Eigen::MatrixXd design;  // one row per case/pool record
  Eigen::VectorXd label;
  std::vector<std::size_t> rows;  // dataset index of each design row
  double n = 1.0;
};

LogisticProblem build_odds_problem(const Dataset& ds, const StratumIndex& strata,
                                   const PatternPair& pair, const ModelTerms& terms);

[[nodiscard]] double log_likelihood(const LogisticProblem& problem, const Eigen::VectorXd& alpha);

/// Exact score and Hessian of `log_likelihood`; linear predictors are clamped
/// to +-kLinearPredictorClamp.
[[nodiscard]] std::pair<Eigen::VectorXd, Eigen::MatrixXd> score_and_hessian(
    const LogisticProblem& problem, const Eigen::VectorXd& alpha);

struct OddsModel {
  PatternPair pair;
  ModelTerms terms;
  Eigen::VectorXd alpha;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  double score_norm = 0.0;
  std::size_t n_case = 0;
  std::size_t n_pool = 0;
  std::size_t n_total = 0;
  /// Negative Hessian of the averaged log-likelihood at alpha and its inverse.
  Eigen::MatrixXd information;
  Eigen::MatrixXd information_inverse;

  [[nodiscard]] double linear_predictor(const Record& rec) const;
  /// exp(alpha . design), exponent clamped.
  [[nodiscard]] double evaluate(const Record& rec) const;
  /// Gradient of the odds in alpha.
  [[nodiscard]] Eigen::VectorXd gradient(const Record& rec) const;
};

OddsModel fit_odds(const Dataset& ds, const StratumIndex& strata, const PatternPair& pair,
                   const FitOptions& options = {});

/// Influence of one record on sqrt(n)(alpha_hat - alpha).
[[nodiscard]] Eigen::VectorXd psi_odds(const OddsModel& model, const Record& rec);

// ---------------------------------------------------------------------------
// Linear outcome model

struct OutcomeModel {
  PatternPair pair;
  ModelTerms terms;
  Eigen::VectorXd beta;
  double residual_variance = 0.0;
  std::size_t n_pool = 0;
  std::size_t n_total = 0;
  /// Product coordinates observed under `a` multiplying the regression, and
  /// the remaining coordinates forming the response. Empty multiplier means
  /// the regression targets f(L) directly.
  std::vector<int> multiplier_coords;
  std::vector<int> response_coords;
  bool factorized = false;
  /// (1/n) sum over pool of design outer products, and its inverse.
  Eigen::MatrixXd normalizer;
  Eigen::MatrixXd normalizer_inverse;

  [[nodiscard]] double multiplier(const Record& rec) const;
  [[nodiscard]] double regression(const Record& rec) const;  // design . beta
  [[nodiscard]] double evaluate(const Record& rec) const;    // multiplier * regression
  [[nodiscard]] Eigen::VectorXd gradient(const Record& rec) const;
  /// Regression response on a complete record.
  [[nodiscard]] double response(const Record& rec, const Functional& f) const;
};

OutcomeModel fit_outcome(const Dataset& ds, const StratumIndex& strata, const PatternPair& pair,
                         const Functional& f, const FitOptions& options = {});

/// Influence of one record on sqrt(n)(beta_hat - beta); zero outside the pool.
[[nodiscard]] Eigen::VectorXd psi_outcome(const OutcomeModel& model, const Record& rec,
                                          const Functional& f);

// ---------------------------------------------------------------------------

using OddsModelSet = std::map<PatternPair, OddsModel>;
using OutcomeModelSet = std::map<PatternPair, OutcomeModel>;

/// One model per incomplete stratum present in the data.
OddsModelSet fit_all_odds(const Dataset& ds, const StratumIndex& strata,
                          const FitOptions& options = {});
OutcomeModelSet fit_all_outcomes(const Dataset& ds, const StratumIndex& strata,
                                 const Functional& f, const FitOptions& options = {});

}  // namespace accmv

#endif  // ACCMV_GLM_HPP
