#ifndef ACCMV_ESTIMATORS_HPP
#define ACCMV_ESTIMATORS_HPP

#include "accmv/data.hpp"
#include "accmv/glm.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace accmv {

enum class Method { ipw, ra, mr, complete_case };

[[nodiscard]] std::string to_string(Method method);
[[nodiscard]] Method parse_method(std::string_view text);

/// Nuisance function of one record, e.g. a fitted or oracle odds O_{r,a} or
/// outcome regression m_{r,a}. Only called on records observing (x_r, l_a).
using RecordFunction = std::function<double(const Record&)>;
using PairFunctions = std::map<PatternPair, RecordFunction>;

/// The callables hold copies of the models.
[[nodiscard]] PairFunctions odds_functions(const OddsModelSet& models);
[[nodiscard]] PairFunctions outcome_functions(const OutcomeModelSet& models);

/// Complete-case weights 1 + Q_R.
struct WeightTable {
  std::vector<double> total;  // 1 + Q for A = 1_d, 0 otherwise
  /// O_{r,a} at every pool record of r, 0 elsewhere.
  std::map<PatternPair, std::vector<double>> odds;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;  // over complete cases
  double mass = 0.0;  // (1/n) sum of total weights
  double effective_sample_size = 0.0;
};

WeightTable compute_weights(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds);

struct ThetaEstimate {
  Method method = Method::ipw;
  double theta = 0.0;
  /// Contribution of records with A = 1_d.
  double complete_term = 0.0;
  /// theta_{r,a} for each incomplete stratum; theta = complete_term + sum.
  std::map<PatternPair, double> strata;
  /// Plug-in influence values h_i - theta at the supplied nuisances (no
  /// correction for estimated nuisance parameters).
  Eigen::VectorXd influence;
  bool self_normalized = false;
  std::size_t n = 0;
  std::size_t n_complete = 0;
};

ThetaEstimate estimate_ipw(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds,
                           const Functional& f, bool self_normalize = false);
ThetaEstimate estimate_ra(const Dataset& ds, const StratumIndex& strata,
                          const PairFunctions& outcomes, const Functional& f);
ThetaEstimate estimate_mr(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds,
                          const PairFunctions& outcomes, const Functional& f);
ThetaEstimate estimate_complete_case(const Dataset& ds, const Functional& f);

/// f(L_i) for records with A = 1_d, NaN elsewhere.
[[nodiscard]] std::vector<double> complete_values(const Dataset& ds, const Functional& f);

/// Throws ConfigError if an incomplete stratum present in `strata` has no
/// entry in `fns`.
void require_models(const StratumIndex& strata, const PairFunctions& fns, std::string_view family);

/// Estimator-layer size cap on p + d.
inline constexpr int kMaxVariables = 12;
void check_dimensions(const Dataset& ds);

}  // namespace accmv

#endif  // ACCMV_ESTIMATORS_HPP
