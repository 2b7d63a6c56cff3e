#ifndef ACCMV_ANALYSIS_HPP
#define ACCMV_ANALYSIS_HPP

#include "accmv/estimators.hpp"
#include "accmv/glm.hpp"
#include "accmv/inference.hpp"

#include <optional>
#include <string>
#include <vector>

namespace accmv {

/// Everything needed to turn a dataset into an estimate of E[f(L)].
struct AnalysisConfig {
  Method method = Method::mr;
  Functional f = Functional::identity(0);
  FitOptions fit;
  bool self_normalize = false;
  double level = 0.95;
};

struct Analysis {
  ThetaEstimate estimate;
  InfluenceResult influence;
  Interval ci;
  OddsModelSet odds;
  OutcomeModelSet outcomes;
  std::optional<WeightTable> weights;
  StratumIndex strata;
  std::vector<std::string> warnings;
};

/// Fit the nuisance models the method needs, estimate theta and its
/// influence-function standard error.
Analysis analyze(const Dataset& ds, const AnalysisConfig& config);

/// Point estimate only; used inside bootstrap replicates.
double point_estimate(const Dataset& ds, const AnalysisConfig& config);

/// Bootstrap CI of the configured estimator with full nuisance refits.
BootstrapResult bootstrap_analysis(const Dataset& ds, const AnalysisConfig& config,
                                   const BootstrapOptions& options);

}  // namespace accmv

#endif  // ACCMV_ANALYSIS_HPP
