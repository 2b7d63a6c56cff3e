#include "accmv/analysis.hpp"

namespace accmv {

namespace {

bool needs_odds(Method m) { return m == Method::ipw || m == Method::mr; }
bool needs_outcomes(Method m) { return m == Method::ra || m == Method::mr; }

struct Fitted {
  StratumIndex strata;
  OddsModelSet odds;
  OutcomeModelSet outcomes;
};

Fitted fit_for(const Dataset& ds, const AnalysisConfig& config) {
  check_dimensions(ds);
  Fitted out;
  out.strata = build_strata(ds);
  if (needs_odds(config.method)) out.odds = fit_all_odds(ds, out.strata, config.fit);
  if (needs_outcomes(config.method)) out.outcomes = fit_all_outcomes(ds, out.strata, config.f, config.fit);
  return out;
}

ThetaEstimate estimate_with(const Dataset& ds, const Fitted& fitted, const AnalysisConfig& config) {
  switch (config.method) {
    case Method::ipw:
      return estimate_ipw(ds, fitted.strata, odds_functions(fitted.odds), config.f, config.self_normalize);
    case Method::ra:
      return estimate_ra(ds, fitted.strata, outcome_functions(fitted.outcomes), config.f);
    case Method::mr:
      return estimate_mr(ds, fitted.strata, odds_functions(fitted.odds),
                         outcome_functions(fitted.outcomes), config.f);
    case Method::complete_case:
      return estimate_complete_case(ds, config.f);
  }
  return {};
}

}  // namespace

Analysis analyze(const Dataset& ds, const AnalysisConfig& config) {
  auto fitted = fit_for(ds, config);
  Analysis out;
  out.estimate = estimate_with(ds, fitted, config);
  switch (config.method) {
    case Method::ipw:
      out.influence = if_variance_ipw(ds, fitted.strata, fitted.odds, config.f, out.estimate);
      break;
    case Method::ra:
      out.influence = if_variance_ra(ds, fitted.strata, fitted.outcomes, config.f, out.estimate);
      break;
    case Method::mr:
      out.influence = if_variance_mr(ds, fitted.strata, fitted.odds, fitted.outcomes, config.f, out.estimate);
      break;
    case Method::complete_case:
      out.influence = if_variance_complete_case(ds, config.f, out.estimate);
      break;
  }
  out.ci = normal_interval(out.estimate.theta, out.influence.se, config.level);
  if (needs_odds(config.method)) {
    out.weights = compute_weights(ds, fitted.strata, odds_functions(fitted.odds));
  }
  for (const auto& pair : fitted.strata.incomplete_pairs()) {
    const auto size = fitted.strata.stratum_size(pair);
    if (size < 2 * static_cast<std::size_t>(config.fit.n_min)) {
      out.warnings.push_back("stratum " + pair.to_string() + " has only " + std::to_string(size) +
                             " records");
    }
  }
  out.strata = std::move(fitted.strata);
  out.odds = std::move(fitted.odds);
  out.outcomes = std::move(fitted.outcomes);
  return out;
}

double point_estimate(const Dataset& ds, const AnalysisConfig& config) {
  const auto fitted = fit_for(ds, config);
  return estimate_with(ds, fitted, config).theta;
}

BootstrapResult bootstrap_analysis(const Dataset& ds, const AnalysisConfig& config,
                                   const BootstrapOptions& options) {
  return bootstrap(
      ds,
      [&config](const Dataset& sample) {
        return Eigen::VectorXd::Constant(1, point_estimate(sample, config));
      },
      options);
}

}  // namespace accmv
