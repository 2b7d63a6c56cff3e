#include "accmv/report.hpp"

#include <cmath>

namespace accmv {

using nlohmann::json;

namespace {

json coefficients(const std::vector<std::string>& names, const Eigen::VectorXd& values) {
  json out = json::array();
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    out.push_back({{"name", names[static_cast<std::size_t>(j)]}, {"value", values[j]}});
  }
  return out;
}

// NaN is not representable in JSON
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const OddsModel& model, const Dataset& ds) {
  return {{"pair", model.pair.to_string()},
          {"coefficients", coefficients(model.terms.names(ds.x_names(), ds.l_names()), model.alpha)},
          {"converged", model.converged},
          {"iterations", model.iterations},
          {"score_norm", model.score_norm},
          {"log_likelihood", model.log_likelihood},
          {"n_case", model.n_case},
          {"n_pool", model.n_pool}};
}

json to_json(const OutcomeModel& model, const Dataset& ds) {
  json j = {{"pair", model.pair.to_string()},
            {"coefficients", coefficients(model.terms.names(ds.x_names(), ds.l_names()), model.beta)},
            {"residual_variance", model.residual_variance},
            {"n_pool", model.n_pool}};
  if (model.factorized) {
    json mult = json::array();
    for (int c : model.multiplier_coords) mult.push_back(ds.l_names()[static_cast<std::size_t>(c)]);
    json resp = json::array();
    for (int c : model.response_coords) resp.push_back(ds.l_names()[static_cast<std::size_t>(c)]);
    j["multiplier"] = mult;
    j["response"] = resp;
  }
  return j;
}

json to_json(const WeightTable& w) {
  return {{"min", w.min},
          {"max", w.max},
          {"mean", w.mean},
          {"mass", w.mass},
          {"effective_sample_size", w.effective_sample_size}};
}

json to_json(const CiReport& ci) {
  return {{"estimate", ci.estimate}, {"se", ci.se},         {"lower", ci.lower},
          {"upper", ci.upper},       {"level", ci.level},   {"method", ci.method},
          {"replicates", ci.replicates}, {"seed", ci.seed}, {"failed", ci.failed}};
}

json to_json(const Analysis& a, const Dataset& ds, double level) {
  const auto& est = a.estimate;
  json strata = json::array();
  for (const auto& [pair, value] : est.strata) {
    strata.push_back({{"pair", pair.to_string()},
                      {"theta", value},
                      {"n_case", a.strata.stratum_size(pair)},
                      {"n_pool", a.strata.pool(pair.r).size()}});
  }
  json j = {{"method", to_string(est.method)},
            {"theta", est.theta},
            {"se", a.influence.se},
            {"ci", {{"lower", a.ci.lower}, {"upper", a.ci.upper}, {"level", level}, {"method", "influence"}}},
            {"self_normalized", est.self_normalized},
            {"n", est.n},
            {"n_complete", est.n_complete},
            {"complete_term", est.complete_term},
            {"strata", strata}};
  json odds = json::array();
  for (const auto& [pair, m] : a.odds) odds.push_back(to_json(m, ds));
  json outcomes = json::array();
  for (const auto& [pair, m] : a.outcomes) outcomes.push_back(to_json(m, ds));
  j["models"] = {{"odds", odds}, {"outcome", outcomes}};
  if (a.weights) j["weights"] = to_json(*a.weights);
  j["warnings"] = a.warnings;
  return j;
}

json to_json(const MpmEstimate& est, double level) {
  json rows = json::array();
  for (Eigen::Index k = 0; k < est.theta.size(); ++k) {
    const auto ci = normal_interval(est.theta[k], est.se[k], level);
    rows.push_back({{"name", est.names[static_cast<std::size_t>(k)]},
                    {"estimate", est.theta[k]},
                    {"se", est.se[k]},
                    {"lower", ci.lower},
                    {"upper", ci.upper}});
  }
  json cov = json::array();
  for (Eigen::Index r = 0; r < est.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < est.covariance.cols(); ++c) row.push_back(est.covariance(r, c));
    cov.push_back(row);
  }
  return {{"coefficients", rows},
          {"covariance", cov},
          {"level", level},
          {"converged", est.converged},
          {"iterations", est.iterations},
          {"residual", est.residual},
          {"weights",
           {{"min", est.weight_min}, {"max", est.weight_max}, {"effective_sample_size", est.effective_sample_size}}}};
}

json to_json(const SensitivityCurve& curve) {
  json pts = json::array();
  for (const auto& p : curve.points) {
    pts.push_back({{"delta", p.multiplier}, {"estimate", p.estimate}, {"se", p.se}, {"ci_lo", p.ci_lo}, {"ci_hi", p.ci_hi}});
  }
  return {{"functional", curve.functional},
          {"replicates", curve.replicates},
          {"seed", curve.seed},
          {"failed", curve.failed},
          {"points", pts}};
}

json to_json(const TableResult& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"row", r.label},
                    {"truth", r.truth},
                    {"bias", number(r.bias)},
                    {"sample_se", number(r.sample_se)},
                    {"mean_se", number(r.mean_se)},
                    {"coverage", number(r.coverage)},
                    {"replicates", r.replicates},
                    {"failures", r.failures}});
  }
  return {{"table", t.table}, {"n", t.n}, {"replicates", t.replicates},
          {"seed", t.seed},   {"seconds", t.seconds}, {"rows", rows}};
}

json to_json(const OracleReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"estimate", c.estimate},
                      {"expected", c.expected},
                      {"se", c.se},
                      {"z", c.z()},
                      {"passed", c.passed}});
  }
  return {{"design", to_string(r.kind)}, {"n", r.n},           {"seed", r.seed},
          {"threshold", r.threshold},   {"passed", r.passed()}, {"failures", r.failures()},
          {"checks", checks}};
}

}  // namespace accmv
