#include "accmv/estimators.hpp"

#include "accmv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace accmv {

std::string to_string(Method method) {
  switch (method) {
    case Method::ipw: return "ipw";
    case Method::ra: return "ra";
    case Method::mr: return "mr";
    case Method::complete_case: return "cc";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "ipw") return Method::ipw;
  if (text == "ra") return Method::ra;
  if (text == "mr") return Method::mr;
  if (text == "cc" || text == "complete-case") return Method::complete_case;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected ipw, ra, mr or cc)");
}

PairFunctions odds_functions(const OddsModelSet& models) {
  PairFunctions out;
  for (const auto& [pair, model] : models) {
    out.emplace(pair, [model](const Record& rec) { return model.evaluate(rec); });
  }
  return out;
}

PairFunctions outcome_functions(const OutcomeModelSet& models) {
  PairFunctions out;
  for (const auto& [pair, model] : models) {
    out.emplace(pair, [model](const Record& rec) { return model.evaluate(rec); });
  }
  return out;
}

void require_models(const StratumIndex& strata, const PairFunctions& fns, std::string_view family) {
  for (const auto& pair : strata.incomplete_pairs()) {
    if (!fns.count(pair)) {
      throw ConfigError("no " + std::string(family) + " model for present stratum " + pair.to_string());
    }
  }
}

void check_dimensions(const Dataset& ds) {
  if (ds.p() + ds.d() > kMaxVariables) {
    throw ConfigError("p + d = " + std::to_string(ds.p() + ds.d()) + " exceeds the limit of " +
                      std::to_string(kMaxVariables));
  }
}

std::vector<double> complete_values(const Dataset& ds, const Functional& f) {
  std::vector<double> out(ds.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].a.is_complete()) out[i] = f.evaluate(ds[i].l);
  }
  return out;
}

WeightTable compute_weights(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds) {
  require_models(strata, odds, "odds");
  const std::size_t n = ds.size();
  WeightTable w;
  w.total.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (ds[i].a.is_complete()) w.total[i] = 1.0;
  }
  for (const auto& pair : strata.incomplete_pairs()) {
    const auto& fn = odds.at(pair);
    auto& column = w.odds[pair];
    column.assign(n, 0.0);
    for (auto i : strata.pool(pair.r)) {
      const double o = fn(ds[i]);
      column[i] = o;
      w.total[i] += o;
    }
  }
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  w.min = std::numeric_limits<double>::infinity();
  w.max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ds[i].a.is_complete()) continue;
    const double t = w.total[i];
    w.min = std::min(w.min, t);
    w.max = std::max(w.max, t);
    sum += t;
    sum_sq += t * t;
    ++count;
  }
  if (count == 0) w.min = 0.0;
  w.mean = count ? sum / static_cast<double>(count) : 0.0;
  w.mass = sum / static_cast<double>(n);
  w.effective_sample_size = sum_sq > 0 ? sum * sum / sum_sq : 0.0;
  return w;
}

namespace {

ThetaEstimate start(const Dataset& ds, Method method) {
  ThetaEstimate est;
  est.method = method;
  est.n = ds.size();
  for (const auto& rec : ds.records()) {
    if (rec.a.is_complete()) ++est.n_complete;
  }
  return est;
}

}  // namespace

ThetaEstimate estimate_ipw(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds,
                           const Functional& f, bool self_normalize) {
  const auto weights = compute_weights(ds, strata, odds);
  const auto fv = complete_values(ds, f);
  ThetaEstimate est = start(ds, Method::ipw);
  est.self_normalized = self_normalize;
  const std::size_t n = ds.size();

  double sum_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum_w += weights.total[i];
  if (est.n_complete == 0) throw PositivityError("no records with complete primary variables");
  const double divisor = self_normalize ? sum_w : static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    if (ds[i].a.is_complete()) est.complete_term += fv[i];
  }
  est.complete_term /= divisor;
  est.theta = est.complete_term;
  for (const auto& [pair, column] : weights.odds) {
    double s = 0.0;
    for (auto i : strata.pool(pair.r)) s += fv[i] * column[i];
    est.strata[pair] = s / divisor;
    est.theta += s / divisor;
  }

  est.influence.resize(static_cast<Eigen::Index>(n));
  const double omega_bar = sum_w / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = ds[i].a.is_complete() ? fv[i] * weights.total[i] : 0.0;
    est.influence[static_cast<Eigen::Index>(i)] =
        self_normalize ? (g - est.theta * weights.total[i]) / omega_bar : g - est.theta;
  }
  return est;
}

ThetaEstimate estimate_ra(const Dataset& ds, const StratumIndex& strata,
                          const PairFunctions& outcomes, const Functional& f) {
  require_models(strata, outcomes, "outcome");
  ThetaEstimate est = start(ds, Method::ra);
  const std::size_t n = ds.size();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (ds[i].a.is_complete()) {
      h[static_cast<Eigen::Index>(i)] = f.evaluate(ds[i].l);
      est.complete_term += h[static_cast<Eigen::Index>(i)];
    }
  }
  est.complete_term /= nd;
  est.theta = est.complete_term;
  for (const auto& pair : strata.incomplete_pairs()) {
    const auto& fn = outcomes.at(pair);
    double s = 0.0;
    for (auto i : strata.strata.at(pair)) {
      const double m = fn(ds[i]);
      h[static_cast<Eigen::Index>(i)] = m;
      s += m;
    }
    est.strata[pair] = s / nd;
    est.theta += s / nd;
  }
  est.influence = h.array() - est.theta;
  return est;
}

ThetaEstimate estimate_mr(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds,
                          const PairFunctions& outcomes, const Functional& f) {
  require_models(strata, odds, "odds");
  require_models(strata, outcomes, "outcome");
  ThetaEstimate est = start(ds, Method::mr);
  const std::size_t n = ds.size();
  const double nd = static_cast<double>(n);
  const auto fv = complete_values(ds, f);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (ds[i].a.is_complete()) {
      h[static_cast<Eigen::Index>(i)] = fv[i];
      est.complete_term += fv[i];
    }
  }
  est.complete_term /= nd;
  est.theta = est.complete_term;
  for (const auto& pair : strata.incomplete_pairs()) {
    const auto& o = odds.at(pair);
    const auto& m = outcomes.at(pair);
    double s = 0.0;
    for (auto i : strata.strata.at(pair)) {
      const double v = m(ds[i]);
      h[static_cast<Eigen::Index>(i)] += v;
      s += v;
    }
    for (auto i : strata.pool(pair.r)) {
      const double v = (fv[i] - m(ds[i])) * o(ds[i]);
      h[static_cast<Eigen::Index>(i)] += v;
      s += v;
    }
    est.strata[pair] = s / nd;
    est.theta += s / nd;
  }
  est.influence = h.array() - est.theta;
  return est;
}

ThetaEstimate estimate_complete_case(const Dataset& ds, const Functional& f) {
  ThetaEstimate est = start(ds, Method::complete_case);
  if (est.n_complete == 0) throw PositivityError("no records with complete primary variables");
  const auto fv = complete_values(ds, f);
  double s = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].a.is_complete()) s += fv[i];
  }
  est.theta = s / static_cast<double>(est.n_complete);
  est.complete_term = est.theta;
  const double share = static_cast<double>(est.n_complete) / static_cast<double>(ds.size());
  est.influence = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].a.is_complete()) est.influence[static_cast<Eigen::Index>(i)] = (fv[i] - est.theta) / share;
  }
  return est;
}

}  // namespace accmv
