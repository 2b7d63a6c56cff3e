#include "accmv/sensitivity.hpp"

#include "accmv/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace accmv {

TiltSpec TiltSpec::zero(int d) { return shared(d, 0.0, 0.0); }

TiltSpec TiltSpec::shared(int d, double value, double center) {
  return {Eigen::VectorXd::Constant(d, value), Eigen::VectorXd::Constant(d, center)};
}

double tilt_factor(const PatternPair& pair, const Record& rec, const TiltSpec& spec) {
  if (pair.a.is_complete()) throw PreconditionError("tilt applies only to incomplete primary patterns");
  const int d = pair.a.length();
  if (spec.delta.size() != d || spec.center.size() != d) {
    throw ArgumentError("tilt delta and center must have length d = " + std::to_string(d));
  }
  double exponent = 0.0;
  for (int j = 0; j < d; ++j) {
    if (!pair.a.observed(j) && spec.delta[j] != 0.0) exponent += spec.delta[j] * (rec.l[j] - spec.center[j]);
  }
  return std::exp(std::clamp(exponent, -kLinearPredictorClamp, kLinearPredictorClamp));
}

double tilted_log_odds(const OddsModel& model, const Record& rec, const TiltSpec& spec) {
  return model.linear_predictor(rec) + std::log(tilt_factor(model.pair, rec, spec));
}

double tilted_estimate(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds,
                       const Functional& f, const TiltSpec& spec) {
  require_models(strata, odds, "odds");
  const auto fv = complete_values(ds, f);
  std::vector<double> w(ds.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].a.is_complete()) w[i] = 1.0;
  }
  for (const auto& pair : strata.incomplete_pairs()) {
    const auto& fn = odds.at(pair);
    for (auto i : strata.pool(pair.r)) w[i] += fn(ds[i]) * tilt_factor(pair, ds[i], spec);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (w[i] == 0.0) continue;
    num += fv[i] * w[i];
    den += w[i];
  }
  if (!(den > 0.0)) throw DegenerateNormalizationError("tilted weights sum to zero");
  return num / den;
}

namespace {

Eigen::VectorXd curve_values(const Dataset& ds, const Functional& f, const FitOptions& fit,
                             const TiltSpec& direction, const std::vector<double>& grid) {
  check_dimensions(ds);
  const auto strata = build_strata(ds);
  const auto models = fit_all_odds(ds, strata, fit);
  const auto odds = odds_functions(models);
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const TiltSpec spec{grid[g] * direction.delta, direction.center};
    out[static_cast<Eigen::Index>(g)] = tilted_estimate(ds, strata, odds, f, spec);
  }
  return out;
}

}  // namespace

SensitivityCurve sweep(const Dataset& ds, const Functional& f, const FitOptions& fit,
                       const TiltSpec& direction, const std::vector<double>& grid,
                       const BootstrapOptions& boot) {
  if (grid.empty()) throw ArgumentError("sensitivity grid is empty");
  SensitivityCurve curve;
  curve.functional = f.describe(ds.l_names());
  curve.replicates = boot.replicates;
  curve.seed = boot.seed;
  auto statistic = [&](const Dataset& sample) { return curve_values(sample, f, fit, direction, grid); };

  if (boot.replicates == 0) {
    const auto values = statistic(ds);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double v = values[static_cast<Eigen::Index>(g)];
      curve.points.push_back({grid[g], v, 0.0, v, v});
    }
    return curve;
  }
  const auto result = bootstrap(ds, statistic, boot);
  curve.failed = static_cast<int>(result.failed.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto ci = result.normal(static_cast<Eigen::Index>(g));
    curve.points.push_back({grid[g], ci.estimate, ci.se, ci.lower, ci.upper});
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const SensitivityCurve& curve) {
  auto fmt = [](double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  out << "delta,estimate,ci_lo,ci_hi\n";
  for (const auto& p : curve.points) {
    out << fmt(p.multiplier) << ',' << fmt(p.estimate) << ',' << fmt(p.ci_lo) << ',' << fmt(p.ci_hi) << '\n';
  }
}

SensitivityCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("delta,estimate,ci_lo,ci_hi", 0) != 0) {
    throw SchemaError("sensitivity CSV must start with header delta,estimate,ci_lo,ci_hi");
  }
  SensitivityCurve curve;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(ss, cell, ',')) throw ParseError("short row in sensitivity CSV", row, static_cast<std::size_t>(k + 1));
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v[k]);
      if (res.ec != std::errc{}) throw ParseError("cannot parse '" + cell + "'", row, static_cast<std::size_t>(k + 1));
    }
    curve.points.push_back({v[0], v[1], 0.0, v[2], v[3]});
  }
  return curve;
}

}  // namespace accmv
