#include "accmv/study.hpp"

#include "accmv/errors.hpp"
#include "accmv/estimators.hpp"
#include "accmv/inference.hpp"
#include "accmv/mpm.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <thread>

namespace accmv {

std::vector<std::string> table_labels(int table) {
  if (table == 3) return {"IPW beta0", "IPW beta1", "Complete Case beta0", "Complete Case beta1"};
  return {"IPW",
          "IPW (incorrect)",
          "RA",
          "RA (incorrect)",
          "MR (correct)",
          "MR (IPW incorrect)",
          "MR (RA incorrect)",
          "MR (both incorrect)",
          "Complete Case"};
}

const TableRow& TableResult::row(const std::string& label) const {
  for (const auto& r : rows) {
    if (r.label == label) return r;
  }
  throw ArgumentError("no table row '" + label + "'");
}

namespace {

struct Value {
  double estimate = 0.0;
  double se = 0.0;
};
using ReplicateValues = std::vector<std::optional<Value>>;

template <class F>
std::optional<Value> attempt(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::fit && e.category() != ErrorCategory::inference) throw;
    return std::nullopt;
  }
}

template <class F>
auto try_fit(F&& f) -> std::optional<decltype(f())> {
  try {
    return f();
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::fit) throw;
    return std::nullopt;
  }
}

ReplicateValues mean_replicate(DesignKind kind, const Dataset& ds) {
  const auto truth = oracle_value(kind);
  const Functional& f = *truth.f;
  const auto strata = build_strata(ds);
  const auto good = analysis_options(kind, Misspecification::none);
  const auto bad = analysis_options(kind, Misspecification::both);

  const auto odds_ok = try_fit([&] { return fit_all_odds(ds, strata, good); });
  const auto odds_bad = try_fit([&] { return fit_all_odds(ds, strata, bad); });
  const auto out_ok = try_fit([&] { return fit_all_outcomes(ds, strata, f, good); });
  const auto out_bad = try_fit([&] { return fit_all_outcomes(ds, strata, f, bad); });

  auto ipw = [&](const std::optional<OddsModelSet>& o) {
    return attempt([&]() -> std::optional<Value> {
      if (!o) return std::nullopt;
      const auto est = estimate_ipw(ds, strata, odds_functions(*o), f);
      return Value{est.theta, if_variance_ipw(ds, strata, *o, f, est).se};
    });
  };
  auto ra = [&](const std::optional<OutcomeModelSet>& m) {
    return attempt([&]() -> std::optional<Value> {
      if (!m) return std::nullopt;
      const auto est = estimate_ra(ds, strata, outcome_functions(*m), f);
      return Value{est.theta, if_variance_ra(ds, strata, *m, f, est).se};
    });
  };
  auto mr = [&](const std::optional<OddsModelSet>& o, const std::optional<OutcomeModelSet>& m) {
    return attempt([&]() -> std::optional<Value> {
      if (!o || !m) return std::nullopt;
      const auto est = estimate_mr(ds, strata, odds_functions(*o), outcome_functions(*m), f);
      return Value{est.theta, if_variance_mr(ds, strata, *o, *m, f, est).se};
    });
  };
  auto cc = attempt([&]() -> std::optional<Value> {
    const auto est = estimate_complete_case(ds, f);
    return Value{est.theta, if_variance_complete_case(ds, f, est).se};
  });
  return {ipw(odds_ok),         ipw(odds_bad),          ra(out_ok),
          ra(out_bad),          mr(odds_ok, out_ok),    mr(odds_bad, out_ok),
          mr(odds_ok, out_bad), mr(odds_bad, out_bad),  cc};
}

ReplicateValues mpm_replicate(const Dataset& ds) {
  const auto spec = *oracle_value(DesignKind::mpm).spec;
  ReplicateValues out(4);
  for (int m = 0; m < 2; ++m) {
    const Method method = m == 0 ? Method::ipw : Method::complete_case;
    try {
      const auto est = fit_marginal_model(ds, spec, method, analysis_options(DesignKind::mpm, Misspecification::none));
      out[static_cast<std::size_t>(2 * m)] = Value{est.theta[0], est.se[0]};
      out[static_cast<std::size_t>(2 * m + 1)] = Value{est.theta[1], est.se[1]};
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::fit && e.category() != ErrorCategory::inference) throw;
    }
  }
  return out;
}

}  // namespace

TableResult run_table(const TableOptions& options) {
  if (options.table < 1 || options.table > 3) throw ConfigError("table must be 1, 2 or 3");
  if (options.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (options.n < 1) throw ConfigError("n must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  const DesignKind kind = options.table == 1 ? DesignKind::single
                          : options.table == 2 ? DesignKind::multiple
                                               : DesignKind::mpm;
  const auto truth = oracle_value(kind);
  const auto labels = table_labels(options.table);

  std::vector<ReplicateValues> results(static_cast<std::size_t>(options.replicates));
  const int threads = options.threads > 0 ? options.threads
                                          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  parallel_for(options.replicates, threads, [&](int k) {
    const auto ds = generate({kind, options.n, options.seed, static_cast<std::uint64_t>(k)});
    results[static_cast<std::size_t>(k)] = kind == DesignKind::mpm ? mpm_replicate(ds) : mean_replicate(kind, ds);
  });

  const double z = normal_quantile(0.975);
  TableResult table;
  table.table = options.table;
  table.n = options.n;
  table.replicates = options.replicates;
  table.seed = options.seed;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    TableRow row;
    row.label = labels[j];
    row.truth = kind == DesignKind::mpm ? truth.theta[static_cast<Eigen::Index>(j % 2)] : truth.theta[0];
    int covered = 0;
    for (const auto& rep : results) {
      if (!rep[j]) {
        ++row.failures;
        continue;
      }
      row.estimates.push_back(rep[j]->estimate);
      row.ses.push_back(rep[j]->se);
      if (std::abs(rep[j]->estimate - row.truth) <= z * rep[j]->se) ++covered;
    }
    row.replicates = static_cast<int>(row.estimates.size());
    if (row.replicates > 0) {
      const double m = static_cast<double>(row.replicates);
      double sum = 0.0, se_sum = 0.0;
      for (std::size_t k = 0; k < row.estimates.size(); ++k) {
        sum += row.estimates[k];
        se_sum += row.ses[k];
      }
      const double mean = sum / m;
      double ss = 0.0;
      for (double e : row.estimates) ss += (e - mean) * (e - mean);
      row.bias = mean - row.truth;
      row.sample_se = row.replicates > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
      row.mean_se = se_sum / m;
      row.coverage = covered / m;
    } else {
      row.bias = row.sample_se = row.mean_se = row.coverage = std::nan("");
    }
    table.rows.push_back(std::move(row));
  }
  table.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

void write_table_csv(std::ostream& out, const TableResult& result) {
  out << "row,truth,bias,sample_se,mean_se,coverage,replicates,failures\n";
  for (const auto& r : result.rows) {
    out << '"' << r.label << "\"," << r.truth << ',' << r.bias << ',' << r.sample_se << ',' << r.mean_se
        << ',' << r.coverage << ',' << r.replicates << ',' << r.failures << '\n';
  }
}

void write_replicates_csv(std::ostream& out, const TableResult& result) {
  out << "row,index,estimate,se\n";
  for (const auto& r : result.rows) {
    for (std::size_t k = 0; k < r.estimates.size(); ++k) {
      out << '"' << r.label << "\"," << k << ',' << r.estimates[k] << ',' << r.ses[k] << '\n';
    }
  }
}

}  // namespace accmv
