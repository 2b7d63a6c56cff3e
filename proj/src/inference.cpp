#include "accmv/inference.hpp"

#include "accmv/errors.hpp"
#include "accmv/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace accmv {

double influence_se(const Eigen::VectorXd& phi) {
  const double n = static_cast<double>(phi.size());
  if (phi.size() == 0) throw InferenceError("influence vector is empty");
  const double mean = phi.mean();
  return std::sqrt((phi.array() - mean).square().sum() / n) / std::sqrt(n);
}

namespace {

void check_models(const StratumIndex& strata, const auto& models, const char* family) {
  for (const auto& pair : strata.incomplete_pairs()) {
    if (!models.count(pair)) {
      throw ConfigError(std::string("no ") + family + " model for present stratum " + pair.to_string());
    }
  }
}

// (1/n) sum over the pool of r of weight(i) * design(i)
template <class Weight>
Eigen::VectorXd pool_average(const Dataset& ds, const std::vector<std::size_t>& pool,
                             const ModelTerms& terms, Weight weight) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(terms.size());
  for (auto i : pool) acc += weight(i) * terms.design(ds[i]);
  return acc / static_cast<double>(ds.size());
}

}  // namespace

InfluenceResult if_variance_ipw(const Dataset& ds, const StratumIndex& strata,
                                const OddsModelSet& odds, const Functional& f,
                                const ThetaEstimate& est) {
  check_models(strata, odds, "odds");
  const auto fv = complete_values(ds, f);
  const auto n = static_cast<Eigen::Index>(ds.size());
  Eigen::VectorXd phi = est.influence;
  if (phi.size() != n) throw ArgumentError("estimate does not match dataset size");

  double omega_bar = 1.0;
  if (est.self_normalized) {
    omega_bar = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!ds[i].a.is_complete()) continue;
      double w = 1.0;
      for (const auto& [pair, model] : odds) {
        if (dominates(ds[i].r, pair.r)) w += model.evaluate(ds[i]);
      }
      omega_bar += w;
    }
    omega_bar /= static_cast<double>(ds.size());
  }

  for (const auto& pair : strata.incomplete_pairs()) {
    const auto& model = odds.at(pair);
    const auto& pool = strata.pool(pair.r);
    // derivative of the weighted sum in alpha
    Eigen::VectorXd grad = pool_average(ds, pool, model.terms, [&](std::size_t i) {
      const double o = model.evaluate(ds[i]);
      return est.self_normalized ? (fv[i] - est.theta) * o : fv[i] * o;
    });
    if (est.self_normalized) grad /= omega_bar;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& rec = ds[static_cast<std::size_t>(i)];
      if (in_case(rec, pair) || in_pool(rec, pair.r)) phi[i] += grad.dot(psi_odds(model, rec));
    }
  }
  return {influence_se(phi), std::move(phi)};
}

InfluenceResult if_variance_ra(const Dataset& ds, const StratumIndex& strata,
                               const OutcomeModelSet& outcomes, const Functional& f,
                               const ThetaEstimate& est) {
  check_models(strata, outcomes, "outcome");
  const auto n = static_cast<Eigen::Index>(ds.size());
  Eigen::VectorXd phi = est.influence;
  if (phi.size() != n) throw ArgumentError("estimate does not match dataset size");
  for (const auto& pair : strata.incomplete_pairs()) {
    const auto& model = outcomes.at(pair);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.beta.size());
    for (auto i : strata.strata.at(pair)) grad += model.gradient(ds[i]);
    grad /= static_cast<double>(n);
    for (auto i : strata.pool(pair.r)) {
      phi[static_cast<Eigen::Index>(i)] += grad.dot(psi_outcome(model, ds[i], f));
    }
  }
  return {influence_se(phi), std::move(phi)};
}

InfluenceResult if_variance_mr(const Dataset& ds, const StratumIndex& strata,
                               const OddsModelSet& odds, const OutcomeModelSet& outcomes,
                               const Functional& f, const ThetaEstimate& est) {
  check_models(strata, odds, "odds");
  check_models(strata, outcomes, "outcome");
  const auto fv = complete_values(ds, f);
  const auto n = static_cast<Eigen::Index>(ds.size());
  const double nd = static_cast<double>(n);
  Eigen::VectorXd phi = est.influence;
  if (phi.size() != n) throw ArgumentError("estimate does not match dataset size");
  for (const auto& pair : strata.incomplete_pairs()) {
    const auto& om = odds.at(pair);
    const auto& mm = outcomes.at(pair);
    const auto& pool = strata.pool(pair.r);
    // d/dbeta: gradient of m on the case stratum minus odds-weighted on the pool
    Eigen::VectorXd b = Eigen::VectorXd::Zero(mm.beta.size());
    for (auto i : strata.strata.at(pair)) b += mm.gradient(ds[i]);
    for (auto i : pool) b -= om.evaluate(ds[i]) * mm.gradient(ds[i]);
    b /= nd;
    // d/dalpha: residual times odds times design on the pool
    Eigen::VectorXd c = pool_average(ds, pool, om.terms, [&](std::size_t i) {
      return (fv[i] - mm.evaluate(ds[i])) * om.evaluate(ds[i]);
    });
    for (auto i : pool) phi[static_cast<Eigen::Index>(i)] += b.dot(psi_outcome(mm, ds[i], f));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& rec = ds[static_cast<std::size_t>(i)];
      if (in_case(rec, pair) || in_pool(rec, pair.r)) phi[i] += c.dot(psi_odds(om, rec));
    }
  }
  return {influence_se(phi), std::move(phi)};
}

InfluenceResult if_variance_complete_case(const Dataset&, const Functional&,
                                          const ThetaEstimate& est) {
  return {influence_se(est.influence), est.influence};
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval normal_interval(double estimate, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("confidence level must lie in (0, 1)");
  const double z = normal_quantile(0.5 + level / 2.0);
  return {estimate - z * se, estimate + z * se};
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InferenceError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------------------

void parallel_for(int count, int threads, const std::function<void(int)>& task) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        try {
          task(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  auto engine = make_engine(seed, index);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(engine);
  return out;
}

BootstrapResult bootstrap(const Dataset& ds, const VectorStatistic& statistic,
                          const BootstrapOptions& options) {
  if (options.replicates < 2) throw ArgumentError("bootstrap needs at least 2 replicates");
  BootstrapResult result;
  result.requested = options.replicates;
  result.seed = options.seed;
  result.level = options.level;
  result.point = statistic(ds);

  const auto b = options.replicates;
  std::vector<std::optional<Eigen::VectorXd>> draws(static_cast<std::size_t>(b));
  parallel_for(b, options.threads, [&](int k) {
    const auto idx = resample_indices(ds.size(), options.seed, static_cast<std::uint64_t>(k));
    try {
      Eigen::VectorXd v = statistic(ds.subset(idx));
      if (v.size() != result.point.size()) throw ArgumentError("bootstrap statistic changed length");
      if (v.allFinite()) draws[static_cast<std::size_t>(k)] = std::move(v);
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::fit && e.category() != ErrorCategory::inference) throw;
    }
  });

  std::vector<Eigen::VectorXd> ok;
  for (int k = 0; k < b; ++k) {
    if (draws[static_cast<std::size_t>(k)]) {
      ok.push_back(*draws[static_cast<std::size_t>(k)]);
    } else {
      result.failed.push_back(k);
    }
  }
  const double failure_share = static_cast<double>(result.failed.size()) / b;
  if (failure_share > options.max_failure_fraction || ok.size() < 2) {
    throw BootstrapInstabilityError(std::to_string(result.failed.size()) + " of " +
                                        std::to_string(b) + " bootstrap replicates failed",
                                    static_cast<int>(result.failed.size()), b);
  }
  result.draws.resize(static_cast<Eigen::Index>(ok.size()), result.point.size());
  for (std::size_t k = 0; k < ok.size(); ++k) result.draws.row(static_cast<Eigen::Index>(k)) = ok[k].transpose();
  return result;
}

Eigen::VectorXd BootstrapResult::se() const {
  const double m = static_cast<double>(draws.rows());
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  return ((draws.rowwise() - mean).array().square().colwise().sum() / (m - 1.0)).sqrt().transpose();
}

CiReport BootstrapResult::normal(Eigen::Index component) const {
  CiReport r;
  r.estimate = point[component];
  r.se = se()[component];
  const auto ci = normal_interval(r.estimate, r.se, level);
  r.lower = ci.lower;
  r.upper = ci.upper;
  r.level = level;
  r.method = "bootstrap-normal";
  r.replicates = requested;
  r.seed = seed;
  r.failed = static_cast<int>(failed.size());
  return r;
}

CiReport BootstrapResult::percentile(Eigen::Index component) const {
  CiReport r = normal(component);
  std::vector<double> v(draws.col(component).data(), draws.col(component).data() + draws.rows());
  r.lower = sample_quantile(v, (1.0 - level) / 2.0);
  r.upper = sample_quantile(v, (1.0 + level) / 2.0);
  r.method = "bootstrap-percentile";
  return r;
}

}  // namespace accmv
