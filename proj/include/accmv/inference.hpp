#ifndef ACCMV_INFERENCE_HPP
#define ACCMV_INFERENCE_HPP

#include "accmv/data.hpp"
#include "accmv/estimators.hpp"
#include "accmv/glm.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace accmv {

struct InfluenceResult {
  double se = 0.0;
  Eigen::VectorXd phi;  // per-record influence values
};

/// sd(phi) / sqrt(n), with the 1/n variance convention.
[[nodiscard]] double influence_se(const Eigen::VectorXd& phi);

/// Influence functions that account for the estimated nuisance parameters.
/// `est` must have been computed from the same data and models.
InfluenceResult if_variance_ipw(const Dataset& ds, const StratumIndex& strata,
                                const OddsModelSet& odds, const Functional& f,
                                const ThetaEstimate& est);
InfluenceResult if_variance_ra(const Dataset& ds, const StratumIndex& strata,
                               const OutcomeModelSet& outcomes, const Functional& f,
                               const ThetaEstimate& est);
InfluenceResult if_variance_mr(const Dataset& ds, const StratumIndex& strata,
                               const OddsModelSet& odds, const OutcomeModelSet& outcomes,
                               const Functional& f, const ThetaEstimate& est);
/// Complete-case mean: se = sd / sqrt(n_complete).
InfluenceResult if_variance_complete_case(const Dataset& ds, const Functional& f,
                                          const ThetaEstimate& est);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

[[nodiscard]] double normal_quantile(double p);
[[nodiscard]] Interval normal_interval(double estimate, double se, double level = 0.95);
/// Linear-interpolation sample quantile of `values` (need not be sorted).
[[nodiscard]] double sample_quantile(std::vector<double> values, double p);

struct CiReport {
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::string method;  // influence, bootstrap-normal, bootstrap-percentile
  int replicates = 0;
  std::uint64_t seed = 0;
  int failed = 0;
};

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapOptions {
  int replicates = 500;
  std::uint64_t seed = 0;
  int threads = 1;
  double level = 0.95;
  double max_failure_fraction = 0.2;
};

/// Statistic recomputed on each resample; its length must not change.
using VectorStatistic = std::function<Eigen::VectorXd(const Dataset&)>;

struct BootstrapResult {
  Eigen::VectorXd point;
  /// One row per successful replicate, in replicate index order.
  Eigen::MatrixXd draws;
  std::vector<int> failed;  // indices of replicates whose refit failed
  int requested = 0;
  std::uint64_t seed = 0;
  double level = 0.95;

  [[nodiscard]] Eigen::VectorXd se() const;
  [[nodiscard]] CiReport normal(Eigen::Index component = 0) const;
  [[nodiscard]] CiReport percentile(Eigen::Index component = 0) const;
};

/// Resample whole records with replacement. Replicate k draws from its own
/// stream, so results do not depend on `threads`. Replicates throwing a fit
/// or inference error are skipped and recorded; more than
/// `max_failure_fraction` of them failing raises BootstrapInstabilityError.
BootstrapResult bootstrap(const Dataset& ds, const VectorStatistic& statistic,
                          const BootstrapOptions& options);

/// Indices of the resample used by replicate `index`.
[[nodiscard]] std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed,
                                                        std::uint64_t index);

/// Run `task(k)` for k in [0, count) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& task);

}  // namespace accmv

#endif  // ACCMV_INFERENCE_HPP
