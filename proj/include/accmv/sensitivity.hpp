#ifndef ACCMV_SENSITIVITY_HPP
#define ACCMV_SENSITIVITY_HPP

#include "accmv/data.hpp"
#include "accmv/estimators.hpp"
#include "accmv/glm.hpp"
#include "accmv/inference.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace accmv {

/// Exponential tilt exp(delta_abar . (l_abar - c_abar)) of the odds of
/// stratum (r, a), over the coordinates missing under a.
struct TiltSpec {
  Eigen::VectorXd delta;   // length d
  Eigen::VectorXd center;  // length d, zero by default

  static TiltSpec zero(int d);
  /// delta = value * 1_d, center = c * 1_d.
  static TiltSpec shared(int d, double value, double center = 0.0);
};

/// Tilt factor for a pool record of stratum `pair`; a must be incomplete.
[[nodiscard]] double tilt_factor(const PatternPair& pair, const Record& rec, const TiltSpec& spec);

/// Log of the tilted odds: fitted linear predictor plus the tilt exponent.
[[nodiscard]] double tilted_log_odds(const OddsModel& model, const Record& rec, const TiltSpec& spec);

/// Self-normalized IPW with every odds term multiplied by its tilt factor.
double tilted_estimate(const Dataset& ds, const StratumIndex& strata, const PairFunctions& odds,
                       const Functional& f, const TiltSpec& spec);

struct SensitivityPoint {
  double multiplier = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct SensitivityCurve {
  std::vector<SensitivityPoint> points;
  std::string functional;
  int replicates = 0;
  std::uint64_t seed = 0;
  int failed = 0;
};

/// Tilted estimates for delta = g * direction over each grid value g, with
/// bootstrap normal CIs (odds refitted once per replicate, shared by the
/// grid). replicates = 0 skips the bootstrap and leaves the CI collapsed.
SensitivityCurve sweep(const Dataset& ds, const Functional& f, const FitOptions& fit,
                       const TiltSpec& direction, const std::vector<double>& grid,
                       const BootstrapOptions& boot);

/// CSV with header delta,estimate,ci_lo,ci_hi.
void write_curve_csv(std::ostream& out, const SensitivityCurve& curve);
SensitivityCurve read_curve_csv(std::istream& in);

}  // namespace accmv

#endif  // ACCMV_SENSITIVITY_HPP
