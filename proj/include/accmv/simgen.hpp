#ifndef ACCMV_SIMGEN_HPP
#define ACCMV_SIMGEN_HPP

#include "accmv/data.hpp"
#include "accmv/estimators.hpp"
#include "accmv/glm.hpp"
#include "accmv/mpm.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace accmv {

/// The three simulation designs.
///   single:   X = (Y1, Y2), L = Y3, target E[Y3].
///   multiple: X = (Y1, Y2), L = (Y3, Y4), target E[Y3 Y4].
///   mpm:      X = Y1, L = (Y2, Y3), target E[Y3 | Y2] = b0 + b1 Y2.
enum class DesignKind { single, multiple, mpm };

/// Which analyst model family is deliberately wrong.
enum class Misspecification { none, odds, outcome, both };

[[nodiscard]] std::string to_string(DesignKind kind);
[[nodiscard]] DesignKind parse_design(std::string_view text);

struct SimDesign {
  DesignKind kind = DesignKind::single;
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // replicate index
};

[[nodiscard]] std::vector<std::string> design_x_names(DesignKind kind);
[[nodiscard]] std::vector<std::string> design_l_names(DesignKind kind);

/// Draws from N(mean, cov) through a Cholesky factor computed once.
class MvnSampler {
 public:
  MvnSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);
  Eigen::VectorXd operator()(std::mt19937_64& engine) const;
  [[nodiscard]] Eigen::Index dim() const noexcept { return mean_.size(); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

/// Equicorrelated covariance 1/2 I + 1/2 11'.
[[nodiscard]] Eigen::MatrixXd exchangeable_covariance(int k);

Dataset generate(const SimDesign& design);

/// mpm design with the complete (Y1, Y2, Y3) matrix kept alongside the
/// masked dataset.
struct FullSample {
  Eigen::MatrixXd full;  // n x 3
  Dataset observed;
};
FullSample generate_mpm_full(const SimDesign& design);

struct GroundTruth {
  DesignKind kind = DesignKind::single;
  Eigen::VectorXd theta;
  std::string exact;  // closed form as text, e.g. "89/96"
  std::optional<Functional> f;
  std::optional<ScoreSpec> spec;
  PairFunctions odds;
  PairFunctions outcome;
  /// P(R = r, A = a); empty for mpm, where it depends on X.
  std::map<PatternPair, double> probabilities;
};

GroundTruth oracle_value(DesignKind kind);

/// Model terms the analyst uses in each scenario: correct specification by
/// default, with the chosen family reduced as in the simulation study.
FitOptions analysis_options(DesignKind kind, Misspecification miss);

struct OracleCheck {
  std::string name;
  double estimate = 0.0;
  double expected = 0.0;
  double se = 0.0;
  bool passed = true;
  [[nodiscard]] double z() const { return se > 0 ? (estimate - expected) / se : 0.0; }
};

struct OracleReport {
  DesignKind kind = DesignKind::single;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double threshold = 4.0;
  std::vector<OracleCheck> checks;
  [[nodiscard]] bool passed() const;
  [[nodiscard]] std::size_t failures() const;
};

/// Monte Carlo re-derivation of the closed forms on one large sample:
/// stratum frequencies, binned moment identities for every oracle odds
/// E[g (I(case) - O I(pool))] = 0 and regression E[g (f - m) I(pool)] = 0,
/// and plug-in estimates of the true parameter. Flags |z| > threshold.
OracleReport verify_oracles(DesignKind kind, std::size_t n_big, std::uint64_t seed,
                            double threshold = 4.0);

}  // namespace accmv

#endif  // ACCMV_SIMGEN_HPP
