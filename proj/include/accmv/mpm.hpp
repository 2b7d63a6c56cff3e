#ifndef ACCMV_MPM_HPP
#define ACCMV_MPM_HPP

#include "accmv/data.hpp"
#include "accmv/estimators.hpp"
#include "accmv/glm.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace accmv {

/// Estimating function s(theta | l) of a marginal model for L.
///
/// linear:   theta = regression coefficients of l[response] on
///           (1, l[predictors]); s = z (y - z'theta).
/// gaussian: theta = (mu, lower-triangular Cholesky factor of Sigma stored
///           column by column) for l[coords]; s = Gaussian log-density score.
class ScoreSpec {
 public:
  enum class Kind { linear, gaussian };

  static ScoreSpec linear(int response, std::vector<int> predictors);
  static ScoreSpec gaussian(std::vector<int> coords);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] int response() const noexcept { return response_; }
  [[nodiscard]] const std::vector<int>& predictors() const noexcept { return predictors_; }
  [[nodiscard]] const std::vector<int>& coords() const noexcept { return coords_; }
  [[nodiscard]] int dimension() const;
  [[nodiscard]] std::vector<std::string> parameter_names(const std::vector<std::string>& l_names) const;

  template <class Scalar>
  [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, 1> score(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta, const Eigen::VectorXd& l) const;

  /// d s / d theta (q x q).
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& theta, const Eigen::VectorXd& l) const;

  /// Covariance matrix implied by a Gaussian parameter vector.
  [[nodiscard]] Eigen::MatrixXd gaussian_covariance(const Eigen::VectorXd& theta) const;

 private:
  Kind kind_ = Kind::linear;
  int response_ = 0;
  std::vector<int> predictors_;
  std::vector<int> coords_;
};

struct MpmOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
  /// Drop the correction for estimated odds parameters from the sandwich.
  bool naive_sandwich = false;
  /// Newton start; defaults to the weighted closed form.
  std::optional<Eigen::VectorXd> start;
};

struct MpmEstimate {
  Eigen::VectorXd theta;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd se;
  Eigen::MatrixXd jacobian;  // (1/n) sum w grad s at theta
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // sup norm of the mean weighted score
  std::vector<std::string> names;
  double weight_min = 0.0;
  double weight_max = 0.0;
  double effective_sample_size = 0.0;
};

/// (1/n) sum_i w_i s(theta | L_i); records with w_i = 0 are skipped, so
/// w must vanish wherever L is incomplete.
[[nodiscard]] Eigen::VectorXd weighted_score(const Dataset& ds, const std::vector<double>& weights,
                                             const ScoreSpec& spec, const Eigen::VectorXd& theta);
[[nodiscard]] Eigen::MatrixXd weighted_jacobian(const Dataset& ds, const std::vector<double>& weights,
                                                const ScoreSpec& spec, const Eigen::VectorXd& theta);
[[nodiscard]] double ee_root_residual(const Dataset& ds, const std::vector<double>& weights,
                                      const ScoreSpec& spec, const Eigen::VectorXd& theta);

/// Weighted least squares (linear) or weighted mean / covariance (gaussian).
[[nodiscard]] Eigen::VectorXd closed_form(const Dataset& ds, const std::vector<double>& weights,
                                          const ScoreSpec& spec);

/// Newton solve of the weighted estimating equation with explicit weights.
/// The covariance treats the weights as known.
MpmEstimate solve_weighted_ee(const Dataset& ds, const std::vector<double>& weights,
                              const ScoreSpec& spec, const MpmOptions& options = {});

/// IPW weights 1 + Q from fitted odds, solve, and attach the sandwich
/// covariance including the odds-estimation correction.
MpmEstimate solve_weighted_ee(const Dataset& ds, const StratumIndex& strata, const OddsModelSet& odds,
                              const ScoreSpec& spec, const MpmOptions& options = {});

Eigen::MatrixXd sandwich_variance(const Dataset& ds, const StratumIndex& strata,
                                  const OddsModelSet& odds, const std::vector<double>& weights,
                                  const ScoreSpec& spec, const Eigen::VectorXd& theta, bool naive);

/// Per-record influence of sqrt(n)(theta_hat - theta) before the A^{-1}
/// factor: w_i s_i plus the odds correction.
Eigen::MatrixXd mpm_influence(const Dataset& ds, const StratumIndex& strata, const OddsModelSet& odds,
                              const std::vector<double>& weights, const ScoreSpec& spec,
                              const Eigen::VectorXd& theta, bool naive);

/// Full pipeline for a marginal model. IPW fits odds models; complete_case
/// solves on A = 1_d records with unit weights; RA and MR throw
/// CongenialityError.
MpmEstimate fit_marginal_model(const Dataset& ds, const ScoreSpec& spec, Method method,
                               const FitOptions& fit = {}, const MpmOptions& options = {});

}  // namespace accmv

#include "accmv/mpm_score.ipp"

#endif  // ACCMV_MPM_HPP
