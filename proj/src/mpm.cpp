#include "accmv/mpm.hpp"

#include "accmv/errors.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <set>

namespace accmv {

ScoreSpec ScoreSpec::linear(int response, std::vector<int> predictors) {
  if (response < 0) throw ArgumentError("response coordinate must be non-negative");
  std::set<int> seen{response};
  for (int c : predictors) {
    if (c < 0 || !seen.insert(c).second) throw ArgumentError("predictor coordinates must be distinct and differ from the response");
  }
  ScoreSpec s;
  s.kind_ = Kind::linear;
  s.response_ = response;
  s.predictors_ = std::move(predictors);
  return s;
}

ScoreSpec ScoreSpec::gaussian(std::vector<int> coords) {
  if (coords.empty()) throw ArgumentError("gaussian spec needs at least one coordinate");
  std::set<int> seen;
  for (int c : coords) {
    if (c < 0 || !seen.insert(c).second) throw ArgumentError("gaussian coordinates must be distinct");
  }
  ScoreSpec s;
  s.kind_ = Kind::gaussian;
  s.coords_ = std::move(coords);
  return s;
}

int ScoreSpec::dimension() const {
  if (kind_ == Kind::linear) return static_cast<int>(predictors_.size()) + 1;
  const int k = static_cast<int>(coords_.size());
  return k + k * (k + 1) / 2;
}

std::vector<std::string> ScoreSpec::parameter_names(const std::vector<std::string>& l_names) const {
  auto name = [&](int c) {
    return c < static_cast<int>(l_names.size()) ? l_names[static_cast<std::size_t>(c)]
                                                 : "L" + std::to_string(c + 1);
  };
  std::vector<std::string> out;
  if (kind_ == Kind::linear) {
    out.push_back("(Intercept)");
    for (int c : predictors_) out.push_back(name(c));
    return out;
  }
  for (int c : coords_) out.push_back("mean[" + name(c) + "]");
  for (std::size_t c = 0; c < coords_.size(); ++c) {
    for (std::size_t r = c; r < coords_.size(); ++r) {
      out.push_back("chol[" + name(coords_[r]) + "," + name(coords_[c]) + "]");
    }
  }
  return out;
}

Eigen::MatrixXd ScoreSpec::jacobian(const Eigen::VectorXd& theta, const Eigen::VectorXd& l) const {
  const int q = dimension();
  if (kind_ == Kind::linear) {
    Eigen::VectorXd z(q);
    z[0] = 1.0;
    for (std::size_t j = 0; j < predictors_.size(); ++j) z[static_cast<Eigen::Index>(j + 1)] = l[predictors_[j]];
    return -z * z.transpose();
  }
  using Ad = Eigen::AutoDiffScalar<Eigen::VectorXd>;
  Eigen::Matrix<Ad, Eigen::Dynamic, 1> t(q);
  for (int j = 0; j < q; ++j) t[j] = Ad(theta[j], q, j);
  const auto s = score<Ad>(t, l);
  Eigen::MatrixXd jac(q, q);
  for (int j = 0; j < q; ++j) jac.row(j) = s[j].derivatives().transpose();
  return jac;
}

Eigen::MatrixXd ScoreSpec::gaussian_covariance(const Eigen::VectorXd& theta) const {
  const auto k = static_cast<Eigen::Index>(coords_.size());
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(k, k);
  Eigen::Index pos = k;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = c; r < k; ++r) chol(r, c) = theta[pos++];
  }
  return chol * chol.transpose();
}

namespace {

void check_spec(const Dataset& ds, const ScoreSpec& spec) {
  auto check = [&](int c) {
    if (c >= ds.d()) {
      throw ConfigError("marginal model coordinate " + std::to_string(c) + " exceeds d = " +
                        std::to_string(ds.d()));
    }
  };
  if (spec.kind() == ScoreSpec::Kind::linear) {
    check(spec.response());
    for (int c : spec.predictors()) check(c);
  } else {
    for (int c : spec.coords()) check(c);
  }
}

void check_weights(const Dataset& ds, const std::vector<double>& weights) {
  if (weights.size() != ds.size()) throw ArgumentError("one weight per record required");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (weights[i] != 0.0 && !ds[i].a.is_complete()) {
      throw PreconditionError("nonzero weight on a record with incomplete primary variables");
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ArgumentError("weights must be finite and non-negative");
  }
}

}  // namespace

Eigen::VectorXd weighted_score(const Dataset& ds, const std::vector<double>& weights,
                               const ScoreSpec& spec, const Eigen::VectorXd& theta) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(spec.dimension());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (weights[i] != 0.0) acc += weights[i] * spec.score<double>(theta, ds[i].l);
  }
  return acc / static_cast<double>(ds.size());
}

Eigen::MatrixXd weighted_jacobian(const Dataset& ds, const std::vector<double>& weights,
                                  const ScoreSpec& spec, const Eigen::VectorXd& theta) {
  const int q = spec.dimension();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (weights[i] != 0.0) acc += weights[i] * spec.jacobian(theta, ds[i].l);
  }
  return acc / static_cast<double>(ds.size());
}

double ee_root_residual(const Dataset& ds, const std::vector<double>& weights,
                        const ScoreSpec& spec, const Eigen::VectorXd& theta) {
  return weighted_score(ds, weights, spec, theta).lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd closed_form(const Dataset& ds, const std::vector<double>& weights, const ScoreSpec& spec) {
  check_spec(ds, spec);
  check_weights(ds, weights);
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw SingularityError("all estimating-equation weights are zero");

  if (spec.kind() == ScoreSpec::Kind::linear) {
    const int q = spec.dimension();
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd z(q);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (weights[i] == 0.0) continue;
      const auto& l = ds[i].l;
      z[0] = 1.0;
      for (std::size_t j = 0; j < spec.predictors().size(); ++j) z[static_cast<Eigen::Index>(j + 1)] = l[spec.predictors()[j]];
      xtx.noalias() += weights[i] * z * z.transpose();
      xty.noalias() += weights[i] * l[spec.response()] * z;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtx);
    if (qr.rank() < q) throw SingularityError("weighted least-squares design is rank deficient");
    return qr.solve(xty);
  }

  const auto k = static_cast<Eigen::Index>(spec.coords().size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  auto sub = [&](const Eigen::VectorXd& l) {
    Eigen::VectorXd v(k);
    for (Eigen::Index j = 0; j < k; ++j) v[j] = l[spec.coords()[static_cast<std::size_t>(j)]];
    return v;
  };
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (weights[i] != 0.0) mean += weights[i] * sub(ds[i].l);
  }
  mean /= total;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const Eigen::VectorXd e = sub(ds[i].l) - mean;
    cov.noalias() += weights[i] * e * e.transpose();
  }
  cov /= total;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw SingularityError("weighted covariance is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  Eigen::VectorXd theta(spec.dimension());
  theta.head(k) = mean;
  Eigen::Index pos = k;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = c; r < k; ++r) theta[pos++] = chol(r, c);
  }
  return theta;
}

MpmEstimate solve_weighted_ee(const Dataset& ds, const std::vector<double>& weights,
                              const ScoreSpec& spec, const MpmOptions& options) {
  check_spec(ds, spec);
  check_weights(ds, weights);
  MpmEstimate est;
  est.names = spec.parameter_names(ds.l_names());
  Eigen::VectorXd theta = options.start ? *options.start : closed_form(ds, weights, spec);
  if (theta.size() != spec.dimension()) throw ArgumentError("start vector has the wrong length");

  Eigen::VectorXd u = weighted_score(ds, weights, spec, theta);
  for (int iter = 0;; ++iter) {
    est.residual = u.lpNorm<Eigen::Infinity>();
    if (est.residual <= options.tolerance) {
      est.converged = true;
      est.iterations = iter;
      break;
    }
    if (iter >= options.max_iterations) {
      throw NonConvergenceError("weighted estimating equation did not converge", theta);
    }
    const Eigen::MatrixXd jac = weighted_jacobian(ds, weights, spec, theta);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) throw SingularityError("singular estimating-equation Jacobian");
    const Eigen::VectorXd step = -lu.solve(u);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      const Eigen::VectorXd next = theta + t * step;
      const Eigen::VectorXd u_next = weighted_score(ds, weights, spec, next);
      if (u_next.allFinite() && u_next.norm() < u.norm()) {
        theta = next;
        u = u_next;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NonConvergenceError("estimating-equation line search failed", theta);
  }

  est.theta = theta;
  est.jacobian = weighted_jacobian(ds, weights, spec, theta);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(est.jacobian);
  if (!lu.isInvertible()) throw SingularityError("singular estimating-equation Jacobian at the root");

  // weights treated as fixed
  const int q = spec.dimension();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
  const Eigen::VectorXd mean_u = weighted_score(ds, weights, spec, theta);
  double sum = 0.0, sum_sq = 0.0;
  est.weight_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Eigen::VectorXd ui = -mean_u;
    if (weights[i] != 0.0) ui += weights[i] * spec.score<double>(theta, ds[i].l);
    meat.noalias() += ui * ui.transpose();
    if (ds[i].a.is_complete()) {
      est.weight_min = std::min(est.weight_min, weights[i]);
      est.weight_max = std::max(est.weight_max, weights[i]);
    }
    sum += weights[i];
    sum_sq += weights[i] * weights[i];
  }
  const double n = static_cast<double>(ds.size());
  meat /= n;
  const Eigen::MatrixXd ainv = lu.inverse();
  est.covariance = ainv * meat * ainv.transpose() / n;
  est.covariance = (0.5 * (est.covariance + est.covariance.transpose())).eval();
  est.se = est.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  est.effective_sample_size = sum_sq > 0 ? sum * sum / sum_sq : 0.0;
  return est;
}

Eigen::MatrixXd mpm_influence(const Dataset& ds, const StratumIndex& strata, const OddsModelSet& odds,
                              const std::vector<double>& weights, const ScoreSpec& spec,
                              const Eigen::VectorXd& theta, bool naive) {
  const int q = spec.dimension();
  const auto n = static_cast<Eigen::Index>(ds.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, q);
  std::vector<Eigen::VectorXd> scores(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds[i].a.is_complete()) continue;
    scores[i] = spec.score<double>(theta, ds[i].l);
    if (weights[i] != 0.0) u.row(static_cast<Eigen::Index>(i)) = weights[i] * scores[i].transpose();
  }
  if (naive) return u;
  for (const auto& pair : strata.incomplete_pairs()) {
    auto it = odds.find(pair);
    if (it == odds.end()) throw ConfigError("no odds model for present stratum " + pair.to_string());
    const auto& model = it->second;
    // derivative of the weighted score in alpha: q x k
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(q, model.terms.size());
    for (auto i : strata.pool(pair.r)) {
      phi.noalias() += (model.evaluate(ds[i]) * scores[i]) * model.terms.design(ds[i]).transpose();
    }
    phi /= static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& rec = ds[static_cast<std::size_t>(i)];
      if (in_case(rec, pair) || in_pool(rec, pair.r)) u.row(i) += (phi * psi_odds(model, rec)).transpose();
    }
  }
  return u;
}

Eigen::MatrixXd sandwich_variance(const Dataset& ds, const StratumIndex& strata,
                                  const OddsModelSet& odds, const std::vector<double>& weights,
                                  const ScoreSpec& spec, const Eigen::VectorXd& theta, bool naive) {
  const Eigen::MatrixXd a = weighted_jacobian(ds, weights, spec, theta);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw SingularityError("singular estimating-equation Jacobian");
  const Eigen::MatrixXd u = mpm_influence(ds, strata, odds, weights, spec, theta, naive);
  const double n = static_cast<double>(ds.size());
  const Eigen::MatrixXd centered = u.rowwise() - u.colwise().mean();
  const Eigen::MatrixXd meat = centered.transpose() * centered / n;
  const Eigen::MatrixXd ainv = lu.inverse();
  Eigen::MatrixXd v = ainv * meat * ainv.transpose() / n;
  return 0.5 * (v + v.transpose());
}

MpmEstimate solve_weighted_ee(const Dataset& ds, const StratumIndex& strata, const OddsModelSet& odds,
                              const ScoreSpec& spec, const MpmOptions& options) {
  const auto table = compute_weights(ds, strata, odds_functions(odds));
  MpmEstimate est = solve_weighted_ee(ds, table.total, spec, options);
  est.covariance = sandwich_variance(ds, strata, odds, table.total, spec, est.theta, options.naive_sandwich);
  est.se = est.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return est;
}

MpmEstimate fit_marginal_model(const Dataset& ds, const ScoreSpec& spec, Method method,
                               const FitOptions& fit, const MpmOptions& options) {
  if (method == Method::ra || method == Method::mr) {
    throw CongenialityError(
        "method '" + to_string(method) +
        "' is not available for marginal parametric models: an outcome regression for each "
        "pattern need not be compatible with the marginal model, so only ipw (or cc) is offered");
  }
  check_dimensions(ds);
  check_spec(ds, spec);
  if (method == Method::complete_case) {
    std::vector<double> w(ds.size(), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds[i].a.is_complete()) w[i] = 1.0;
    }
    return solve_weighted_ee(ds, w, spec, options);
  }
  const auto strata = build_strata(ds);
  const auto odds = fit_all_odds(ds, strata, fit);
  return solve_weighted_ee(ds, strata, odds, spec, options);
}

}  // namespace accmv
