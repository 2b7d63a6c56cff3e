// Templated estimating functions, kept in a header so they can be evaluated
// on automatic-differentiation scalars.

namespace accmv {

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ScoreSpec::score(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta, const Eigen::VectorXd& l) const {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (kind_ == Kind::linear) {
    const auto q = static_cast<Eigen::Index>(predictors_.size() + 1);
    Eigen::VectorXd z(q);
    z[0] = 1.0;
    for (std::size_t j = 0; j < predictors_.size(); ++j) z[static_cast<Eigen::Index>(j + 1)] = l[predictors_[j]];
    Scalar fit = Scalar(0.0);
    for (Eigen::Index j = 0; j < q; ++j) fit += theta[j] * z[j];
    const Scalar resid = Scalar(l[response_]) - fit;
    Vec s(q);
    for (Eigen::Index j = 0; j < q; ++j) s[j] = resid * z[j];
    return s;
  }

  const auto k = static_cast<Eigen::Index>(coords_.size());
  Vec e(k);
  for (Eigen::Index j = 0; j < k; ++j) e[j] = Scalar(l[coords_[static_cast<std::size_t>(j)]]) - theta[j];
  Mat chol = Mat::Zero(k, k);
  Eigen::Index pos = k;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = c; r < k; ++r) chol(r, c) = theta[pos++];
  }
  // u = L^{-1} e by forward substitution
  Vec u(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    Scalar acc = e[r];
    for (Eigen::Index c = 0; c < r; ++c) acc -= chol(r, c) * u[c];
    u[r] = acc / chol(r, r);
  }
  // solve L' x = b by back substitution
  auto back = [&](const Vec& b) {
    Vec x(k);
    for (Eigen::Index r = k - 1; r >= 0; --r) {
      Scalar acc = b[r];
      for (Eigen::Index c = r + 1; c < k; ++c) acc -= chol(c, r) * x[c];
      x[r] = acc / chol(r, r);
    }
    return x;
  };
  Vec s(dimension());
  const Vec s_mu = back(u);
  for (Eigen::Index j = 0; j < k; ++j) s[j] = s_mu[j];
  // gradient in L: lower triangle of L^{-T} (u u' - I)
  pos = k;
  for (Eigen::Index c = 0; c < k; ++c) {
    Vec col(k);
    for (Eigen::Index r = 0; r < k; ++r) col[r] = u[r] * u[c] - Scalar(r == c ? 1.0 : 0.0);
    const Vec g = back(col);
    for (Eigen::Index r = c; r < k; ++r) s[pos++] = g[r];
  }
  return s;
}

}  // namespace accmv
