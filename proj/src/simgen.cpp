#include "accmv/simgen.hpp"

#include "accmv/errors.hpp"
#include "accmv/rng.hpp"

#include <cmath>

namespace accmv {

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::single: return "single";
    case DesignKind::multiple: return "multiple";
    case DesignKind::mpm: return "mpm";
  }
  return "?";
}

DesignKind parse_design(std::string_view text) {
  if (text == "single") return DesignKind::single;
  if (text == "multiple") return DesignKind::multiple;
  if (text == "mpm") return DesignKind::mpm;
  throw ConfigError("unknown design '" + std::string(text) + "' (expected single, multiple or mpm)");
}

std::vector<std::string> design_x_names(DesignKind kind) {
  if (kind == DesignKind::mpm) return {"Y1"};
  return {"Y1", "Y2"};
}

std::vector<std::string> design_l_names(DesignKind kind) {
  switch (kind) {
    case DesignKind::single: return {"Y3"};
    case DesignKind::multiple: return {"Y3", "Y4"};
    case DesignKind::mpm: return {"Y2", "Y3"};
  }
  return {};
}

MvnSampler::MvnSampler(Eigen::VectorXd mean, const Eigen::MatrixXd& cov) : mean_(std::move(mean)) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ArgumentError("covariance is not positive definite");
  factor_ = llt.matrixL();
}

Eigen::VectorXd MvnSampler::operator()(std::mt19937_64& engine) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(mean_.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(engine);
  return mean_ + factor_ * z;
}

Eigen::MatrixXd exchangeable_covariance(int k) {
  return 0.5 * Eigen::MatrixXd::Identity(k, k) + 0.5 * Eigen::MatrixXd::Ones(k, k);
}

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// Place the draw `v` = (L_a, X_r) into full-length vectors.
Record place(const Eigen::VectorXd& v, const Pattern& r, const Pattern& a) {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(r.length(), nan_v);
  Eigen::VectorXd l = Eigen::VectorXd::Constant(a.length(), nan_v);
  Eigen::Index k = 0;
  for (int j : a.coordinates()) l[j] = v[k++];
  for (int j : r.coordinates()) x[j] = v[k++];
  return {std::move(x), std::move(l)};
}

Eigen::VectorXd single_mean(int k) {
  switch (k) {
    case 1: return Eigen::VectorXd::Constant(1, 1.0);
    case 2: return (Eigen::VectorXd(2) << 1.0, -1.0).finished();
    case 3: return (Eigen::VectorXd(3) << 0.0, -1.0, -1.0).finished();
  }
  return {};
}

Eigen::VectorXd multiple_mean(int k) {
  if (k == 1) return Eigen::VectorXd::Constant(1, 0.5);
  return Eigen::VectorXd::Ones(k);
}

Dataset generate_single(const SimDesign& design, std::mt19937_64& engine) {
  std::vector<MvnSampler> samplers;
  for (int k = 1; k <= 3; ++k) samplers.emplace_back(single_mean(k), exchangeable_covariance(k));
  std::uniform_int_distribution<int> cell(0, 7);
  std::vector<Record> records;
  records.reserve(design.n);
  for (std::size_t i = 0; i < design.n; ++i) {
    const int c = cell(engine);
    const Pattern r(static_cast<std::uint32_t>(c & 3), 2);
    const Pattern a(static_cast<std::uint32_t>(c >> 2), 1);
    const int k = r.count() + (a.is_complete() ? 1 : 0);
    const Eigen::VectorXd v = k == 0 ? Eigen::VectorXd() : samplers[static_cast<std::size_t>(k - 1)](engine);
    records.push_back(place(v, r, a));
  }
  return {std::move(records), design_x_names(DesignKind::single), design_l_names(DesignKind::single)};
}

Dataset generate_multiple(const SimDesign& design, std::mt19937_64& engine) {
  std::vector<MvnSampler> partial, complete;
  for (int k = 1; k <= 3; ++k) partial.emplace_back(multiple_mean(k), exchangeable_covariance(k));
  for (int k = 2; k <= 4; ++k) complete.emplace_back(Eigen::VectorXd::Ones(k), exchangeable_covariance(k));
  std::uniform_int_distribution<int> cell(0, 15);
  std::vector<Record> records;
  records.reserve(design.n);
  for (std::size_t i = 0; i < design.n; ++i) {
    const int c = cell(engine);
    const Pattern r(static_cast<std::uint32_t>(c & 3), 2);
    const Pattern a(static_cast<std::uint32_t>(c >> 2), 2);
    const int k = r.count() + a.count();
    Eigen::VectorXd v;
    if (a.is_complete()) {
      v = complete[static_cast<std::size_t>(k - 2)](engine);
    } else if (k > 0) {
      v = partial[static_cast<std::size_t>(k - 1)](engine);
    }
    records.push_back(place(v, r, a));
  }
  return {std::move(records), design_x_names(DesignKind::multiple), design_l_names(DesignKind::multiple)};
}

}  // namespace

FullSample generate_mpm_full(const SimDesign& design) {
  auto engine = make_engine(design.seed, design.stream);
  const MvnSampler sampler((Eigen::VectorXd(3) << 1.0, 0.0, -1.0).finished(), exchangeable_covariance(3));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd full(static_cast<Eigen::Index>(design.n), 3);
  std::vector<Record> records;
  records.reserve(design.n);
  for (std::size_t i = 0; i < design.n; ++i) {
    const Eigen::VectorXd y = sampler(engine);
    full.row(static_cast<Eigen::Index>(i)) = y.transpose();
    // cells 0-3: R = 0 with A = 00..11; cells 4-6: R = 1 with A = 00, 01, 10;
    // cell 7: R = 1, A = 11. The exp(L'1) factor cancels in the normalization.
    const double e = std::exp(0.5 * y[0]);
    const double total = 5.0 + 3.0 * e;
    double u = unif(engine) * total;
    int c = 0;
    for (; c < 7; ++c) {
      const double w = (c >= 4 && c <= 6) ? e : 1.0;
      if (u < w) break;
      u -= w;
    }
    const Pattern r(c >= 4 ? 1u : 0u, 1);
    const Pattern a(static_cast<std::uint32_t>(c < 4 ? c : (c == 7 ? 3 : c - 4)), 2);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, r.is_complete() ? y[0] : nan_v);
    Eigen::VectorXd l(2);
    l[0] = a.observed(0) ? y[1] : nan_v;
    l[1] = a.observed(1) ? y[2] : nan_v;
    records.emplace_back(std::move(x), std::move(l));
  }
  return {std::move(full),
          Dataset(std::move(records), design_x_names(DesignKind::mpm), design_l_names(DesignKind::mpm))};
}

Dataset generate(const SimDesign& design) {
  if (design.n < 1) throw ArgumentError("simulation needs n >= 1");
  switch (design.kind) {
    case DesignKind::single: {
      auto engine = make_engine(design.seed, design.stream);
      return generate_single(design, engine);
    }
    case DesignKind::multiple: {
      auto engine = make_engine(design.seed, design.stream);
      return generate_multiple(design, engine);
    }
    case DesignKind::mpm:
      return generate_mpm_full(design).observed;
  }
  throw ArgumentError("unknown design");
}

// ---------------------------------------------------------------------------
// Closed-form truths

namespace {

PatternPair pp(const char* r, const char* a) { return {Pattern::parse(r), Pattern::parse(a)}; }

GroundTruth single_truth() {
  GroundTruth t;
  t.kind = DesignKind::single;
  t.theta = Eigen::VectorXd::Constant(1, 89.0 / 96.0);
  t.exact = "89/96";
  t.f = Functional::identity(0);
  t.odds[pp("00", "0")] = [](const Record&) { return 0.25; };
  t.odds[pp("10", "0")] = [](const Record& s) { return 0.5 * std::exp(2.0 * s.x[0]); };
  t.odds[pp("01", "0")] = [](const Record& s) { return 0.5 * std::exp(2.0 * s.x[1]); };
  t.odds[pp("11", "0")] = [](const Record& s) {
    return std::exp(8.0 / 3.0 * s.x[0] - 4.0 / 3.0 * s.x[1] - 4.0 / 3.0);
  };
  t.outcome[pp("00", "0")] = [](const Record&) { return 0.75; };
  t.outcome[pp("10", "0")] = [](const Record& s) { return 0.5 * s.x[0] + 1.0; };
  t.outcome[pp("01", "0")] = [](const Record& s) { return 0.5 * s.x[1] + 1.0; };
  t.outcome[pp("11", "0")] = [](const Record& s) { return (s.x[0] + s.x[1]) / 3.0 + 2.0 / 3.0; };
  for (std::uint32_t r = 0; r < 4; ++r) {
    for (std::uint32_t a = 0; a < 2; ++a) t.probabilities[{Pattern(r, 2), Pattern(a, 1)}] = 1.0 / 8.0;
  }
  return t;
}

GroundTruth multiple_truth() {
  GroundTruth t;
  t.kind = DesignKind::multiple;
  t.theta = Eigen::VectorXd::Constant(1, 175.0 / 128.0);
  t.exact = "175/128";
  t.f = Functional::product({0, 1});
  t.odds[pp("00", "00")] = [](const Record&) { return 0.25; };
  t.odds[pp("10", "00")] = [](const Record& s) { return 0.5 * std::exp(0.375 - 0.5 * s.x[0]); };
  t.odds[pp("01", "00")] = [](const Record& s) { return 0.5 * std::exp(0.375 - 0.5 * s.x[1]); };
  t.odds[pp("11", "00")] = [](const Record&) { return 1.0; };
  t.outcome[pp("00", "00")] = [](const Record&) { return 1.5; };
  t.outcome[pp("10", "00")] = [](const Record& s) { return 0.25 + std::pow(0.5 * s.x[0] + 0.5, 2); };
  t.outcome[pp("01", "00")] = [](const Record& s) { return 0.25 + std::pow(0.5 * s.x[1] + 0.5, 2); };
  t.outcome[pp("11", "00")] = [](const Record& s) {
    return 1.0 / 6.0 + std::pow(s.x[0] + s.x[1] + 1.0, 2) / 9.0;
  };

  for (int obs = 0; obs < 2; ++obs) {
    // a observes L coordinate `obs`; the regression targets the other one
    const char* a = obs == 0 ? "10" : "01";
    t.odds[pp("00", a)] = [obs](const Record& s) { return 0.25 * std::exp(0.375 - 0.5 * s.l[obs]); };
    t.odds[pp("10", a)] = [](const Record&) { return 0.5; };
    t.odds[pp("01", a)] = [](const Record&) { return 0.5; };
    t.odds[pp("11", a)] = [](const Record&) { return 1.0; };
    t.outcome[pp("00", a)] = [obs](const Record& s) { return s.l[obs] * (0.5 * s.l[obs] + 0.5); };
    t.outcome[pp("10", a)] = [obs](const Record& s) { return s.l[obs] * (s.x[0] + s.l[obs] + 1.0) / 3.0; };
    t.outcome[pp("01", a)] = [obs](const Record& s) { return s.l[obs] * (s.x[1] + s.l[obs] + 1.0) / 3.0; };
    t.outcome[pp("11", a)] = [obs](const Record& s) {
      return s.l[obs] * (0.25 * (s.x[0] + s.x[1] + s.l[obs]) + 0.25);
    };
  }
  for (std::uint32_t r = 0; r < 4; ++r) {
    for (std::uint32_t a = 0; a < 4; ++a) t.probabilities[{Pattern(r, 2), Pattern(a, 2)}] = 1.0 / 16.0;
  }
  return t;
}

GroundTruth mpm_truth() {
  GroundTruth t;
  t.kind = DesignKind::mpm;
  t.theta = (Eigen::VectorXd(2) << -1.0, 0.5).finished();
  t.exact = "(-1, 1/2)";
  t.spec = ScoreSpec::linear(1, {0});
  for (const char* a : {"00", "01", "10"}) {
    t.odds[pp("0", a)] = [](const Record&) { return 0.5; };
    t.odds[pp("1", a)] = [](const Record& s) { return std::exp(0.5 * s.x[0]); };
  }
  return t;
}

}  // namespace

GroundTruth oracle_value(DesignKind kind) {
  switch (kind) {
    case DesignKind::single: return single_truth();
    case DesignKind::multiple: return multiple_truth();
    case DesignKind::mpm: return mpm_truth();
  }
  throw ArgumentError("unknown design");
}

FitOptions analysis_options(DesignKind kind, Misspecification miss) {
  FitOptions opt;
  const bool bad_odds = miss == Misspecification::odds || miss == Misspecification::both;
  const bool bad_outcome = miss == Misspecification::outcome || miss == Misspecification::both;
  switch (kind) {
    case DesignKind::single:
      if (bad_odds) opt.odds_terms[pp("11", "0")] = {Pattern::parse("00"), Pattern::parse("0"), false};
      if (bad_outcome) opt.outcome_terms[pp("11", "0")] = {Pattern::parse("10"), Pattern::parse("0"), false};
      break;
    case DesignKind::multiple:
      // E[Y3 Y4 | X_r] is quadratic in X_r when neither primary variable is seen
      for (const char* r : {"10", "01", "11"}) {
        opt.outcome_terms[pp(r, "00")] = {Pattern::parse(r), Pattern::parse("00"), true};
      }
      for (const char* a : {"01", "10"}) {
        if (bad_odds) opt.odds_terms[pp("00", a)] = {Pattern::parse("00"), Pattern::parse("00"), false};
        if (bad_outcome) opt.outcome_terms[pp("00", a)] = {Pattern::parse("00"), Pattern::parse("00"), false};
      }
      break;
    case DesignKind::mpm:
      break;
  }
  return opt;
}

// ---------------------------------------------------------------------------
// Oracle verification

bool OracleReport::passed() const { return failures() == 0; }

std::size_t OracleReport::failures() const {
  std::size_t k = 0;
  for (const auto& c : checks) k += c.passed ? 0 : 1;
  return k;
}

namespace {

// mean and standard error of a sample
OracleCheck mean_check(std::string name, const std::vector<double>& v, double expected, double threshold) {
  OracleCheck c;
  c.name = std::move(name);
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  c.estimate = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - c.estimate) * (x - c.estimate);
  c.se = std::sqrt(ss / (n - 1.0) / n);
  c.expected = expected;
  c.passed = c.se > 0 ? std::abs(c.z()) <= threshold : std::abs(c.estimate - expected) <= 1e-12;
  return c;
}

// Test functions for a stratum: the constant plus bin indicators of each
// covariate observed under (r, a).
struct TestFunction {
  std::string label;
  std::function<double(const Record&)> g;
};

std::vector<TestFunction> test_functions(const PatternPair& pair, const std::vector<std::string>& xn,
                                         const std::vector<std::string>& ln) {
  static const double cuts[] = {-1.0, 0.0, 1.0, 2.0};
  std::vector<TestFunction> out{{"1", [](const Record&) { return 1.0; }}};
  auto add = [&](const std::string& name, std::function<double(const Record&)> value) {
    for (int b = 0; b <= 4; ++b) {
      const double lo = b == 0 ? -HUGE_VAL : cuts[b - 1];
      const double hi = b == 4 ? HUGE_VAL : cuts[b];
      std::string label = name + " in (" + (b == 0 ? "-inf" : std::to_string(lo).substr(0, 4)) + ", " +
                          (b == 4 ? "inf" : std::to_string(hi).substr(0, 4)) + "]";
      out.push_back({label, [value, lo, hi](const Record& s) {
                       const double v = value(s);
                       return (v > lo && v <= hi) ? 1.0 : 0.0;
                     }});
    }
  };
  for (int j : pair.r.coordinates()) add(xn[static_cast<std::size_t>(j)], [j](const Record& s) { return s.x[j]; });
  for (int j : pair.a.coordinates()) add(ln[static_cast<std::size_t>(j)], [j](const Record& s) { return s.l[j]; });
  return out;
}

}  // namespace

OracleReport verify_oracles(DesignKind kind, std::size_t n_big, std::uint64_t seed, double threshold) {
  if (n_big < 100000) throw ArgumentError("verify_oracles needs n_big >= 100000");
  OracleReport report;
  report.kind = kind;
  report.n = n_big;
  report.seed = seed;
  report.threshold = threshold;
  const GroundTruth truth = oracle_value(kind);
  const SimDesign design{kind, n_big, seed, 0};
  std::optional<FullSample> full;
  if (kind == DesignKind::mpm) full = generate_mpm_full(design);
  const Dataset ds = full ? full->observed : generate(design);
  const StratumIndex strata = build_strata(ds);
  const auto xn = ds.x_names();
  const auto ln = ds.l_names();
  auto add = [&](OracleCheck c) { report.checks.push_back(std::move(c)); };

  for (const auto& [pair, prob] : truth.probabilities) {
    std::vector<double> v(ds.size(), 0.0);
    for (auto i : strata.strata.count(pair) ? strata.strata.at(pair) : std::vector<std::size_t>{}) v[i] = 1.0;
    add(mean_check("P(R=" + pair.r.to_string() + ", A=" + pair.a.to_string() + ")", v, prob, threshold));
  }

  std::vector<double> fv;
  if (truth.f) fv = complete_values(ds, *truth.f);
  for (const auto& [pair, odds] : truth.odds) {
    for (const auto& tf : test_functions(pair, xn, ln)) {
      std::vector<double> v(ds.size(), 0.0);
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& rec = ds[i];
        // E[1_case h] = E[1_pool O h] for any h; h = g / (1 + O) keeps both
        // sides bounded so the Monte Carlo SE is reliable in the tails
        if (in_case(rec, pair)) v[i] = tf.g(rec) / (1.0 + odds(rec));
        else if (in_pool(rec, pair.r)) v[i] = -tf.g(rec) * odds(rec) / (1.0 + odds(rec));
      }
      add(mean_check("odds " + pair.to_string() + " | g = " + tf.label, v, 0.0, threshold));
    }
    auto m = truth.outcome.find(pair);
    if (m == truth.outcome.end()) continue;
    for (const auto& tf : test_functions(pair, xn, ln)) {
      std::vector<double> v(ds.size(), 0.0);
      for (auto i : strata.pool(pair.r)) v[i] = tf.g(ds[i]) * (fv[i] - m->second(ds[i]));
      add(mean_check("regression " + pair.to_string() + " | g = " + tf.label, v, 0.0, threshold));
    }
  }

  if (truth.f) {
    const double theta = truth.theta[0];
    const auto ipw = estimate_ipw(ds, strata, truth.odds, *truth.f);
    const auto ra = estimate_ra(ds, strata, truth.outcome, *truth.f);
    const auto mr = estimate_mr(ds, strata, truth.odds, truth.outcome, *truth.f);
    for (const auto* est : {&ipw, &ra, &mr}) {
      std::vector<double> h(ds.size());
      for (std::size_t i = 0; i < ds.size(); ++i) h[i] = est->influence[static_cast<Eigen::Index>(i)] + est->theta;
      add(mean_check("theta via " + to_string(est->method) + " at oracle nuisances", h, theta, threshold));
    }
  } else {
    // linear regression of Y3 on Y2 from the complete draws, and the IPW
    // estimating equation at oracle weights
    const auto& y = full->full;
    const Eigen::Index n = y.rows();
    Eigen::MatrixXd z(n, 2);
    z.col(0).setOnes();
    z.col(1) = y.col(1);
    const Eigen::MatrixXd xtx = z.transpose() * z;
    const Eigen::VectorXd beta = xtx.ldlt().solve(z.transpose() * y.col(2));
    const Eigen::VectorXd e = y.col(2) - z * beta;
    const Eigen::MatrixXd bread = xtx.inverse();
    const Eigen::MatrixXd cov = bread * (z.transpose() * e.cwiseAbs2().asDiagonal() * z) * bread;
    const auto wt = compute_weights(ds, strata, truth.odds);
    const auto ipw = solve_weighted_ee(ds, wt.total, *truth.spec);
    for (int j = 0; j < 2; ++j) {
      OracleCheck c;
      c.name = "full-data OLS coefficient " + std::to_string(j);
      c.estimate = beta[j];
      c.expected = truth.theta[j];
      c.se = std::sqrt(cov(j, j));
      c.passed = std::abs(c.z()) <= threshold;
      add(c);
      OracleCheck w;
      w.name = "oracle-weighted IPW coefficient " + std::to_string(j);
      w.estimate = ipw.theta[j];
      w.expected = truth.theta[j];
      w.se = ipw.se[j];
      w.passed = std::abs(w.z()) <= threshold;
      add(w);
    }
  }
  return report;
}

}  // namespace accmv
