#include "accmv/errors.hpp"
#include "accmv/estimators.hpp"
#include "accmv/simgen.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace accmv;

namespace {

double sum_of_parts(const ThetaEstimate& e) {
  double s = e.complete_term;
  for (const auto& [pair, v] : e.strata) s += v;
  return s;
}

const Dataset& multiple_medium() {
  static const Dataset ds = generate({DesignKind::multiple, 20000, 9, 0});
  return ds;
}

}  // namespace

TEST_CASE("binary toy: direct summation equals IPW, RA and MR at exact nuisances") {
  const auto toy = testing::binary_toy();
  const auto strata = build_strata(toy.data);
  double mass = 0.0;
  for (const auto& [l, m] : toy.law) mass += m;
  CHECK(std::abs(mass - 1.0) <= 1e-12);

  const auto ipw = estimate_ipw(toy.data, strata, toy.odds, toy.f);
  const auto ra = estimate_ra(toy.data, strata, toy.outcome, toy.f);
  const auto mr = estimate_mr(toy.data, strata, toy.odds, toy.outcome, toy.f);
  CHECK(std::abs(ipw.theta - toy.direct) <= 1e-12);
  CHECK(std::abs(ra.theta - toy.direct) <= 1e-12);
  CHECK(std::abs(mr.theta - toy.direct) <= 1e-12);

  // per-stratum limits agree as well
  for (const auto& [pair, v] : ra.strata) CHECK(std::abs(ipw.strata.at(pair) - v) <= 1e-12);

  // weights integrate to one exactly
  const auto w = compute_weights(toy.data, strata, toy.odds);
  CHECK(std::abs(w.mass - 1.0) <= 1e-12);
}

TEST_CASE("binary toy: MR influence is the efficient influence function") {
  const auto toy = testing::binary_toy();
  const auto strata = build_strata(toy.data);
  const auto mr = estimate_mr(toy.data, strata, toy.odds, toy.outcome, toy.f);
  const auto& rs = toy.data.records();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& rec = rs[i];
    double eif = -toy.direct;
    if (rec.a.is_complete()) {
      const double fv = toy.f.evaluate(rec.l);
      eif += fv;
      for (const auto& [pair, o] : toy.odds) {
        if (testing::toy_in_pool(rec, pair.r)) eif += (fv - toy.outcome.at(pair)(rec)) * o(rec);
      }
    } else {
      eif += toy.outcome.at({rec.r, rec.a})(rec);
    }
    CHECK(std::abs(mr.influence[static_cast<Eigen::Index>(i)] - eif) <= 1e-12);
  }
}

TEST_CASE("complete data reduce every method to the sample mean") {
  const auto ds = testing::complete_gaussian(500, 2, 1, 4);
  const auto strata = build_strata(ds);
  const auto f = Functional::identity(0);
  double mean = 0.0;
  for (const auto& r : ds.records()) mean += r.l[0];
  mean /= static_cast<double>(ds.size());
  CHECK(estimate_ipw(ds, strata, {}, f).theta == doctest::Approx(mean).epsilon(1e-14));
  CHECK(estimate_ra(ds, strata, {}, f).theta == doctest::Approx(mean).epsilon(1e-14));
  CHECK(estimate_mr(ds, strata, {}, {}, f).theta == doctest::Approx(mean).epsilon(1e-14));
  CHECK(estimate_complete_case(ds, f).theta == doctest::Approx(mean).epsilon(1e-14));
  const auto w = compute_weights(ds, strata, {});
  CHECK(w.min == 1.0);
  CHECK(w.max == 1.0);
}

TEST_CASE("MR equals RA plus the augmentation term") {
  const auto& ds = multiple_medium();
  const auto strata = build_strata(ds);
  const auto truth = oracle_value(DesignKind::multiple);
  const auto opt = analysis_options(DesignKind::multiple, Misspecification::none);
  const auto odds = odds_functions(fit_all_odds(ds, strata, opt));
  const auto outs = outcome_functions(fit_all_outcomes(ds, strata, *truth.f, opt));
  const auto ra = estimate_ra(ds, strata, outs, *truth.f);
  const auto mr = estimate_mr(ds, strata, odds, outs, *truth.f);
  double aug = 0.0;
  for (const auto& pair : strata.incomplete_pairs()) {
    for (auto i : strata.pool(pair.r)) {
      const auto& rec = ds[i];
      aug += (truth.f->evaluate(rec.l) - outs.at(pair)(rec)) * odds.at(pair)(rec);
    }
  }
  aug /= static_cast<double>(ds.size());
  CHECK(std::abs(mr.theta - (ra.theta + aug)) <= 1e-12 * std::max(1.0, std::abs(mr.theta)));
  CHECK(std::abs(sum_of_parts(mr) - mr.theta) <= 1e-12);
  CHECK(std::abs(sum_of_parts(ra) - ra.theta) <= 1e-12);
}

TEST_CASE("weights integrate to about one under ACCMV") {
  const auto& ds = multiple_medium();
  const auto strata = build_strata(ds);
  const auto opt = analysis_options(DesignKind::multiple, Misspecification::none);
  const auto w = compute_weights(ds, strata, odds_functions(fit_all_odds(ds, strata, opt)));
  CHECK(std::abs(w.mass - 1.0) <= 0.02);
  CHECK(w.min >= 1.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds[i].a.is_complete()) CHECK(w.total[i] == 0.0);
  }
  CHECK(w.effective_sample_size > 0.0);
  CHECK(w.effective_sample_size <= static_cast<double>(ds.size()));
}

TEST_CASE("estimates do not depend on record order") {
  const auto ds = generate({DesignKind::multiple, 4000, 21, 0});
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(8));
  const auto shuffled = ds.subset(perm);
  const auto truth = oracle_value(DesignKind::multiple);
  const auto opt = analysis_options(DesignKind::multiple, Misspecification::none);

  auto all = [&](const Dataset& d) {
    const auto strata = build_strata(d);
    const auto odds = odds_functions(fit_all_odds(d, strata, opt));
    const auto outs = outcome_functions(fit_all_outcomes(d, strata, *truth.f, opt));
    return std::array<double, 4>{estimate_ipw(d, strata, odds, *truth.f).theta,
                                 estimate_ra(d, strata, outs, *truth.f).theta,
                                 estimate_mr(d, strata, odds, outs, *truth.f).theta,
                                 estimate_complete_case(d, *truth.f).theta};
  };
  const auto a = all(ds);
  const auto b = all(shuffled);
  for (int k = 0; k < 4; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-10));
}

TEST_CASE("self-normalized IPW divides by the weight total") {
  const auto toy = testing::binary_toy();
  const auto strata = build_strata(toy.data);
  const auto plain = estimate_ipw(toy.data, strata, toy.odds, toy.f);
  const auto norm = estimate_ipw(toy.data, strata, toy.odds, toy.f, true);
  const auto w = compute_weights(toy.data, strata, toy.odds);
  CHECK(norm.self_normalized);
  CHECK(norm.theta == doctest::Approx(plain.theta / w.mass).epsilon(1e-13));
}

TEST_CASE("estimator guards") {
  const auto ds = testing::eight_record_fixture();
  const auto strata = build_strata(ds);
  CHECK_THROWS_AS(estimate_ipw(ds, strata, {}, Functional::identity(0)), ConfigError);
  CHECK_THROWS_AS(estimate_ra(ds, strata, {}, Functional::identity(0)), ConfigError);
  CHECK(parse_method("cc") == Method::complete_case);
  CHECK(parse_method("mr") == Method::mr);
  CHECK_THROWS_AS((void)parse_method("gee"), ConfigError);

  std::vector<Record> recs{testing::make_record(std::vector<double>(8, 1.0), std::vector<double>(5, 1.0))};
  std::vector<std::string> xn(8, "x"), ln(5, "l");
  for (int j = 0; j < 8; ++j) xn[j] += std::to_string(j);
  for (int j = 0; j < 5; ++j) ln[j] += std::to_string(j);
  const Dataset wide(recs, xn, ln);
  CHECK_THROWS_AS(check_dimensions(wide), ConfigError);

  std::vector<Record> none{testing::make_record({1.0}, {kMissing})};
  const Dataset empty_cc(none, {"X1"}, {"L1"});
  CHECK_THROWS_AS(estimate_complete_case(empty_cc, Functional::identity(0)), Error);
}
