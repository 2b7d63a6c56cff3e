#include "accmv/errors.hpp"
#include "accmv/sensitivity.hpp"
#include "accmv/simgen.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

using namespace accmv;

namespace {

const Dataset& single_fixture() {
  static const Dataset ds = generate({DesignKind::single, 3000, 14, 0});
  return ds;
}

}  // namespace

TEST_CASE("zero tilt reproduces self-normalized IPW") {
  const auto& ds = single_fixture();
  const auto strata = build_strata(ds);
  const auto odds = odds_functions(fit_all_odds(ds, strata));
  const auto f = Functional::identity(0);
  const double ipw = estimate_ipw(ds, strata, odds, f, true).theta;
  CHECK(std::abs(tilted_estimate(ds, strata, odds, f, TiltSpec::zero(1)) - ipw) <= 1e-12);
  // a zero delta ignores the center
  CHECK(std::abs(tilted_estimate(ds, strata, odds, f, TiltSpec::shared(1, 0.0, 7.0)) - ipw) <= 1e-12);

  BootstrapOptions boot;
  boot.replicates = 0;
  const auto curve = sweep(ds, f, {}, TiltSpec::shared(1, 1.0), {0.0}, boot);
  REQUIRE(curve.points.size() == 1);
  CHECK(std::abs(curve.points[0].estimate - ipw) <= 1e-12);
}

TEST_CASE("two complete records by hand") {
  // p = d = 1: records (0, v1) and (1, v2) are the pool of the single
  // incomplete record's stratum (1|0)
  const double v1 = 1.5, v2 = -0.5, o1 = 0.3, o2 = 2.0, delta = 0.7, c = 0.25;
  std::vector<Record> recs{testing::make_record({0.0}, {v1}), testing::make_record({1.0}, {v2}),
                           testing::make_record({0.5}, {kMissing})};
  const Dataset ds(recs, {"X1"}, {"L1"});
  const auto strata = build_strata(ds);
  PairFunctions odds;
  odds[PatternPair::parse("1|0")] = [&](const Record& r) { return r.x[0] == 0.0 ? o1 : o2; };
  const double w1 = 1.0 + o1 * std::exp(delta * (v1 - c));
  const double w2 = 1.0 + o2 * std::exp(delta * (v2 - c));
  const double expected = (w1 * v1 + w2 * v2) / (w1 + w2);
  const double got = tilted_estimate(ds, strata, odds, Functional::identity(0), TiltSpec::shared(1, delta, c));
  CHECK(std::abs(got - expected) <= 1e-12);
}

TEST_CASE("tilt touches only missing coordinates") {
  TiltSpec spec{Eigen::Vector2d(0.5, -2.0), Eigen::Vector2d(1.0, 3.0)};
  const auto rec = testing::make_record({0.0}, {2.0, 4.0});
  CHECK(tilt_factor(PatternPair::parse("1|01"), rec, spec) == doctest::Approx(std::exp(0.5 * (2.0 - 1.0))));
  CHECK(tilt_factor(PatternPair::parse("1|10"), rec, spec) == doctest::Approx(std::exp(-2.0 * (4.0 - 3.0))));
  CHECK(tilt_factor(PatternPair::parse("1|00"), rec, spec) ==
        doctest::Approx(std::exp(0.5 * 1.0 - 2.0 * 1.0)));
  CHECK_THROWS_AS((void)tilt_factor(PatternPair::parse("1|11"), rec, spec), PreconditionError);
}

TEST_CASE("tilted log-odds adds the tilt to the fitted linear predictor") {
  const auto& ds = single_fixture();
  const auto strata = build_strata(ds);
  const auto models = fit_all_odds(ds, strata);
  const auto spec = TiltSpec::shared(1, 0.4, 0.5);
  for (const auto& [pair, model] : models) {
    for (auto i : strata.pool(pair.r)) {
      const auto& rec = ds[i];
      const double expected = model.alpha.dot(model.terms.design(rec)) + 0.4 * (rec.l[0] - 0.5);
      CHECK(tilted_log_odds(model, rec, spec) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("curve is monotone when larger L gains weight") {
  const auto& ds = single_fixture();
  BootstrapOptions boot;
  boot.replicates = 0;
  std::vector<double> grid;
  for (int k = -5; k <= 5; ++k) grid.push_back(0.2 * k);
  const auto curve = sweep(ds, Functional::identity(0), {}, TiltSpec::shared(1, 1.0), grid, boot);
  REQUIRE(curve.points.size() == grid.size());
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(curve.points[k].estimate > curve.points[k - 1].estimate);
}

TEST_CASE("sweep bootstrap, symmetric grid and CSV round trip") {
  const auto& ds = single_fixture();
  const auto f = Functional::identity(0);
  BootstrapOptions boot;
  boot.replicates = 40;
  boot.seed = 5;
  const auto curve = sweep(ds, f, {}, TiltSpec::shared(1, 1.0), {-0.5, 0.0, 0.5}, boot);
  REQUIRE(curve.points.size() == 3);
  const auto strata = build_strata(ds);
  const double ipw = estimate_ipw(ds, strata, odds_functions(fit_all_odds(ds, strata)), f, true).theta;
  CHECK(std::abs(curve.points[1].estimate - ipw) <= 1e-12);
  for (const auto& p : curve.points) {
    CHECK(p.ci_lo <= p.estimate);
    CHECK(p.estimate <= p.ci_hi);
    CHECK(p.se > 0.0);
  }
  CHECK(sweep(ds, f, {}, TiltSpec::shared(1, 1.0), {-0.5, 0.0, 0.5}, boot).points[2].ci_hi == curve.points[2].ci_hi);

  std::ostringstream out;
  write_curve_csv(out, curve);
  CHECK(out.str().rfind("delta,estimate,ci_lo,ci_hi\n", 0) == 0);
  std::istringstream in(out.str());
  const auto back = read_curve_csv(in);
  REQUIRE(back.points.size() == curve.points.size());
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    CHECK(std::memcmp(&back.points[k].multiplier, &curve.points[k].multiplier, sizeof(double)) == 0);
    CHECK(std::memcmp(&back.points[k].estimate, &curve.points[k].estimate, sizeof(double)) == 0);
    CHECK(std::memcmp(&back.points[k].ci_lo, &curve.points[k].ci_lo, sizeof(double)) == 0);
    CHECK(std::memcmp(&back.points[k].ci_hi, &curve.points[k].ci_hi, sizeof(double)) == 0);
  }
}

TEST_CASE("no complete records means nothing to normalize by") {
  std::vector<Record> recs{testing::make_record({1.0}, {kMissing}), testing::make_record({2.0}, {kMissing})};
  const Dataset ds(recs, {"X1"}, {"L1"});
  const auto strata = build_strata(ds);
  PairFunctions odds;
  odds[PatternPair::parse("1|0")] = [](const Record&) { return 1.0; };
  CHECK_THROWS_AS(tilted_estimate(ds, strata, odds, Functional::identity(0), TiltSpec::zero(1)),
                  DegenerateNormalizationError);
  CHECK_THROWS_AS(sweep(testing::eight_record_fixture(), Functional::identity(0), {}, TiltSpec::zero(1), {}, {}),
                  ArgumentError);
}
