#include "accmv/data.hpp"
#include "accmv/errors.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cstring>
#include <sstream>

using namespace accmv;

namespace {

Dataset parse(const std::string& text, std::vector<std::string> x, std::vector<std::string> l,
              std::vector<std::string> missing = {"", "NA"}) {
  std::istringstream in(text);
  return read_csv(in, {std::move(x), std::move(l), std::move(missing)});
}

bool same_bits(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST_CASE("csv rows derive masks per cell") {
  const auto ds = parse("X1,X2,L1\n1.2,,3.4\n", {"X1", "X2"}, {"L1"});
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].x[0] == 1.2);
  CHECK(std::isnan(ds[0].x[1]));
  CHECK(ds[0].l[0] == 3.4);
  CHECK(ds[0].r.to_string() == "10");
  CHECK(ds[0].a.to_string() == "1");
}

TEST_CASE("all-missing rows are kept") {
  const auto ds = parse("X1,X2,L1,L2\n,,,\n1,2,3,4\n", {"X1", "X2"}, {"L1", "L2"});
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].r.to_string() == "00");
  CHECK(ds[0].a.to_string() == "00");
}

TEST_CASE("missing tokens") {
  const auto a = parse("X1,L1\nNA,2\n", {"X1"}, {"L1"});
  const auto b = parse("X1,L1\n,2\n", {"X1"}, {"L1"});
  CHECK(a[0].r == b[0].r);
  const auto c = parse("X1,L1\n.,2\n", {"X1"}, {"L1"}, {"", "NA", "."});
  CHECK(c[0].r.to_string() == "0");
  CHECK_THROWS_AS(parse("X1,L1\n.,2\n", {"X1"}, {"L1"}), ParseError);
}

TEST_CASE("columns are picked by name and extra columns ignored") {
  const auto ds = parse("id,L1,X1\n7,2.5,1\n", {"X1"}, {"L1"});
  CHECK(ds[0].x[0] == 1.0);
  CHECK(ds[0].l[0] == 2.5);
  CHECK(ds.x_names() == std::vector<std::string>{"X1"});
}

TEST_CASE("csv errors") {
  try {
    parse("X1,L1\n1,2\n3,abc\n", {"X1"}, {"L1"});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row == 3);
    CHECK(e.column == 2);
  }
  CHECK_THROWS_AS(parse("X1,L1\n1,2\n", {"X9"}, {"L1"}), SchemaError);
  CHECK_THROWS_AS(parse("X1,L1\n1,inf\n", {"X1"}, {"L1"}), ParseError);
  CHECK_THROWS_AS(parse("X1,L1\n1\n", {"X1"}, {"L1"}), ParseError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {{"X1"}, {"L1"}, {}}), SchemaError);
}

TEST_CASE("csv round trip is bit exact") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::vector<Record> recs;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x{u(eng), i % 3 ? u(eng) * 1e-200 : kMissing};
    std::vector<double> l{i % 5 ? 0.1 + 0.2 * i : kMissing, u(eng)};
    recs.push_back(testing::make_record(x, l));
  }
  const Dataset ds(std::move(recs), {"X1", "X2"}, {"L1", "L2"});
  std::ostringstream out;
  write_csv(out, ds);
  const auto back = parse(out.str(), {"X1", "X2"}, {"L1", "L2"});
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].r == ds[i].r);
    CHECK(back[i].a == ds[i].a);
    for (int j = 0; j < 2; ++j) {
      CHECK(same_bits(back[i].x[j], ds[i].x[j]));
      CHECK(same_bits(back[i].l[j], ds[i].l[j]));
    }
  }
}

TEST_CASE("eight-record fixture strata") {
  const auto ds = testing::eight_record_fixture();
  const auto idx = build_strata(ds);
  CHECK(idx.strata.size() == 8);
  std::size_t total = 0;
  for (const auto& [pair, rows] : idx.strata) {
    CHECK(rows.size() == 1);
    total += rows.size();
  }
  CHECK(total == ds.size());
  CHECK(idx.pool(Pattern::parse("00")).size() == 4);
  CHECK(idx.pool(Pattern::parse("10")).size() == 2);
  CHECK(idx.pool(Pattern::parse("01")).size() == 2);
  CHECK(idx.pool(Pattern::parse("11")).size() == 1);
  CHECK(idx.incomplete_pairs().size() == 4);
  for (auto i : idx.pool(Pattern::parse("00"))) CHECK(ds[i].a.is_complete());
}

TEST_CASE("complete data form one stratum") {
  const auto ds = testing::complete_gaussian(50, 2, 2, 1);
  const auto idx = build_strata(ds);
  REQUIRE(idx.strata.size() == 1);
  CHECK(idx.strata.begin()->first.to_string() == "11|11");
  CHECK(idx.incomplete_pairs().empty());
}

TEST_CASE("stratum without complete cases has an empty pool") {
  std::vector<Record> recs{testing::make_record({1.0}, {kMissing}), testing::make_record({2.0}, {kMissing})};
  const Dataset ds(std::move(recs), {"X1"}, {"L1"});
  const auto idx = build_strata(ds);
  CHECK(idx.pool(Pattern::parse("1")).empty());
  CHECK(idx.stratum_size(PatternPair::parse("1|0")) == 2);
}

TEST_CASE("functionals") {
  Eigen::VectorXd l(2);
  l << 6.5, 6.9;
  CHECK(Functional::threshold({0, 1}, {7.0, 7.0}).evaluate(l) == 1.0);
  l << 6.5, 7.1;
  CHECK(Functional::threshold({0, 1}, {7.0, 7.0}).evaluate(l) == 0.0);
  l << 6.0, 8.0;
  CHECK(Functional::average({0, 1}).evaluate(l) == 7.0);
  l << 2.0, 3.0;
  CHECK(Functional::product({0, 1}).evaluate(l) == 6.0);
  CHECK(Functional::identity(1).evaluate(l) == 3.0);
  l << 2.0, kMissing;
  CHECK_THROWS_AS((void)Functional::identity(0).evaluate(l), PreconditionError);
  l << 1.0, 0.0;
  const auto bad = Functional::custom([](const Eigen::VectorXd& v) { return v[0] / v[1]; }, "ratio");
  CHECK_THROWS_AS((void)bad.evaluate(l), PreconditionError);
  CHECK_THROWS_AS((void)Functional::threshold({0}, {1.0 / 0.0}), ArgumentError);
  CHECK(Functional::product({0, 1}).describe({"Y3", "Y4"}).find("Y3") != std::string::npos);
}
