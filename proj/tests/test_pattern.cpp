#include "accmv/errors.hpp"
#include "accmv/pattern.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace accmv;

namespace {

Pattern P(const char* s) { return Pattern::parse(s); }

std::vector<std::string> strings(const std::vector<Pattern>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.to_string());
  return out;
}

}  // namespace

TEST_CASE("string form is most significant coordinate first") {
  CHECK(P("1010").bits() == 10u);
  CHECK(P("1010").observed(0));
  CHECK_FALSE(P("1010").observed(1));
  CHECK(P("1010").coordinates() == std::vector<int>{0, 2});
  CHECK(P("0110").to_string() == "0110");
  CHECK(P("111").is_complete());
  CHECK(P("111") == Pattern::complete(3));
  CHECK(Pattern::none(4).to_string() == "0000");
  CHECK(P("1010").flipped().to_string() == "0101");
  CHECK_THROWS_AS(P("10x"), ArgumentError);
  CHECK_THROWS_AS(P(""), ArgumentError);
  CHECK_THROWS_AS(Pattern(4u, 2), ArgumentError);
}

TEST_CASE("pair round trip") {
  const auto pair = PatternPair::parse("10|01");
  CHECK(pair.r == P("10"));
  CHECK(pair.a == P("01"));
  CHECK(pair.to_string() == "10|01");
  CHECK_THROWS_AS(PatternPair::parse("1001"), ArgumentError);
}

TEST_CASE("dominates examples") {
  CHECK(dominates(P("1010"), P("1000")));
  CHECK_FALSE(dominates(P("1010"), P("0100")));
  CHECK(dominates(P("0110"), P("0110")));
  CHECK_THROWS_AS((void)dominates(P("10"), P("100")), ArgumentError);
}

TEST_CASE("dominated_set examples") {
  CHECK(strings(dominated_set(P("1010"))) == std::vector<std::string>{"0000", "0010", "1000", "1010"});
  CHECK(strings(dominated_set(P("0000"))) == std::vector<std::string>{"0000"});
  CHECK(strings(dominated_set(P("11"))) == std::vector<std::string>{"00", "01", "10", "11"});
}

TEST_CASE("partial order laws hold exhaustively up to 6 bits") {
  for (int len = 1; len <= 6; ++len) {
    const std::uint32_t size = 1u << len;
    for (std::uint32_t a = 0; a < size; ++a) {
      const Pattern pa(a, len);
      CHECK(dominates(pa, pa));
      const auto set = dominated_set(pa);
      CHECK(set.size() == (std::size_t{1} << pa.count()));
      for (std::size_t k = 1; k < set.size(); ++k) CHECK(set[k - 1].bits() < set[k].bits());
      std::size_t members = 0;
      for (std::uint32_t b = 0; b < size; ++b) {
        const Pattern pb(b, len);
        const bool in_set = std::find(set.begin(), set.end(), pb) != set.end();
        // no pattern outside the set is dominated, and everything inside is
        CHECK(in_set == dominates(pa, pb));
        members += in_set;
        if (dominates(pa, pb) && dominates(pb, pa)) CHECK(a == b);
        if (len <= 4) {
          for (std::uint32_t c = 0; c < size; ++c) {
            const Pattern pc(c, len);
            if (dominates(pa, pb) && dominates(pb, pc)) CHECK(dominates(pa, pc));
          }
        }
      }
      CHECK(members == set.size());
    }
  }
}

TEST_CASE("partial order laws on random patterns up to 8 bits") {
  std::mt19937_64 eng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const int len = 1 + static_cast<int>(eng() % 8);
    const std::uint32_t mask = (1u << len) - 1;
    const Pattern a(static_cast<std::uint32_t>(eng()) & mask, len);
    const Pattern b(static_cast<std::uint32_t>(eng()) & mask, len);
    const Pattern c(static_cast<std::uint32_t>(eng()) & mask, len);
    CHECK(dominates(a, a));
    if (dominates(a, b) && dominates(b, a)) CHECK(a == b);
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
    // the meet is dominated by both
    const Pattern meet(a.bits() & b.bits(), len);
    CHECK(dominates(a, meet));
    CHECK(dominates(b, meet));
  }
}

TEST_CASE("extract keeps observed coordinates in order") {
  Eigen::VectorXd v(4);
  v << 1.0, std::nan(""), 3.0, std::nan("");
  const auto e = extract(v, P("1010"));
  REQUIRE(e.size() == 2);
  CHECK(e[0] == 1.0);
  CHECK(e[1] == 3.0);

  Eigen::VectorXd w(2);
  w << 4.0, 5.0;
  CHECK(extract(w, P("00")).size() == 0);

  Eigen::VectorXd u(3);
  u << 1.0, 2.0, 3.0;
  CHECK(extract(u, Pattern::complete(3)) == u);

  CHECK_THROWS_AS((void)extract(v, P("1100")), PreconditionError);
  CHECK_THROWS_AS((void)extract(v, P("10")), ArgumentError);
}

TEST_CASE("observed_in reads the NaN mask") {
  Eigen::VectorXd v(3);
  v << std::nan(""), 2.0, 0.0;
  CHECK(Pattern::observed_in(v).to_string() == "011");
}
