#ifndef ACCMV_TESTS_FIXTURES_HPP
#define ACCMV_TESTS_FIXTURES_HPP

#include "accmv/data.hpp"
#include "accmv/estimators.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace accmv::testing {

inline Record make_record(std::vector<double> x, std::vector<double> l) {
  return Record(Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                Eigen::Map<Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size())));
}

inline double cell(const Pattern& r, int j, double v) { return r.observed(j) ? v : kMissing; }

// One record for every (A, R) in {0,1} x {00,01,10,11}; p = 2, d = 1.
inline Dataset eight_record_fixture() {
  std::vector<Record> recs;
  double v = 1.0;
  for (int a = 0; a < 2; ++a) {
    for (std::uint32_t rb = 0; rb < 4; ++rb) {
      const Pattern r(rb, 2);
      recs.push_back(make_record({cell(r, 0, v), cell(r, 1, v + 0.5)}, {a ? v * 2 : kMissing}));
      v += 1.0;
    }
  }
  return Dataset(std::move(recs), {"X1", "X2"}, {"L1"});
}

// Complete records with L ~ N(0, 1) shifted per coordinate.
inline Dataset complete_gaussian(std::size_t n, int p, int d, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> z;
  std::vector<Record> recs;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x(p), l(d);
    for (int j = 0; j < p; ++j) x[j] = z(eng);
    for (int j = 0; j < d; ++j) l[j] = 1.0 + j + 0.5 * x[0] + z(eng);
    recs.emplace_back(x, l);
  }
  std::vector<std::string> xn, ln;
  for (int j = 0; j < p; ++j) xn.push_back("X" + std::to_string(j + 1));
  for (int j = 0; j < d; ++j) ln.push_back("L" + std::to_string(j + 1));
  return Dataset(std::move(recs), xn, ln);
}

// ---------------------------------------------------------------------------
// Fully discrete toy: X and L binary with p = d = 2. Every stratum (r, a)
// holds every observable cell (x_r, l_a) a hand-chosen number of times, so
// the empirical distribution is the population and every quantity below is
// an exact finite sum.

struct BinaryToy {
  Dataset data;
  Functional f;
  PairFunctions odds;     // exact odds from cell counts
  PairFunctions outcome;  // exact pool regressions from cell counts
  double direct = 0.0;    // identified E[f(L)] by direct summation over p(l)
  std::map<std::uint32_t, double> law;  // identified p(l), key = l bits
};

// Values at the observed coordinates of `p`, packed as bits.
inline std::uint32_t observed_key(const Eigen::VectorXd& v, const Pattern& p) {
  std::uint32_t key = 0;
  for (int j = 0; j < p.length(); ++j) {
    key <<= 1;
    if (p.observed(j)) key |= v[j] > 0.5 ? 1u : 0u;
  }
  return key;
}

inline std::uint64_t cell_key(const Record& rec, const Pattern& r, const Pattern& a) {
  return (static_cast<std::uint64_t>(observed_key(rec.x, r)) << 8) | observed_key(rec.l, a);
}

inline bool toy_in_pool(const Record& rec, const Pattern& r) {
  return rec.a.is_complete() && (rec.r.bits() & r.bits()) == r.bits();
}

inline BinaryToy binary_toy() {
  const int p = 2, d = 2;
  std::vector<Record> recs;
  for (std::uint32_t rb = 0; rb < 4; ++rb) {
    for (std::uint32_t ab = 0; ab < 4; ++ab) {
      const Pattern r(rb, p), a(ab, d);
      for (std::uint32_t xv = 0; xv < 4; ++xv) {
        for (std::uint32_t lv = 0; lv < 4; ++lv) {
          // skip duplicate cells that differ only in unobserved coordinates
          if ((xv & ~rb) || (lv & ~ab)) continue;
          const int count = 1 + static_cast<int>((7 * rb + 5 * ab + 3 * xv + 11 * lv + rb * lv) % 4);
          for (int k = 0; k < count; ++k) {
            recs.push_back(make_record({cell(r, 0, (xv >> 1) & 1), cell(r, 1, xv & 1)},
                                       {cell(a, 0, (lv >> 1) & 1), cell(a, 1, lv & 1)}));
          }
        }
      }
    }
  }
  BinaryToy toy{Dataset(std::move(recs), {"X1", "X2"}, {"L1", "L2"}),
                Functional::custom([](const Eigen::VectorXd& l) { return 1.5 * l[0] - l[1] + 2.0 * l[0] * l[1]; },
                                   "toy"),
                {}, {}, 0.0, {}};
  const auto& rs = toy.data.records();
  const double n = static_cast<double>(rs.size());

  for (std::uint32_t rb = 0; rb < 4; ++rb) {
    for (std::uint32_t ab = 0; ab < 3; ++ab) {
      const Pattern r(rb, p), a(ab, d);
      std::map<std::uint64_t, double> n_case, n_pool, f_pool;
      for (const auto& rec : rs) {
        if (rec.r == r && rec.a == a) n_case[cell_key(rec, r, a)] += 1.0;
        if (toy_in_pool(rec, r)) {
          n_pool[cell_key(rec, r, a)] += 1.0;
          f_pool[cell_key(rec, r, a)] += toy.f.evaluate(rec.l);
        }
      }
      const PatternPair pair{r, a};
      toy.odds[pair] = [=](const Record& rec) {
        const auto k = cell_key(rec, r, a);
        const auto it = n_case.find(k);
        return it == n_case.end() ? 0.0 : it->second / n_pool.at(k);
      };
      toy.outcome[pair] = [=](const Record& rec) {
        const auto k = cell_key(rec, r, a);
        return f_pool.at(k) / n_pool.at(k);
      };

      // p(l) mass of this stratum: each case cell spread over the pool's
      // conditional law of the missing coordinates
      for (const auto& [k, c] : n_case) {
        std::map<std::uint32_t, double> completions;
        double total = 0.0;
        for (const auto& rec : rs) {
          if (!toy_in_pool(rec, r) || cell_key(rec, r, a) != k) continue;
          completions[observed_key(rec.l, Pattern::complete(d))] += 1.0;
          total += 1.0;
        }
        for (const auto& [lk, m] : completions) toy.law[lk] += c / n * m / total;
      }
    }
  }
  for (const auto& rec : rs) {
    if (rec.a.is_complete()) toy.law[observed_key(rec.l, rec.a)] += 1.0 / n;
  }
  for (const auto& [lk, mass] : toy.law) {
    Eigen::VectorXd l(2);
    l << static_cast<double>((lk >> 1) & 1), static_cast<double>(lk & 1);
    toy.direct += mass * toy.f.evaluate(l);
  }
  return toy;
}

}  // namespace accmv::testing

#endif  // ACCMV_TESTS_FIXTURES_HPP
