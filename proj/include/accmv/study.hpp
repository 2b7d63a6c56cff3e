#ifndef ACCMV_STUDY_HPP
#define ACCMV_STUDY_HPP

#include "accmv/simgen.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace accmv {

/// Summary of one estimator over the replicates of a simulation table.
struct TableRow {
  std::string label;
  double truth = 0.0;
  double bias = 0.0;
  double sample_se = 0.0;  // sd of estimates, n - 1 divisor
  double mean_se = 0.0;    // mean influence / sandwich SE
  double coverage = 0.0;   // share of normal 95% intervals covering the truth
  int replicates = 0;      // successful replicates
  int failures = 0;
  std::vector<double> estimates;
  std::vector<double> ses;
};

struct TableResult {
  int table = 1;
  std::size_t n = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::vector<TableRow> rows;

  [[nodiscard]] const TableRow& row(const std::string& label) const;
};

struct TableOptions {
  int table = 1;
  int replicates = 1000;
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

/// Replicate k uses simulation stream k under `seed`, so results do not
/// depend on the thread count.
TableResult run_table(const TableOptions& options);

/// Row labels in output order.
[[nodiscard]] std::vector<std::string> table_labels(int table);

void write_table_csv(std::ostream& out, const TableResult& result);
/// Long format: replicate,row,estimate,se (failed replicates omitted).
void write_replicates_csv(std::ostream& out, const TableResult& result);

}  // namespace accmv

#endif  // ACCMV_STUDY_HPP
