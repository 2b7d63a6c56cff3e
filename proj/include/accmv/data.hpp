#ifndef ACCMV_DATA_HPP
#define ACCMV_DATA_HPP

#include "accmv/pattern.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace accmv {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One subject: auxiliary vector x (length p) and primary vector l
/// (length d), NaN marking a missing entry.
struct Record {
  Record() = default;
  Record(Eigen::VectorXd x, Eigen::VectorXd l);

  Eigen::VectorXd x;
  Eigen::VectorXd l;
  Pattern r;  // observed entries of x
  Pattern a;  // observed entries of l
};

class Dataset {
 public:
  Dataset(std::vector<Record> records, std::vector<std::string> x_names,
          std::vector<std::string> l_names);

  [[nodiscard]] const std::vector<Record>& records() const noexcept { return records_; }
  [[nodiscard]] const Record& operator[](std::size_t i) const { return records_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
  [[nodiscard]] int p() const noexcept { return static_cast<int>(x_names_.size()); }
  [[nodiscard]] int d() const noexcept { return static_cast<int>(l_names_.size()); }
  [[nodiscard]] const std::vector<std::string>& x_names() const noexcept { return x_names_; }
  [[nodiscard]] const std::vector<std::string>& l_names() const noexcept { return l_names_; }

  /// Same columns, records picked by index (repeats allowed).
  [[nodiscard]] Dataset subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Record> records_;
  std::vector<std::string> x_names_;
  std::vector<std::string> l_names_;
};

struct CsvSchema {
  std::vector<std::string> x_columns;
  std::vector<std::string> l_columns;
  std::vector<std::string> missing_tokens{"", "NA"};
};

Dataset read_csv(std::istream& in, const CsvSchema& schema);
Dataset load_csv(const std::string& path, const CsvSchema& schema);
/// Header is x columns then l columns; missing entries are written empty and
/// values in shortest round-trip form.
void write_csv(std::ostream& out, const Dataset& ds);
void save_csv(const std::string& path, const Dataset& ds);

/// Target map f(L) whose mean is estimated.
class Functional {
 public:
  enum class Kind { identity, average, product, threshold, custom };

  static Functional identity(int coord);
  static Functional average(std::vector<int> coords);
  static Functional product(std::vector<int> coords);
  /// I(l[c] <= t for every listed coordinate).
  static Functional threshold(std::vector<int> coords, std::vector<double> thresholds);
  static Functional custom(std::function<double(const Eigen::VectorXd&)> fn, std::string name);

  /// Requires every coordinate of l observed; rejects non-finite results.
  [[nodiscard]] double evaluate(const Eigen::Ref<const Eigen::VectorXd>& l) const;

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<int>& coords() const noexcept { return coords_; }
  [[nodiscard]] const std::vector<double>& thresholds() const noexcept { return thresholds_; }
  [[nodiscard]] std::string describe(const std::vector<std::string>& l_names = {}) const;

 private:
  Kind kind_ = Kind::identity;
  std::vector<int> coords_;
  std::vector<double> thresholds_;
  std::function<double(const Eigen::VectorXd&)> custom_;
  std::string name_;
};

/// Record indices per (R, A) stratum and per available-complete-case pool
/// {R >= r, A = 1_d}. Map order is the canonical stratum order.
struct StratumIndex {
  std::map<PatternPair, std::vector<std::size_t>> strata;
  std::map<Pattern, std::vector<std::size_t>> pools;

  /// Strata with a != 1_d, in canonical order.
  [[nodiscard]] std::vector<PatternPair> incomplete_pairs() const;
  [[nodiscard]] const std::vector<std::size_t>& pool(const Pattern& r) const;
  [[nodiscard]] std::size_t stratum_size(const PatternPair& pair) const;
};

StratumIndex build_strata(const Dataset& ds);

}  // namespace accmv

#endif  // ACCMV_DATA_HPP
