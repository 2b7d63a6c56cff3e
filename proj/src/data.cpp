#include "accmv/data.hpp"

#include "accmv/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace accmv {

Record::Record(Eigen::VectorXd x_, Eigen::VectorXd l_)
    : x(std::move(x_)), l(std::move(l_)), r(Pattern::observed_in(x)), a(Pattern::observed_in(l)) {}

Dataset::Dataset(std::vector<Record> records, std::vector<std::string> x_names,
                 std::vector<std::string> l_names)
    : records_(std::move(records)), x_names_(std::move(x_names)), l_names_(std::move(l_names)) {
  if (records_.empty()) throw ArgumentError("dataset must contain at least one record");
  if (x_names_.empty() || l_names_.empty()) {
    throw ArgumentError("dataset needs at least one auxiliary and one primary column");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& rec = records_[i];
    if (rec.x.size() != p() || rec.l.size() != d()) {
      throw ArgumentError("record " + std::to_string(i) + " has shape (" +
                          std::to_string(rec.x.size()) + ", " + std::to_string(rec.l.size()) +
                          "), expected (" + std::to_string(p()) + ", " + std::to_string(d()) + ")");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Record> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(records_.at(i));
  return {std::move(out), x_names_, l_names_};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  if (line.empty()) cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("CSV input is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);

  auto locate = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("column '" + name + "' not found in CSV header");
    return static_cast<std::size_t>(it - header.begin());
  };
  if (schema.x_columns.empty() || schema.l_columns.empty()) {
    throw SchemaError("schema must name at least one X column and one L column");
  }
  std::vector<std::size_t> xcol, lcol;
  for (const auto& n : schema.x_columns) xcol.push_back(locate(n));
  for (const auto& n : schema.l_columns) lcol.push_back(locate(n));

  std::vector<Record> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() && header.size() > 1) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(header.size()),
                       row, 0);
    }
    auto parse_cell = [&](std::size_t col) {
      const std::string cell = trim(cells[col]);
      if (std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), cell) !=
          schema.missing_tokens.end()) {
        return kMissing;
      }
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("cannot parse '" + cell + "' at row " + std::to_string(row) +
                             ", column " + std::to_string(col + 1) + " (" + header[col] + ")",
                         row, col + 1);
      }
      return v;
    };
    Eigen::VectorXd x(static_cast<Eigen::Index>(xcol.size()));
    Eigen::VectorXd l(static_cast<Eigen::Index>(lcol.size()));
    for (std::size_t j = 0; j < xcol.size(); ++j) x[static_cast<Eigen::Index>(j)] = parse_cell(xcol[j]);
    for (std::size_t j = 0; j < lcol.size(); ++j) l[static_cast<Eigen::Index>(j)] = parse_cell(lcol[j]);
    records.emplace_back(std::move(x), std::move(l));
  }
  if (records.empty()) throw SchemaError("CSV contains a header but no records");
  return {std::move(records), schema.x_columns, schema.l_columns};
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  bool first = true;
  for (const auto& n : ds.x_names()) { out << (first ? "" : ",") << n; first = false; }
  for (const auto& n : ds.l_names()) out << "," << n;
  out << "\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (const auto& rec : ds.records()) {
    for (Eigen::Index j = 0; j < rec.x.size(); ++j) out << (j ? "," : "") << cell(rec.x[j]);
    for (Eigen::Index j = 0; j < rec.l.size(); ++j) out << "," << cell(rec.l[j]);
    out << "\n";
  }
}

void save_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  write_csv(out, ds);
}

// ---------------------------------------------------------------------------
// Functional

namespace {

void check_coords(const std::vector<int>& coords) {
  if (coords.empty()) throw ArgumentError("functional needs at least one coordinate");
  for (int c : coords) {
    if (c < 0) throw ArgumentError("negative coordinate in functional");
  }
}

}  // namespace

Functional Functional::identity(int coord) {
  check_coords({coord});
  Functional f;
  f.kind_ = Kind::identity;
  f.coords_ = {coord};
  return f;
}

Functional Functional::average(std::vector<int> coords) {
  check_coords(coords);
  Functional f;
  f.kind_ = Kind::average;
  f.coords_ = std::move(coords);
  return f;
}

Functional Functional::product(std::vector<int> coords) {
  check_coords(coords);
  Functional f;
  f.kind_ = Kind::product;
  f.coords_ = std::move(coords);
  return f;
}

Functional Functional::threshold(std::vector<int> coords, std::vector<double> thresholds) {
  check_coords(coords);
  if (coords.size() != thresholds.size()) {
    throw ArgumentError("threshold functional needs one threshold per coordinate");
  }
  for (double t : thresholds) {
    if (!std::isfinite(t)) throw ArgumentError("threshold must be finite");
  }
  Functional f;
  f.kind_ = Kind::threshold;
  f.coords_ = std::move(coords);
  f.thresholds_ = std::move(thresholds);
  return f;
}

Functional Functional::custom(std::function<double(const Eigen::VectorXd&)> fn, std::string name) {
  if (!fn) throw ArgumentError("custom functional needs a callable");
  Functional f;
  f.kind_ = Kind::custom;
  f.custom_ = std::move(fn);
  f.name_ = std::move(name);
  return f;
}

double Functional::evaluate(const Eigen::Ref<const Eigen::VectorXd>& l) const {
  if (l.hasNaN()) throw PreconditionError("functional evaluated at partially observed L");
  for (int c : coords_) {
    if (c >= l.size()) {
      throw ArgumentError("functional coordinate " + std::to_string(c) + " exceeds d = " +
                          std::to_string(l.size()));
    }
  }
  double v = 0.0;
  switch (kind_) {
    case Kind::identity:
      v = l[coords_[0]];
      break;
    case Kind::average:
      for (int c : coords_) v += l[c];
      v /= static_cast<double>(coords_.size());
      break;
    case Kind::product:
      v = 1.0;
      for (int c : coords_) v *= l[c];
      break;
    case Kind::threshold:
      v = 1.0;
      for (std::size_t k = 0; k < coords_.size(); ++k) {
        if (!(l[coords_[k]] <= thresholds_[k])) v = 0.0;
      }
      break;
    case Kind::custom:
      v = custom_(Eigen::VectorXd(l));
      break;
  }
  if (!std::isfinite(v)) throw PreconditionError("functional value is not finite");
  return v;
}

std::string Functional::describe(const std::vector<std::string>& l_names) const {
  auto name = [&](int c) {
    return c < static_cast<int>(l_names.size()) ? l_names[static_cast<std::size_t>(c)]
                                                 : "L" + std::to_string(c + 1);
  };
  auto join = [&](const char* sep) {
    std::string s;
    for (std::size_t k = 0; k < coords_.size(); ++k) s += (k ? sep : "") + name(coords_[k]);
    return s;
  };
  switch (kind_) {
    case Kind::identity: return "E[" + name(coords_[0]) + "]";
    case Kind::average: return "E[(" + join(" + ") + ")/" + std::to_string(coords_.size()) + "]";
    case Kind::product: return "E[" + join(" * ") + "]";
    case Kind::threshold: {
      std::string s = "P(";
      for (std::size_t k = 0; k < coords_.size(); ++k) {
        s += (k ? ", " : "") + name(coords_[k]) + " <= " + format_double(thresholds_[k]);
      }
      return s + ")";
    }
    case Kind::custom: return name_;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Strata

std::vector<PatternPair> StratumIndex::incomplete_pairs() const {
  std::vector<PatternPair> out;
  for (const auto& [pair, idx] : strata) {
    if (!pair.a.is_complete()) out.push_back(pair);
  }
  return out;
}

const std::vector<std::size_t>& StratumIndex::pool(const Pattern& r) const {
  static const std::vector<std::size_t> empty;
  auto it = pools.find(r);
  return it == pools.end() ? empty : it->second;
}

std::size_t StratumIndex::stratum_size(const PatternPair& pair) const {
  auto it = strata.find(pair);
  return it == strata.end() ? 0 : it->second.size();
}

StratumIndex build_strata(const Dataset& ds) {
  StratumIndex index;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& rec = ds[i];
    index.strata[{rec.r, rec.a}].push_back(i);
  }
  for (const auto& [pair, idx] : index.strata) {
    if (pair.a.is_complete() || index.pools.count(pair.r)) continue;
    auto& pool = index.pools[pair.r];
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& rec = ds[i];
      if (rec.a.is_complete() && dominates(rec.r, pair.r)) pool.push_back(i);
    }
  }
  return index;
}

}  // namespace accmv
