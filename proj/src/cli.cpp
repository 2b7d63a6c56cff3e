#include "accmv/cli.hpp"

#include "accmv/analysis.hpp"
#include "accmv/mpm.hpp"
#include "accmv/report.hpp"
#include "accmv/sensitivity.hpp"
#include "accmv/simgen.hpp"
#include "accmv/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace accmv {

using nlohmann::json;

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::argument: return kExitArgument;
    case ErrorCategory::config: return kExitConfig;
    case ErrorCategory::data: return kExitData;
    case ErrorCategory::fit: return kExitFit;
    case ErrorCategory::inference: return kExitInference;
  }
  return kExitArgument;
}

namespace {

// ---------------------------------------------------------------------------
// Resolved configuration. Flags and config-file entries share the long flag
// names as keys; entries from --config win over flags. Every getter records
// the value it resolved (defaults included) so reports can embed it.

class Config {
 public:
  explicit Config(json values) : values_(std::move(values)) {}

  [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }
  [[nodiscard]] const json& resolved() const { return values_; }

  std::string str(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json& v = lookup(key, fallback ? json(*fallback) : json());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    fail(key, "expected a string");
  }

  double num(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json& v = lookup(key, fallback ? json(*fallback) : json());
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_double(key, v.get<std::string>());
    fail(key, "expected a number");
  }

  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    const json& v = lookup(key, fallback ? json(*fallback) : json());
    long long out = 0;
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      auto res = std::from_chars(s.data(), s.data() + s.size(), out);
      if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return out;
    }
    fail(key, "expected an integer");
  }

  std::uint64_t seed(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    const json& v = lookup(key, fallback ? json(*fallback) : json());
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      std::uint64_t out = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), out);
      if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return out;
    }
    fail(key, "expected a non-negative integer");
  }

  bool flag(const std::string& key, bool fallback = false) {
    const json& v = lookup(key, json(fallback));
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
    }
    fail(key, "expected true or false");
  }

  std::vector<std::string> strings(const std::string& key,
                                   std::optional<std::vector<std::string>> fallback = std::nullopt) {
    const json& v = lookup(key, fallback ? json(*fallback) : json());
    std::vector<std::string> out;
    if (v.is_string()) {
      std::stringstream ss(v.get<std::string>());
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(item);
      if (!v.get<std::string>().empty() && v.get<std::string>().back() == ',') out.emplace_back();
      return out;
    }
    if (!v.is_array()) fail(key, "expected a list");
    for (const auto& e : v) {
      if (e.is_string()) out.push_back(e.get<std::string>());
      else if (e.is_number()) out.push_back(e.dump());
      else fail(key, "list entries must be strings or numbers");
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    const json& v = lookup(key, fallback ? json(*fallback) : json());
    std::vector<double> out;
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array()) {
      for (const auto& e : v) {
        if (e.is_number()) out.push_back(e.get<double>());
        else if (e.is_string()) out.push_back(parse_double(key, e.get<std::string>()));
        else fail(key, "list entries must be numbers");
      }
      return out;
    }
    for (const auto& s : strings(key)) out.push_back(parse_double(key, s));
    return out;
  }

  const json& object(const std::string& key) {
    const json& v = lookup(key, json::object());
    if (!v.is_object()) fail(key, "expected an object");
    return v;
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& why) {
    throw ConfigError("config field '" + key + "': " + why);
  }

 private:
  const json& lookup(const std::string& key, const json& fallback) {
    if (!values_.contains(key)) {
      if (fallback.is_null()) fail(key, "is required");
      values_[key] = fallback;
    }
    return values_[key];
  }

  static double parse_double(const std::string& key, const std::string& s) {
    double out = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail(key, "cannot parse '" + s + "' as a number");
    return out;
  }

  json values_;
};

// ---------------------------------------------------------------------------
// Resolution helpers

int column_index(const std::vector<std::string>& names, const std::string& name, const std::string& key) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) Config::fail(key, "'" + name + "' is not one of the L columns");
  return static_cast<int>(it - names.begin());
}

Dataset load_data(Config& cfg) {
  CsvSchema schema;
  schema.x_columns = cfg.strings("x");
  schema.l_columns = cfg.strings("l");
  schema.missing_tokens = cfg.strings("missing", std::vector<std::string>{"", "NA"});
  return load_csv(cfg.str("data"), schema);
}

Functional resolve_functional(Config& cfg, const Dataset& ds) {
  const auto kind = cfg.str("functional", std::string("identity"));
  const auto names = cfg.strings("coords", std::vector<std::string>{ds.l_names().front()});
  std::vector<int> coords;
  for (const auto& n : names) coords.push_back(column_index(ds.l_names(), n, "coords"));
  if (kind == "identity") {
    if (coords.size() != 1) Config::fail("coords", "identity takes exactly one coordinate");
    return Functional::identity(coords[0]);
  }
  if (kind == "average") return Functional::average(coords);
  if (kind == "product") return Functional::product(coords);
  if (kind == "threshold") {
    const auto t = cfg.numbers("thresholds");
    if (t.size() != coords.size()) Config::fail("thresholds", "need one threshold per coordinate");
    return Functional::threshold(coords, t);
  }
  Config::fail("functional", "unknown kind '" + kind + "' (identity, average, product, threshold)");
}

std::map<PatternPair, ModelTerms> resolve_terms(Config& cfg, const std::string& key, const Dataset& ds) {
  std::map<PatternPair, ModelTerms> out;
  for (const auto& [label, spec] : cfg.object(key).items()) {
    PatternPair pair;
    try {
      pair = PatternPair::parse(label);
    } catch (const Error& e) {
      Config::fail(key, e.what());
    }
    if (pair.r.length() != ds.p() || pair.a.length() != ds.d()) {
      Config::fail(key, "pattern pair '" + label + "' does not match p = " + std::to_string(ds.p()) +
                            ", d = " + std::to_string(ds.d()));
    }
    if (!spec.is_object()) Config::fail(key, "entry '" + label + "' must be an object with x, l, quadratic");
    ModelTerms t = ModelTerms::full(pair);
    try {
      if (spec.contains("x")) t.x_terms = Pattern::parse(spec.at("x").get<std::string>());
      if (spec.contains("l")) t.l_terms = Pattern::parse(spec.at("l").get<std::string>());
      if (spec.contains("quadratic")) t.quadratic = spec.at("quadratic").get<bool>();
    } catch (const std::exception& e) {
      Config::fail(key, "entry '" + label + "': " + e.what());
    }
    out[pair] = t;
  }
  return out;
}

FitOptions resolve_fit(Config& cfg, const Dataset& ds) {
  FitOptions fit;
  fit.n_min = static_cast<int>(cfg.integer("n-min", 10));
  fit.max_iterations = static_cast<int>(cfg.integer("max-iter", 100));
  fit.score_tolerance = cfg.num("tol", 1e-8);
  fit.coefficient_bound = cfg.num("coefficient-bound", 30.0);
  fit.factorize_products = cfg.flag("factorize-products", true);
  if (fit.n_min < 1) Config::fail("n-min", "must be at least 1");
  if (fit.max_iterations < 1) Config::fail("max-iter", "must be at least 1");
  if (!(fit.score_tolerance > 0)) Config::fail("tol", "must be positive");
  fit.odds_terms = resolve_terms(cfg, "odds-terms", ds);
  fit.outcome_terms = resolve_terms(cfg, "outcome-terms", ds);
  for (const auto& [pair, t] : fit.odds_terms) (void)fit.odds_terms_for(pair);
  for (const auto& [pair, t] : fit.outcome_terms) (void)fit.outcome_terms_for(pair);
  return fit;
}

BootstrapOptions resolve_bootstrap(Config& cfg, long long default_b) {
  BootstrapOptions b;
  b.replicates = static_cast<int>(cfg.integer("bootstrap", default_b));
  if (b.replicates != 0 && b.replicates < 2) Config::fail("bootstrap", "use 0 (off) or at least 2 replicates");
  b.seed = cfg.seed("seed", 0);
  b.threads = static_cast<int>(cfg.integer("threads", 1));
  b.level = cfg.num("level", 0.95);
  if (!(b.level > 0 && b.level < 1)) Config::fail("level", "must lie in (0, 1)");
  return b;
}

void write_json(const std::string& path, const json& report) {
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write '" + path + "'");
  f << report.dump(2) << '\n';
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_fit(Config& cfg, std::ostream& out) {
  const auto ds = load_data(cfg);
  AnalysisConfig ac;
  ac.method = parse_method(cfg.str("method", std::string("mr")));
  ac.f = resolve_functional(cfg, ds);
  ac.fit = resolve_fit(cfg, ds);
  ac.self_normalize = cfg.flag("self-normalize", false);
  const auto boot = resolve_bootstrap(cfg, 0);
  ac.level = boot.level;
  const auto output = cfg.str("output", std::string());

  const auto a = analyze(ds, ac);
  json report = {{"command", "fit"}, {"functional", ac.f.describe(ds.l_names())}, {"estimate", to_json(a, ds, ac.level)}};
  std::optional<BootstrapResult> br;
  if (boot.replicates > 0) {
    br = bootstrap_analysis(ds, ac, boot);
    report["bootstrap"] = {{"normal", to_json(br->normal())}, {"percentile", to_json(br->percentile())}};
  }
  report["config"] = cfg.resolved();

  if (cfg.flag("json", false)) {
    out << report.dump(2) << '\n';
  } else {
    const int pct = static_cast<int>(std::lround(ac.level * 100));
    out << "method " << to_string(ac.method) << (ac.self_normalize ? " (self-normalized)" : "") << ", target "
        << ac.f.describe(ds.l_names()) << ", n = " << ds.size() << " (" << a.estimate.n_complete
        << " with complete L)\n";
    out << "estimate " << fmt(a.estimate.theta) << "  se " << fmt(a.influence.se) << "  " << pct << "% CI ["
        << fmt(a.ci.lower) << ", " << fmt(a.ci.upper) << "]\n";
    if (!a.estimate.strata.empty()) {
      out << "stratum      theta_ra   n_case  n_pool\n";
      for (const auto& [pair, v] : a.estimate.strata) {
        out << std::left << std::setw(12) << pair.to_string() << std::right << std::setw(9) << fmt(v)
            << std::setw(9) << a.strata.stratum_size(pair) << std::setw(8) << a.strata.pool(pair.r).size() << '\n';
      }
    }
    if (a.weights) {
      out << "weights: min " << fmt(a.weights->min) << ", max " << fmt(a.weights->max) << ", mass "
          << fmt(a.weights->mass) << ", effective n " << fmt(a.weights->effective_sample_size, 1) << '\n';
    }
    if (br) {
      const auto nci = br->normal();
      const auto pci = br->percentile();
      out << "bootstrap (B = " << boot.replicates << ", seed " << boot.seed << ", failed " << br->failed.size()
          << "): se " << fmt(nci.se) << ", normal [" << fmt(nci.lower) << ", " << fmt(nci.upper)
          << "], percentile [" << fmt(pci.lower) << ", " << fmt(pci.upper) << "]\n";
    }
    for (const auto& w : a.warnings) out << "warning: " << w << '\n';
  }
  if (!output.empty()) write_json(output, report);
  return kExitOk;
}

int cmd_regress(Config& cfg, std::ostream& out) {
  const auto ds = load_data(cfg);
  const auto model = cfg.str("model", std::string("linear"));
  std::optional<ScoreSpec> spec;
  if (model == "linear") {
    const int response = column_index(ds.l_names(), cfg.str("response"), "response");
    std::vector<int> predictors;
    for (const auto& n : cfg.strings("predictors")) predictors.push_back(column_index(ds.l_names(), n, "predictors"));
    spec = ScoreSpec::linear(response, predictors);
  } else if (model == "gaussian") {
    std::vector<int> coords;
    for (const auto& n : cfg.strings("coords", ds.l_names())) coords.push_back(column_index(ds.l_names(), n, "coords"));
    spec = ScoreSpec::gaussian(coords);
  } else {
    Config::fail("model", "unknown model '" + model + "' (linear, gaussian)");
  }
  const Method method = parse_method(cfg.str("method", std::string("ipw")));
  const FitOptions fit = resolve_fit(cfg, ds);
  MpmOptions mo;
  mo.naive_sandwich = cfg.flag("naive-sandwich", false);
  const auto boot = resolve_bootstrap(cfg, 0);
  const auto output = cfg.str("output", std::string());

  const auto est = fit_marginal_model(ds, *spec, method, fit, mo);
  json report = {{"command", "regress"}, {"method", to_string(method)}, {"estimate", to_json(est, boot.level)}};
  std::optional<BootstrapResult> br;
  if (boot.replicates > 0) {
    br = bootstrap(
        ds, [&](const Dataset& sample) { return fit_marginal_model(sample, *spec, method, fit, mo).theta; }, boot);
    json rows = json::array();
    for (Eigen::Index k = 0; k < est.theta.size(); ++k) {
      rows.push_back({{"name", est.names[static_cast<std::size_t>(k)]},
                      {"normal", to_json(br->normal(k))},
                      {"percentile", to_json(br->percentile(k))}});
    }
    report["bootstrap"] = rows;
  }
  report["config"] = cfg.resolved();

  if (cfg.flag("json", false)) {
    out << report.dump(2) << '\n';
  } else {
    const int pct = static_cast<int>(std::lround(boot.level * 100));
    out << "method " << to_string(method) << (mo.naive_sandwich ? " (naive sandwich)" : "") << ", n = " << ds.size()
        << ", converged in " << est.iterations << " iterations\n";
    out << std::left << std::setw(22) << "coefficient" << std::right << std::setw(10) << "estimate" << std::setw(10)
        << "se" << "   " << pct << "% CI\n";
    for (Eigen::Index k = 0; k < est.theta.size(); ++k) {
      const auto ci = normal_interval(est.theta[k], est.se[k], boot.level);
      out << std::left << std::setw(22) << est.names[static_cast<std::size_t>(k)] << std::right << std::setw(10)
          << fmt(est.theta[k]) << std::setw(10) << fmt(est.se[k]) << "   [" << fmt(ci.lower) << ", "
          << fmt(ci.upper) << "]\n";
    }
    if (br) {
      out << "bootstrap (B = " << boot.replicates << ", seed " << boot.seed << ", failed " << br->failed.size()
          << ") se:";
      for (Eigen::Index k = 0; k < est.theta.size(); ++k) out << ' ' << fmt(br->normal(k).se);
      out << '\n';
    }
  }
  if (!output.empty()) write_json(output, report);
  return kExitOk;
}

int cmd_sensitivity(Config& cfg, std::ostream& out) {
  const auto ds = load_data(cfg);
  const auto f = resolve_functional(cfg, ds);
  const auto fit = resolve_fit(cfg, ds);
  const auto grid = cfg.numbers("grid", std::vector<double>{0.0});
  const auto center = cfg.numbers("center", std::vector<double>{0.0});
  const auto direction = cfg.numbers("direction", std::vector<double>(static_cast<std::size_t>(ds.d()), 1.0));
  auto expand = [&](const std::vector<double>& v, const char* key) {
    if (v.size() == 1) return Eigen::VectorXd::Constant(ds.d(), v[0]).eval();
    if (static_cast<int>(v.size()) != ds.d()) Config::fail(key, "needs 1 or d = " + std::to_string(ds.d()) + " values");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), ds.d()).eval();
  };
  const TiltSpec tilt{expand(direction, "direction"), expand(center, "center")};
  const auto boot = resolve_bootstrap(cfg, 500);
  const auto output = cfg.str("output", std::string());
  const auto report_path = cfg.str("report", std::string());

  const auto curve = sweep(ds, f, fit, tilt, grid, boot);
  if (output.empty()) {
    write_curve_csv(out, curve);
  } else {
    std::ofstream csv(output);
    if (!csv) throw ArgumentError("cannot write '" + output + "'");
    write_curve_csv(csv, curve);
    out << "wrote " << curve.points.size() << " grid points for " << curve.functional << " to " << output
        << " (bootstrap B = " << boot.replicates << ", failed " << curve.failed << ")\n";
  }
  if (!report_path.empty()) {
    write_json(report_path, {{"command", "sensitivity"}, {"curve", to_json(curve)}, {"config", cfg.resolved()}});
  }
  return kExitOk;
}

int cmd_simulate(Config& cfg, std::ostream& out) {
  SimDesign design;
  design.kind = parse_design(cfg.str("design"));
  design.n = static_cast<std::size_t>(cfg.integer("n", 2000));
  design.seed = cfg.seed("seed");
  design.stream = cfg.seed("stream", 0);
  if (cfg.integer("n") < 1) Config::fail("n", "must be at least 1");
  const auto output = cfg.str("output", std::string());
  const auto ds = generate(design);
  if (output.empty()) {
    write_csv(out, ds);
  } else {
    save_csv(output, ds);
    out << "wrote " << ds.size() << " records of design " << to_string(design.kind) << " to " << output << '\n';
  }
  return kExitOk;
}

int cmd_table(Config& cfg, std::ostream& out) {
  TableOptions opt;
  opt.table = static_cast<int>(cfg.integer("table"));
  opt.replicates = static_cast<int>(cfg.integer("replicates", 1000));
  opt.n = static_cast<std::size_t>(cfg.integer("n", 2000));
  opt.seed = cfg.seed("seed");
  opt.threads = static_cast<int>(cfg.integer("threads", 0));
  if (cfg.integer("n") < 1) Config::fail("n", "must be at least 1");
  const auto output = cfg.str("output", std::string());
  const auto dump = cfg.str("dump-replicates", std::string());
  const auto report_path = cfg.str("report", std::string());

  const auto result = run_table(opt);
  if (output.empty()) {
    write_table_csv(out, result);
  } else {
    std::ofstream csv(output);
    if (!csv) throw ArgumentError("cannot write '" + output + "'");
    write_table_csv(csv, result);
    out << std::left << std::setw(22) << "row" << std::right << std::setw(9) << "bias" << std::setw(11) << "sample se"
        << std::setw(10) << "mean se" << std::setw(10) << "coverage" << '\n';
    for (const auto& r : result.rows) {
      out << std::left << std::setw(22) << r.label << std::right << std::setw(9) << fmt(r.bias, 3) << std::setw(11)
          << fmt(r.sample_se, 3) << std::setw(10) << fmt(r.mean_se, 3) << std::setw(10) << fmt(r.coverage, 3);
      if (r.failures) out << "  (" << r.failures << " failed)";
      out << '\n';
    }
    out << result.replicates << " replicates of n = " << result.n << " in " << fmt(result.seconds, 1) << " s\n";
  }
  if (!dump.empty()) {
    std::ofstream f(dump);
    if (!f) throw ArgumentError("cannot write '" + dump + "'");
    write_replicates_csv(f, result);
  }
  if (!report_path.empty()) {
    write_json(report_path, {{"command", "table"}, {"result", to_json(result)}, {"config", cfg.resolved()}});
  }
  return kExitOk;
}

int cmd_verify(Config& cfg, std::ostream& out) {
  const auto which = cfg.str("design", std::string("all"));
  const auto n = cfg.integer("n", 1000000);
  const auto seed = cfg.seed("seed", 1);
  const double threshold = cfg.num("threshold", 4.0);
  const auto output = cfg.str("output", std::string());
  if (n < 100000) Config::fail("n", "must be at least 100000");
  std::vector<DesignKind> kinds;
  if (which == "all") kinds = {DesignKind::single, DesignKind::multiple, DesignKind::mpm};
  else kinds = {parse_design(which)};

  const bool as_json = cfg.flag("json", false);
  json reports = json::array();
  bool ok = true;
  for (auto kind : kinds) {
    const auto r = verify_oracles(kind, static_cast<std::size_t>(n), seed, threshold);
    ok = ok && r.passed();
    reports.push_back(to_json(r));
    if (as_json) continue;
    const auto truth = oracle_value(kind);
    out << std::left << std::setw(9) << to_string(kind) << std::right << " truth " << truth.exact << ": "
        << r.checks.size() << " checks, " << r.failures() << " beyond " << threshold << " SE\n";
    for (const auto& c : r.checks) {
      if (!c.passed) out << "  FLAG " << c.name << ": " << c.estimate << " vs " << c.expected << " (z = " << fmt(c.z(), 2) << ")\n";
    }
  }
  const json report = {{"command", "verify-oracles"}, {"reports", reports}, {"config", cfg.resolved()}};
  if (as_json) out << report.dump(2) << '\n';
  if (!output.empty()) write_json(output, report);
  return ok ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------
// Argument parsing

struct Subcommand {
  CLI::App* app;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, std::string> values;
  std::map<std::string, std::vector<std::string>> lists;
  std::map<std::string, bool> flags;
};

void add_value(Subcommand& s, const std::string& name, const std::string& help) {
  s.options[name] = s.app->add_option("--" + name, s.values[name], help);
}

void add_list(Subcommand& s, const std::string& name, const std::string& help) {
  s.options[name] = s.app->add_option("--" + name, s.lists[name], help)->delimiter(',');
}

void add_flag(Subcommand& s, const std::string& name, const std::string& help) {
  s.options[name] = s.app->add_flag("--" + name, s.flags[name], help);
}

void add_data_options(Subcommand& s) {
  add_value(s, "data", "input CSV");
  add_list(s, "x", "auxiliary columns (comma separated)");
  add_list(s, "l", "primary columns (comma separated)");
  add_list(s, "missing", "tokens read as missing (default: empty cell, NA)");
}

void add_fit_options(Subcommand& s) {
  add_value(s, "n-min", "minimum case and pool size per stratum (default 10)");
  add_value(s, "max-iter", "Newton iteration limit (default 100)");
  add_value(s, "tol", "score tolerance (default 1e-8)");
  add_value(s, "coefficient-bound", "separation bound on |alpha| (default 30)");
}

void add_functional_options(Subcommand& s) {
  add_value(s, "functional", "identity | average | product | threshold");
  add_list(s, "coords", "L columns the functional uses");
  add_list(s, "thresholds", "thresholds for the threshold functional");
}

void add_bootstrap_options(Subcommand& s) {
  add_value(s, "bootstrap", "bootstrap replicates (0 = off)");
  add_value(s, "seed", "RNG seed");
  add_value(s, "threads", "worker threads");
  add_value(s, "level", "confidence level (default 0.95)");
}

json collect(const Subcommand& s) {
  json out = json::object();
  for (const auto& [name, opt] : s.options) {
    if (opt->count() == 0) continue;
    if (s.flags.count(name)) out[name] = s.flags.at(name);
    else if (s.lists.count(name)) out[name] = s.lists.at(name);
    else out[name] = s.values.at(name);
  }
  return out;
}

json merged_config(const Subcommand& s, const std::string& config_path) {
  json cfg = collect(s);
  if (config_path.empty()) return cfg;
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
  json file;
  try {
    file = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
  }
  if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : file.items()) {
    if (key != "odds-terms" && key != "outcome-terms" && key != "factorize-products" && !s.options.count(key)) {
      throw ConfigError("config field '" + key + "' is not an option of this command");
    }
    cfg[key] = value;
  }
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimation under the available complete-case missing value assumption"};
  app.name("accmv");
  app.require_subcommand(1);
  std::string config_path;

  std::map<std::string, Subcommand> subs;
  auto make = [&](const std::string& name, const std::string& help, bool json_flag) -> Subcommand& {
    auto& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.app->add_option("--config", config_path, "JSON file; its entries override flags");
    if (json_flag) add_flag(s, "json", "print the JSON report instead of the summary");
    return s;
  };

  auto& fit = make("fit", "estimate E[f(L)] by ipw, ra, mr or cc", true);
  add_data_options(fit);
  add_functional_options(fit);
  add_fit_options(fit);
  add_bootstrap_options(fit);
  add_value(fit, "method", "ipw | ra | mr | cc (default mr)");
  add_flag(fit, "self-normalize", "divide the IPW sum by the total weight instead of n");
  add_value(fit, "output", "write the JSON report here");

  auto& regress = make("regress", "fit a marginal model for L by weighted estimating equations", true);
  add_data_options(regress);
  add_fit_options(regress);
  add_bootstrap_options(regress);
  add_value(regress, "model", "linear | gaussian (default linear)");
  add_value(regress, "response", "response column of the linear model");
  add_list(regress, "predictors", "predictor columns of the linear model");
  add_list(regress, "coords", "columns of the gaussian model (default: all L)");
  add_value(regress, "method", "ipw | cc (default ipw)");
  add_flag(regress, "naive-sandwich", "ignore estimation of the odds in the sandwich");
  add_value(regress, "output", "write the JSON report here");

  auto& sens = make("sensitivity", "exponential-tilting sweep of the self-normalized IPW estimate", false);
  add_data_options(sens);
  add_functional_options(sens);
  add_fit_options(sens);
  add_bootstrap_options(sens);
  add_list(sens, "grid", "multipliers g; delta = g * direction (default 0)");
  add_list(sens, "direction", "tilt direction, 1 or d values (default 1)");
  add_list(sens, "center", "tilt center c, 1 or d values (default 0)");
  add_value(sens, "output", "curve CSV path (default stdout)");
  add_value(sens, "report", "write a JSON report here");

  auto& sim = make("simulate", "write a simulated dataset as CSV", false);
  add_value(sim, "design", "single | multiple | mpm");
  add_value(sim, "n", "records (default 2000)");
  add_value(sim, "seed", "RNG seed (required)");
  add_value(sim, "stream", "replicate stream (default 0)");
  add_value(sim, "output", "CSV path (default stdout)");

  auto& table = make("table", "reproduce a simulation table", false);
  add_value(table, "table", "1, 2 or 3");
  add_value(table, "replicates", "default 1000");
  add_value(table, "n", "records per replicate (default 2000)");
  add_value(table, "seed", "RNG seed (required)");
  add_value(table, "threads", "worker threads (default: all cores)");
  add_value(table, "output", "summary CSV path (default stdout)");
  add_value(table, "dump-replicates", "write per-replicate estimates here");
  add_value(table, "report", "write a JSON report here");

  auto& verify = make("verify-oracles", "Monte Carlo check of the closed-form simulation truths", true);
  add_value(verify, "design", "single | multiple | mpm | all (default all)");
  add_value(verify, "n", "sample size (default 1000000)");
  add_value(verify, "seed", "RNG seed (default 1)");
  add_value(verify, "threshold", "flag beyond this many standard errors (default 4)");
  add_value(verify, "output", "write the JSON report here");

  std::vector<std::string> argv_store{"accmv"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitArgument;
  }

  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      Config cfg(merged_config(s, config_path));
      if (name == "fit") return cmd_fit(cfg, out);
      if (name == "regress") return cmd_regress(cfg, out);
      if (name == "sensitivity") return cmd_sensitivity(cfg, out);
      if (name == "simulate") return cmd_simulate(cfg, out);
      if (name == "table") return cmd_table(cfg, out);
      if (name == "verify-oracles") return cmd_verify(cfg, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitArgument;
}

}  // namespace accmv
