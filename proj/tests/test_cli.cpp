#include "accmv/cli.hpp"
#include "accmv/sensitivity.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace accmv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "accmv_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string simulated(const std::string& design, const std::string& n, const std::string& seed) {
  const auto path = scratch(design + "_" + n + "_" + seed + ".csv").string();
  REQUIRE(run({"simulate", "--design", design, "--n", n, "--seed", seed, "--output", path}).code == 0);
  return path;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({}).code == kExitArgument);
  CHECK(run({"frobnicate"}).code == kExitArgument);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"fit", "--no-such-flag"}).code == kExitArgument);
  CHECK(run({"simulate", "--design", "single"}).code == kExitConfig);  // --seed is mandatory
  CHECK(run({"table", "--table", "1", "--replicates", "1"}).code == kExitConfig);
  CHECK(run({"simulate", "--design", "wide", "--seed", "1"}).code == kExitConfig);
  CHECK(run({"fit", "--data", "/nonexistent.csv", "--x", "Y1", "--l", "Y3"}).code == kExitData);
  CHECK(exit_code_for(ErrorCategory::fit) == 4);
  CHECK(exit_code_for(ErrorCategory::inference) == 5);
}

TEST_CASE("fit with ra on the single design lands near the truth") {
  const auto data = simulated("single", "2000", "101");
  const auto report = scratch("fit_ra.json").string();
  const auto r = run({"fit", "--data", data, "--x", "Y1,Y2", "--l", "Y3", "--method", "ra", "--output", report});
  REQUIRE(r.code == 0);
  const auto j = read_json(report);
  const double theta = j["estimate"]["theta"];
  const double se = j["estimate"]["se"];
  CHECK(std::abs(theta - 89.0 / 96.0) <= 3 * se);
  CHECK(j["config"]["method"] == "ra");
  CHECK(j["config"]["n-min"] == 10);
  CHECK(j["estimate"]["strata"].size() == 4);
  CHECK(r.out.find("estimate") != std::string::npos);
}

TEST_CASE("fit on complete data is the sample mean") {
  const auto path = scratch("complete.csv").string();
  {
    std::ofstream f(path);
    f << "X,L\n0,1\n1,2\n2,4\n3,5\n";
  }
  const auto report = scratch("complete.json").string();
  for (const char* m : {"ipw", "ra", "mr", "cc"}) {
    REQUIRE(run({"fit", "--data", path, "--x", "X", "--l", "L", "--method", m, "--output", report}).code == 0);
    const auto j = read_json(report);
    CHECK(double(j["estimate"]["theta"]) == doctest::Approx(3.0));
    // sd with divisor n is sqrt(2.5), so se = sqrt(2.5 / 4)
    CHECK(double(j["estimate"]["se"]) == doctest::Approx(std::sqrt(2.5 / 4.0)));
  }
}

TEST_CASE("small strata fail with the stratum named") {
  const auto data = simulated("multiple", "400", "5");
  const auto r = run({"fit", "--data", data, "--x", "Y1,Y2", "--l", "Y3,Y4", "--functional", "product", "--coords",
                      "Y3,Y4", "--method", "mr", "--n-min", "40"});
  CHECK(r.code == kExitFit);
  CHECK(r.err.find("n_min") != std::string::npos);
  CHECK(r.err.find("(R=") != std::string::npos);
  CHECK(r.err.find(", A=") != std::string::npos);
}

TEST_CASE("regress: truth, complete data and the congeniality refusal") {
  const auto data = simulated("mpm", "4000", "17");
  const auto report = scratch("regress.json").string();
  const std::vector<std::string> base{"regress", "--data", data, "--x", "Y1", "--l", "Y2,Y3", "--response", "Y3",
                                      "--predictors", "Y2"};
  auto args = base;
  args.insert(args.end(), {"--output", report});
  REQUIRE(run(args).code == 0);
  const auto j = read_json(report);
  const auto& coefs = j["estimate"]["coefficients"];
  CHECK(std::abs(double(coefs[0]["estimate"]) + 1.0) <= 4 * double(coefs[0]["se"]));
  CHECK(std::abs(double(coefs[1]["estimate"]) - 0.5) <= 4 * double(coefs[1]["se"]));

  for (const char* m : {"ra", "mr"}) {
    auto bad = base;
    bad.insert(bad.end(), {"--method", m});
    const auto r = run(bad);
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("not available for marginal parametric models") != std::string::npos);
  }

  const auto path = scratch("ols.csv").string();
  {
    std::ofstream f(path);
    f << "X,A,B\n0,1,1\n0,2,3\n0,3,2\n0,4,5\n";
  }
  REQUIRE(run({"regress", "--data", path, "--x", "X", "--l", "A,B", "--response", "B", "--predictors", "A",
               "--output", report})
              .code == 0);
  const auto k = read_json(report);
  // OLS of B on A: slope 1.1, intercept 0
  CHECK(double(k["estimate"]["coefficients"][0]["estimate"]) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(double(k["estimate"]["coefficients"][1]["estimate"]) == doctest::Approx(1.1));
}

TEST_CASE("config file overrides flags and bad fields are named") {
  const auto data = simulated("single", "2000", "101");
  const auto cfg = scratch("cfg.json").string();
  {
    std::ofstream f(cfg);
    f << R"({"method": "ipw", "self-normalize": true, "odds-terms": {"11|0": {"x": "00"}}})";
  }
  const auto report = scratch("cfg_out.json").string();
  REQUIRE(run({"fit", "--config", cfg, "--data", data, "--x", "Y1,Y2", "--l", "Y3", "--method", "ra", "--output",
               report})
              .code == 0);
  const auto j = read_json(report);
  CHECK(j["estimate"]["method"] == "ipw");
  CHECK(j["estimate"]["self_normalized"] == true);
  CHECK(j["config"]["odds-terms"]["11|0"]["x"] == "00");

  {
    std::ofstream f(cfg);
    f << R"({"level": 2.0})";
  }
  auto r = run({"fit", "--config", cfg, "--data", data, "--x", "Y1,Y2", "--l", "Y3"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("'level'") != std::string::npos);
  {
    std::ofstream f(cfg);
    f << R"({"colour": "red"})";
  }
  r = run({"fit", "--config", cfg, "--data", data, "--x", "Y1,Y2", "--l", "Y3"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("colour") != std::string::npos);
  {
    std::ofstream f(cfg);
    f << "{ not json";
  }
  CHECK(run({"fit", "--config", cfg, "--data", data, "--x", "Y1,Y2", "--l", "Y3"}).code == kExitConfig);
}

TEST_CASE("sensitivity at zero matches self-normalized IPW and reloads") {
  const auto data = simulated("single", "2000", "101");
  const auto report = scratch("sn.json").string();
  REQUIRE(run({"fit", "--data", data, "--x", "Y1,Y2", "--l", "Y3", "--method", "ipw", "--self-normalize",
               "--output", report})
              .code == 0);
  const double ipw = read_json(report)["estimate"]["theta"];
  const auto csv = scratch("curve.csv").string();
  REQUIRE(run({"sensitivity", "--data", data, "--x", "Y1,Y2", "--l", "Y3", "--grid=-0.5,0,0.5", "--bootstrap", "20",
               "--seed", "3", "--output", csv})
              .code == 0);
  std::ifstream in(csv);
  const auto curve = read_curve_csv(in);
  REQUIRE(curve.points.size() == 3);
  CHECK(std::abs(curve.points[1].estimate - ipw) <= 1e-12);
  CHECK(curve.points[0].estimate < curve.points[2].estimate);
}

TEST_CASE("table and simulate outputs") {
  const auto r = run({"table", "--table", "1", "--replicates", "1", "--seed", "9", "--n", "2000"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("row,truth,bias,sample_se,mean_se,coverage,replicates,failures", 0) == 0);
  // one replicate: every coverage is 0 or 1
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    const auto cov = line.substr(0, line.rfind(','));
    const auto value = cov.substr(0, cov.rfind(','));
    const auto c = value.substr(value.rfind(',') + 1);
    CHECK((c == "0" || c == "1"));
  }
  CHECK(rows == 9);

  const auto a = run({"simulate", "--design", "multiple", "--n", "50", "--seed", "4"});
  const auto b = run({"simulate", "--design", "multiple", "--n", "50", "--seed", "4"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("Y1,Y2,Y3,Y4\n", 0) == 0);
}
