#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "kinjump/jump.hpp"

using namespace kinjump;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "kinjump");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  return parts;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  double at(std::size_t row, const std::string& col) const {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == col) return rows[row][k];
    }
    throw std::runtime_error("no column " + col);
  }
};

Table parse_csv(const std::string& text) {
  Table t;
  auto lines = split(text, '\n');
  t.header = split(lines.at(0), ',');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<double> row;
    for (const auto& f : split(lines[i], ',')) row.push_back(std::stod(f));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "kinjump_test_cli";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("coeffs schema, tolerance and determinism") {
  const auto r = run({"coeffs", "--a", "1.0", "--format", "csv"});
  REQUIRE(r.code == cli::kOk);
  const auto t = parse_csv(r.out);
  const std::vector<std::string> expect = {"a_physical", "a",     "eps_T_per_U", "eps_T_per_gT", "eps_n_per_U",
                                           "eps_n_per_gT", "omega", "V1",          "V2",           "V3",
                                           "K1",           "K0",    "L1",          "L0",           "boundary_residual",
                                           "theta_winding"};
  CHECK(t.header == expect);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.at(0, "a_physical") == 1.0);
  CHECK(t.at(0, "a") == rescale_slope(1.0));
  CHECK(t.at(0, "boundary_residual") < 1e-3);
  CHECK(std::abs(t.at(0, "theta_winding") - 2.0 * std::numbers::pi) < 1e-3);
  CHECK(run({"coeffs", "--a", "1.0", "--format", "csv"}).out == r.out);
  // The printed-determinant report is informational and always present.
  CHECK(r.err.find("printed-determinant check") != std::string::npos);
  const auto j = json::parse(run({"coeffs", "--a", "1.0", "--format", "json", "--seed", "7"}).out);
  CHECK(j["seed"] == 7);
}

TEST_CASE("exit codes") {
  CHECK(run({"coeffs"}).code == cli::kConfigError);
  CHECK(run({"coeffs", "--a", "0"}).code == cli::kConfigError);
  CHECK(run({"coeffs", "--a", "-1"}).code == cli::kConfigError);
  CHECK(run({"coeffs", "--a", "1", "--variant", "bogus"}).code == cli::kConfigError);
  CHECK(run({"frobnicate"}).code == cli::kConfigError);
  CHECK(run({"coeffs", "--a", "1", "--a-min", "0.5"}).code == cli::kConfigError);
  // The printed matrix breaks the boundary closure: a tolerance failure.
  const auto bad = run({"coeffs", "--a", "1", "--variant", "printed"});
  CHECK(bad.code == cli::kToleranceFailure);
  CHECK(bad.err.find("tolerance failure") != std::string::npos);
  const auto shortslab = run({"validate", "--a", "1", "--xmax", "3"});
  CHECK(shortslab.code == cli::kOracleFailure);
  CHECK(shortslab.err.find("domain-too-short") != std::string::npos);
}

TEST_CASE("omega table") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run({"omega"});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(r.code == cli::kOk);
  CHECK(seconds < 5.0);
  const auto t = parse_csv(r.out);
  CHECK(t.header == std::vector<std::string>{"a_physical", "a", "omega"});
  REQUIRE(t.rows.size() == 101);
  CHECK(t.at(0, "a_physical") == 0.0);
  CHECK(std::abs(t.at(0, "omega")) < 1e-10);
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.at(i, "a_physical") > t.at(i - 1, "a_physical"));
  CHECK(t.at(100, "a_physical") == 5.0);
  const auto g = parse_csv(run({"omega", "--a-min", "0.25", "--a-max", "1.25", "--a-steps", "5"}).out);
  REQUIRE(g.rows.size() == 5);
  const std::vector<double> want = {0.25, 0.5, 0.75, 1.0, 1.25};
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(g.at(i, "a_physical") == want[i]);
}

TEST_CASE("sweep output is ordered whatever the worker count") {
  const std::vector<std::string> args = {"sweep", "--a-min", "0.5", "--a-max", "1.5", "--a-steps", "3"};
  ::setenv("KINJUMP_THREADS", "1", 1);
  CHECK(cli::worker_count() == 1);
  const auto one = run(args);
  ::setenv("KINJUMP_THREADS", "3", 1);
  CHECK(cli::worker_count() == 3);
  const auto three = run(args);
  ::unsetenv("KINJUMP_THREADS");
  REQUIRE(one.code == cli::kOk);
  CHECK(one.out == three.out);
  const auto t = parse_csv(one.out);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.at(0, "a_physical") == 0.5);
  CHECK(t.at(1, "a_physical") == 1.0);
  CHECK(t.at(2, "a_physical") == 1.5);
}

TEST_CASE("validate report") {
  const auto r = run({"validate", "--a", "1.0"});
  REQUIRE(r.code == cli::kOk);
  const auto j = json::parse(r.out);
  CHECK(j["pass"] == true);
  REQUIRE(j["relative_difference"].size() == 4);
  for (const auto& [k, v] : j["relative_difference"].items()) CHECK(v.get<double>() < 1e-2);
  const auto o = json::parse(run({"validate", "--a", "0.5", "--nx", "300"}).out);
  CHECK(o["oracle_metadata"]["nx"] == 300);
}

TEST_CASE("field dumps") {
  const auto dir = scratch_dir();
  const auto pa = (dir / "analytic.csv").string();
  const auto po = (dir / "oracle.csv").string();
  REQUIRE(run({"field", "--a", "1.0", "--U", "0.3", "--gT", "1", "--out", pa}).code == cli::kOk);
  REQUIRE(run({"field", "--a", "1.0", "--U", "0.3", "--gT", "1", "--source", "oracle", "--out", po}).code ==
          cli::kOk);
  const auto ta = parse_csv(slurp(pa));
  const auto to = parse_csv(slurp(po));
  CHECK(ta.header == std::vector<std::string>{"x", "mu", "h"});
  CHECK(to.header == ta.header);
  REQUIRE(ta.rows.size() == to.rows.size());
  const auto side = json::parse(slurp(pa + ".json"));
  for (const char* key : {"a", "a_physical", "U", "g_T", "eps_T", "eps_n", "x", "mu"}) CHECK(side.contains(key));
  CHECK(side["source"] == "analytic");
  CHECK(json::parse(slurp(po + ".json"))["source"] == "oracle");

  // Far from the wall the analytic field is its asymptote.
  const GasModel m(rescale_slope(1.0));
  AsymptoticState s;
  s.U = 0.3;
  s.g_T = 1.0;
  s.eps_n = side["eps_n"];
  s.eps_T = side["eps_T"];
  const double scale = 1.0;
  double x20 = 0.0;
  for (const auto& row : ta.rows) {
    if (std::abs(row[0] - 20.0) < std::abs(x20 - 20.0)) x20 = row[0];
  }
  double far = 0.0;
  for (const auto& row : ta.rows) {
    if (row[0] == x20) far = std::max(far, std::abs(row[2] - m.h_asymptotic(row[0], row[1], s)));
  }
  CHECK(std::abs(x20 - 20.0) < 0.5);
  CHECK(far < 1e-6 * scale);

  // Oracle and analytic fields agree in the rho-weighted mean square.
  double num = 0.0, den = 0.0;
  bool same_grid = true;
  for (std::size_t i = 0; i < ta.rows.size(); ++i) {
    same_grid = same_grid && ta.rows[i][0] == to.rows[i][0] && ta.rows[i][1] == to.rows[i][1];
    const double w = m.weight(ta.rows[i][1]);
    const double d = ta.rows[i][2] - to.rows[i][2];
    num += w * d * d;
    den += w;
  }
  CHECK(same_grid);
  CHECK(std::sqrt(num / den) < 1e-2 * scale);
}
