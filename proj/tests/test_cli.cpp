#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cli.hpp"
#include "scpv/json_io.hpp"
#include "scpv/lpfile.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace scpv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = scpv::cli::run_command(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("scpverify_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("verify on the small knapsack stalls after one step") {
  const auto dir = scratch("knap");
  const auto r = invoke({"verify", "--family", "knapsack", "--n", "3", "--metric", "violation", "--K", "3",
                      "--tau0", "1", "--kappa", "2", "--samples", "20", "--out", dir.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "verify.csv");
  REQUIRE(rows.size() == 5);  // header + K = 0..3
  CHECK(rows[0][0] == "K");
  std::vector<double> delta;
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stoi(rows[i][0]) == static_cast<int>(i) - 1);
    delta.push_back(std::stod(rows[i][1]));
  }
  CHECK(delta[0] > delta[1]);
  CHECK(std::abs(delta[2] - delta[1]) <= 1e-6);
  CHECK(std::abs(delta[3] - delta[1]) <= 1e-6);
  const Json j = load_json((dir / "verify.json").string());
  for (const auto& e : j["results"]) CHECK(e["cross_check"] == true);
}

TEST_CASE("sample output is deterministic") {
  const auto a = scratch("sa"), b = scratch("sb");
  for (const auto& d : {a, b})
    REQUIRE(invoke({"sample", "--family", "box_qp", "--n", "2", "--samples", "10", "--seed", "7", "--out",
                 d.string()}).code == 0);
  CHECK(slurp(a / "sample.json") == slurp(b / "sample.json"));
  CHECK(slurp(a / "sample.csv") == slurp(b / "sample.csv"));
  const Json j = load_json((a / "sample.json").string());
  CHECK(j["num_samples"] == 10);
  CHECK(read_csv(a / "sample.csv")[0] == std::vector<std::string>{"iteration", "value"});
}

TEST_CASE("export writes a reader-compatible LP file and problem file") {
  const auto dir = scratch("export");
  const auto r = invoke({"export", "--family", "sparse_coding", "--json", "--out", dir.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const VerificationProgram p = read_lp((dir / "program_K1.lp").string());
  const Json pj = load_json((dir / "program_K1.json").string());
  CHECK(pj["vars"].size() == static_cast<size_t>(p.num_vars()));
  CHECK(pj["rows"].size() == p.rows.size());
  // The exported problem file drives the same pipeline.
  const auto dir2 = scratch("export2");
  const auto r2 = invoke({"export", "--problem-file", (dir / "problem.json").string(), "--out", dir2.string()});
  INFO(r2.err);
  REQUIRE(r2.code == 0);
  CHECK(slurp(dir / "program_K1.lp") == slurp(dir2 / "program_K1.lp"));
}

TEST_CASE("run and obbt emit parseable output") {
  const auto dir = scratch("run");
  REQUIRE(invoke({"run", "--family", "box_qp", "--x", "2.5,3.5", "--out", dir.string()}).code == 0);
  const Json t = load_json((dir / "trace.json").string());
  CHECK(t["x"][0] == 2.5);
  CHECK(t.contains("fstar"));
  CHECK(read_csv(dir / "trace.csv").size() == t["iterates"].size() + 1);
  REQUIRE(invoke({"obbt", "--family", "box_qp", "--K", "1", "--out", dir.string()}).code == 0);
  const Json o = load_json((dir / "obbt.json").string());
  CHECK(o["duals_tightened"].get<int>() >= 1);
}

TEST_CASE("farkas grid output") {
  const auto dir = scratch("farkas");
  const auto r = invoke({"farkas", "--family", "hybrid_vehicle", "--eta", "0", "--grid", "p_ub=0.2,0.4",
                      "--rel-gap", "0", "--out", dir.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "farkas.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].back() == "feasible");
  CHECK(rows[2].back() == "infeasible");
}

TEST_CASE("exit codes") {
  CHECK(invoke({"verify", "--family", "nope"}).code == 2);
  CHECK(invoke({"verify", "--family", "box_qp", "--bogus"}).code == 2);
  CHECK(invoke({"verify"}).code == 2);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"verify", "--family", "box_qp", "--kappa", "2"}).code == 2);
  CHECK(invoke({"verify", "--family", "box_qp", "--problem-file", "x.json"}).code == 2);
  CHECK(invoke({"verify", "--problem-file", "/nonexistent/p.json"}).code == 2);
  CHECK(invoke({"verify", "--family", "box_qp", "--inexact", "fuzzy:1"}).code == 2);
  CHECK(invoke({"sample", "--family", "box_qp", "--out", "/proc/forbidden"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
  // A time limit too short to close the gap gives no certificate.
  const auto dir = scratch("limit");
  CHECK(invoke({"verify", "--family", "sparse_coding", "--time-limit", "0.05", "--out", dir.string()}).code == 3);
}
