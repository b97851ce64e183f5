#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

// End-to-end checks of the installed subcommands and exit codes.

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::string& capture_dir) {
  const std::string cmd = std::string(PLBRANCH_CLI_BIN) + " " + args + " >" + capture_dir +
                          "/stdout.txt 2>" + capture_dir + "/stderr.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string work_dir() {
  static int counter = 0;
  const std::string dir = "cli_test_out_" + std::to_string(counter++);
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  return dir;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

const std::string kConfigDir = PLBRANCH_CONFIG_DIR;

// sup of the solution of -u'' = u^{-1} on (0,1), frozen from an M = 4096
// reference solve (self-convergence oracle; see test_plap.cpp).
constexpr double kPinnedMaxU = 0.398936145994224;

}  // namespace

TEST_CASE("solve writes one CSV row per node plus a header") {
  const std::string dir = work_dir();
  const int code = run_cli("solve --config " + kConfigDir + "default.cfg --alpha 1 --out " + dir, dir);
  REQUIRE(code == 0);
  const std::string csv = slurp(dir + "/solve.csv");
  CHECK(count_lines(csv) == 256 + 1 + 1);  // mesh.M + 1 nodes + header
  CHECK(csv.rfind("x,u,lower_barrier,upper_barrier", 0) == 0);
  CHECK(slurp(dir + "/solve.json").find("\"converged\": true") != std::string::npos);
}

TEST_CASE("solve max field value matches the pinned fine-grid reference") {
  // Reference computed once from a 16x finer solve of the same problem
  // (p=2, delta=1, a=1, b=0, alpha=1 on (0,1)); see test_plap.cpp for the
  // self-convergence check backing it.
  const std::string dir = work_dir();
  const int code =
      run_cli("solve --config " + kConfigDir + "scaling_b0.cfg --alpha 1 --out " + dir, dir);
  REQUIRE(code == 0);
  const std::string csv = slurp(dir + "/solve.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  double max_u = 0.0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    max_u = std::max(max_u, std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
  }
  CHECK(std::abs(max_u - kPinnedMaxU) < 1e-3);
}

TEST_CASE("malformed config exits with code 2 and names the constraint") {
  const std::string dir = work_dir();
  const int code = run_cli("solve --config " + kConfigDir + "bad_beta.cfg --alpha 1 --out " + dir, dir);
  CHECK(code == 2);
  CHECK(slurp(dir + "/stderr.txt").find("beta must satisfy") != std::string::npos);
}

TEST_CASE("missing required flags exit with code 2") {
  const std::string dir = work_dir();
  CHECK(run_cli("solve --alpha 1", dir) == 2);
}

TEST_CASE("unreachable tolerance exits with code 3") {
  const std::string dir = work_dir();
  CHECK(run_cli("solve --config " + kConfigDir + "diverge.cfg --alpha 1 --out " + dir, dir) == 3);
}

TEST_CASE("trace on the r=0 config writes lambda equal to alpha") {
  const std::string dir = work_dir();
  const int code = run_cli("trace --config " + kConfigDir + "identity.cfg --out " + dir, dir);
  REQUIRE(code == 0);
  const std::string csv = slurp(dir + "/branch.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    CHECK(line.substr(0, c1) == line.substr(c1 + 1, c2 - c1 - 1));
  }
}

TEST_CASE("identical trace runs are byte-identical") {
  const std::string d1 = work_dir(), d2 = work_dir();
  REQUIRE(run_cli("trace --config " + kConfigDir + "identity.cfg --out " + d1, d1) == 0);
  REQUIRE(run_cli("trace --config " + kConfigDir + "identity.cfg --out " + d2, d2) == 0);
  CHECK(slurp(d1 + "/branch.csv") == slurp(d2 + "/branch.csv"));
  CHECK(slurp(d1 + "/branch.csv").size() > 0);
}

TEST_CASE("case1b trace reports the label and lambda star") {
  const std::string dir = work_dir();
  const int code = run_cli("trace --config " + kConfigDir + "case1b.cfg --out " + dir, dir);
  REQUIRE(code == 0);
  const std::string json = slurp(dir + "/branch.json");
  CHECK(json.find("\"case_label\": \"Case1b\"") != std::string::npos);
  CHECK(json.find("\"lambda_star\": null") == std::string::npos);
}

TEST_CASE("verify passes on a well-posed config and fails on inverted barriers") {
  const std::string d1 = work_dir();
  CHECK(run_cli("verify --config " + kConfigDir + "verify_fast.cfg --out " + d1, d1) == 0);
  const std::string d2 = work_dir();
  CHECK(run_cli("verify --config " + kConfigDir + "inverted_barriers.cfg --out " + d2, d2) == 1);
  CHECK(slurp(d2 + "/stdout.txt").find("[FAIL] sandwich") != std::string::npos);
}

TEST_CASE("eig and torsion subcommands emit their fields") {
  const std::string dir = work_dir();
  REQUIRE(run_cli("eig --config " + kConfigDir + "verify_fast.cfg --out " + dir, dir) == 0);
  CHECK(slurp(dir + "/eig.csv").rfind("x,phi1,H1", 0) == 0);
  REQUIRE(run_cli("torsion --config " + kConfigDir + "verify_fast.cfg --out " + dir, dir) == 0);
  CHECK(slurp(dir + "/torsion.csv").rfind("x,e,H2", 0) == 0);
}
