#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#ifndef IBGP_CLI_PATH
#error "IBGP_CLI_PATH must point at the built command line tool"
#endif

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ibgp_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }

  std::string file(const std::string& name, const std::string& content) const {
    auto p = (path / name).string();
    std::ofstream f(p, std::ios::binary);
    f << content;
    return p;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  TempDir scratch;
  auto out_path = scratch.path / "stdout";
  auto err_path = scratch.path / "stderr";
  std::string command = std::string(IBGP_CLI_PATH) + " " + args + " > " +
                        out_path.string() + " 2> " + err_path.string();
  int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

const char* kVerifyAnchor = R"({
  "command": "verify",
  "seed": 1,
  "params": {"n": 5, "t": 1, "k": 3, "lambda": 1, "rounds": {"uniform": 3}}
})";

}  // namespace

TEST_CASE("a clean run prints the result document and exits zero") {
  TempDir dir;
  auto scenario = dir.file("verify.json", kVerifyAnchor);
  auto res = run_cli("verify --scenario " + scenario);
  CHECK(res.exit_code == 0);
  CHECK(res.err.empty());
  auto result = json::parse(res.out);
  CHECK(result["worst_mis"] == "1/3");
}

TEST_CASE("help is help and bad usage is an error") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("verify --help").exit_code == 0);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("transmogrify").exit_code == 2);
  CHECK(run_cli("verify").exit_code == 2);  // --scenario is required
  CHECK(run_cli("verify --scenario /definitely/not/a/file").exit_code == 2);
}

TEST_CASE("the subcommand must match the scenario's command") {
  TempDir dir;
  auto scenario = dir.file("verify.json", kVerifyAnchor);
  auto res = run_cli("simulate --scenario " + scenario);
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("error:") != std::string::npos);
}

TEST_CASE("an over-budget exact run exits with the refusal code") {
  TempDir dir;
  auto scenario = dir.file("raw.json", R"({"command": "verify", "params": {
    "n": 6, "t": 2, "k": 2, "lambda": 2, "rounds": {"uniform": 3},
    "mode": "raw"}})");
  auto res = run_cli("verify --scenario " + scenario);
  CHECK(res.exit_code == 3);
  CHECK(res.err.find("budget refused") != std::string::npos);
}

TEST_CASE("a failed enforced check exits one and says which check") {
  TempDir dir;
  auto scenario = dir.file("select.json",
                           R"({"command": "select", "seed": 1,
                               "params": {"instances": 60}})");
  auto res = run_cli("select --scenario " + scenario);
  CHECK(res.exit_code == 1);
  CHECK(res.err.find("check failed") != std::string::npos);
  CHECK(res.err.find("greedy_within_quorum_factor") != std::string::npos);
}

TEST_CASE("flag overrides reach the run") {
  TempDir dir;
  auto scenario = dir.file("sim.json", R"({"command": "simulate", "seed": 4,
    "trials": 400, "params": {"n": 5, "t": 1, "k": 3, "lambda": 1,
    "rounds": {"uniform": 3}, "observations": {"observers": 3},
    "attacker": {"name": "all_one"}}})");
  auto res = run_cli("simulate --scenario " + scenario + " --seed 9 --trials 200");
  CHECK(res.exit_code == 0);
  auto result = json::parse(res.out);
  CHECK(result["seed"] == 9);
  CHECK(result["trials"] == 200);
}

TEST_CASE("two runs into different directories produce identical artifacts") {
  TempDir dir;
  auto scenario = dir.file("verify.json", kVerifyAnchor);
  auto a = dir.path / "a";
  auto b = dir.path / "b";
  auto res_a = run_cli("verify --scenario " + scenario + " --out " + a.string());
  auto res_b = run_cli("verify --scenario " + scenario + " --out " + b.string());
  CHECK(res_a.exit_code == 0);
  CHECK(res_b.exit_code == 0);
  CHECK(res_a.out.find("result.json") != std::string::npos);

  CHECK(slurp(a / "result.json") == slurp(b / "result.json"));
  CHECK(slurp(a / "verify.csv") == slurp(b / "verify.csv"));

  auto ma = json::parse(slurp(a / "manifest.json"));
  auto mb = json::parse(slurp(b / "manifest.json"));
  ma.erase("wall_time_ms");
  mb.erase("wall_time_ms");
  CHECK(ma == mb);
}
