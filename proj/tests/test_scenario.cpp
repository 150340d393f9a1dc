#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ibgp/errors.hpp"
#include "ibgp/scenario.hpp"
#include "ibgp/sha256.hpp"

using namespace ibgp;
using nlohmann::json;

namespace {

const char* kVerifyAnchor = R"({
  "command": "verify",
  "seed": 1,
  "params": {
    "n": 5, "t": 1, "k": 3, "lambda": 1,
    "rounds": {"uniform": 3}
  }
})";

std::string simulate_scenario(std::uint64_t trials) {
  json doc;
  doc["command"] = "simulate";
  doc["seed"] = 4;
  doc["trials"] = trials;
  doc["params"]["n"] = 5;
  doc["params"]["t"] = 1;
  doc["params"]["k"] = 3;
  doc["params"]["lambda"] = 1;
  doc["params"]["rounds"]["uniform"] = 3;
  doc["params"]["observations"]["observers"] = 3;
  doc["params"]["attacker"]["name"] = "random_p";
  doc["params"]["attacker"]["p"] = 0.5;
  return doc.dump();
}

// Runs a scenario expected to be rejected and returns the error text.
std::string rejection(const std::string& scenario) {
  try {
    run_scenario_json(scenario);
  } catch (const ConfigError& e) {
    return e.what();
  }
  REQUIRE_MESSAGE(false, "scenario was not rejected: ", scenario);
  return {};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ibgp_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("a verify scenario runs clean and reports exact probabilities") {
  auto out = run_scenario_json(kVerifyAnchor);
  CHECK(out.exit_code == 0);
  CHECK(out.command == "verify");
  CHECK(out.check_failures.empty());
  CHECK(out.csv_name == "verify.csv");
  CHECK(out.written.empty());

  auto result = json::parse(out.result_json);
  CHECK(result["worst_mis"] == "1/3");
  CHECK(result["bound"] == "1/3");
  CHECK(result["mis_within_bound"] == true);
  REQUIRE(result["checks"].size() == 1);
  CHECK(result["checks"][0]["name"] == "mis_within_bound");
  CHECK(result["checks"][0]["passed"] == true);

  CHECK(out.csv.rfind("observers,worst_mis,worst_false\n", 0) == 0);
  CHECK(out.csv.find("3,1/3,0") != std::string::npos);
}

TEST_CASE("scenario runs are byte-deterministic") {
  auto a = run_scenario_json(kVerifyAnchor);
  auto b = run_scenario_json(kVerifyAnchor);
  CHECK(a.result_json == b.result_json);
  CHECK(a.csv == b.csv);

  auto s1 = run_scenario_json(simulate_scenario(800));
  auto s2 = run_scenario_json(simulate_scenario(800));
  CHECK(s1.result_json == s2.result_json);
  CHECK(s1.csv == s2.csv);
}

TEST_CASE("the job count never changes the bytes, only the wall time") {
  RunOptions one;
  one.jobs = 1;
  RunOptions four;
  four.jobs = 4;
  auto a = run_scenario_json(simulate_scenario(1000), "simulate", one);
  auto b = run_scenario_json(simulate_scenario(1000), "simulate", four);
  CHECK(a.result_json == b.result_json);
  CHECK(a.csv == b.csv);
}

TEST_CASE("command-line style overrides beat the scenario values") {
  RunOptions options;
  options.seed = 99;
  options.trials = 250;
  auto out = run_scenario_json(simulate_scenario(800), "simulate", options);
  auto result = json::parse(out.result_json);
  CHECK(result["seed"] == 99);
  CHECK(result["trials"] == 250);

  auto base = run_scenario_json(simulate_scenario(800));
  auto base_result = json::parse(base.result_json);
  CHECK(base_result["seed"] == 4);
  CHECK(base_result["trials"] == 800);
}

TEST_CASE("the expected command must match the scenario") {
  CHECK_THROWS_AS(run_scenario_json(kVerifyAnchor, "simulate"), ConfigError);
  CHECK_NOTHROW(run_scenario_json(kVerifyAnchor, "verify"));
}

TEST_CASE("schema violations are rejected with their JSON path") {
  CHECK(rejection(R"({"comand": "verify"})").find("$.comand") !=
        std::string::npos);
  CHECK(rejection(R"({"comand": "verify"})").find("unknown field") !=
        std::string::npos);
  CHECK(rejection(R"({"command": "verify", "extra": 1, "params": {}})")
            .find("extra") != std::string::npos);
  CHECK(rejection(R"({"command": "levitate"})").find("$.command") !=
        std::string::npos);
  CHECK(rejection(R"({"command": "verify", "seed": "abc", "params": {}})")
            .find("$.seed") != std::string::npos);
  CHECK(rejection("{\"command\"").find("not valid JSON") != std::string::npos);

  std::string missing_k = R"({
    "command": "verify",
    "params": {"n": 5, "t": 1, "lambda": 1, "rounds": {"uniform": 3}}
  })";
  CHECK(rejection(missing_k).find("$.params.k") != std::string::npos);

  std::string unknown_param = R"({
    "command": "verify",
    "params": {"n": 5, "t": 1, "k": 3, "lambda": 1,
               "rounds": {"uniform": 3}, "fanciness": true}
  })";
  CHECK(rejection(unknown_param).find("fanciness") != std::string::npos);
}

TEST_CASE("round distribution nodes are validated in place") {
  auto scenario = [](const std::string& rounds) {
    return std::string(R"({"command": "verify", "params": {"n": 5, "t": 1,
      "k": 3, "lambda": 1, "rounds": )") +
           rounds + "}}";
  };
  CHECK(rejection(scenario(R"({"uniform": 3, "point": 1})"))
            .find("$.params.rounds") != std::string::npos);
  CHECK(rejection(scenario(R"({})")).find("$.params.rounds") !=
        std::string::npos);
  CHECK(rejection(scenario(R"({"pmf": [[1, "1/2"]]})"))
            .find("$.params.rounds") != std::string::npos);
  CHECK(rejection(scenario(R"({"pmf": [[1, "abc"]]})"))
            .find("$.params.rounds.pmf") != std::string::npos);
  CHECK(rejection(scenario(R"({"pmf": [[1, "1/0"]]})"))
            .find("denominator") != std::string::npos);
  CHECK(rejection(scenario(R"({"uniform_range": [4, 2]})"))
            .find("$.params.rounds") != std::string::npos);

  auto ok = run_scenario_json(scenario(R"({"pmf": [[1, "1/3"], [3, "2/3"]]})"));
  auto result = json::parse(ok.result_json);
  CHECK(result["bound"] == "2/3");
}

TEST_CASE("attacker nodes accept p only for the random strategy") {
  auto scenario = [](const std::string& attacker) {
    return std::string(R"({"command": "simulate", "trials": 50, "params": {
      "n": 5, "t": 1, "k": 3, "lambda": 1, "rounds": {"uniform": 3},
      "observations": {"observers": 3}, "attacker": )") +
           attacker + "}}";
  };
  CHECK(rejection(scenario(R"({"name": "all_one", "p": 0.5})"))
            .find("$.params.attacker.p") != std::string::npos);
  CHECK(rejection(scenario(R"({"name": "nope"})")).find("attacker") !=
        std::string::npos);
  CHECK(rejection(scenario(R"({"name": "random_p", "p": 1.5})"))
            .find("$.params.attacker.p") != std::string::npos);
  CHECK_NOTHROW(run_scenario_json(scenario(R"({"name": "all_one"})")));
}

TEST_CASE("observation nodes demand exactly one spelling") {
  auto scenario = [](const std::string& obs) {
    return std::string(R"({"command": "simulate", "trials": 50, "params": {
      "n": 5, "t": 1, "k": 3, "lambda": 1, "rounds": {"uniform": 3},
      "observations": )") +
           obs + R"(, "attacker": {"name": "all_one"}}})";
  };
  CHECK(rejection(scenario(R"({"pattern": "11100", "observers": 3})"))
            .find("exactly one") != std::string::npos);
  CHECK(rejection(scenario(R"({})")).find("exactly one") != std::string::npos);
  CHECK(rejection(scenario(R"({"pattern": "111"})")).find("length") !=
        std::string::npos);
  CHECK(rejection(scenario(R"({"pattern": "11x00"})")).find("0s and 1s") !=
        std::string::npos);
  CHECK(rejection(scenario(R"({"observers": 6})")).find("[0, n]") !=
        std::string::npos);

  auto by_pattern = run_scenario_json(scenario(R"({"pattern": "11100"})"));
  auto by_count = run_scenario_json(scenario(R"({"observers": 3})"));
  CHECK(json::parse(by_pattern.result_json)["observations"] == "11100");
  CHECK(by_pattern.result_json == by_count.result_json);
}

TEST_CASE("sensor scenarios gate the offset on the attack mode") {
  std::string base = R"({"command": "sensor", "params": {"mode": "silent",
    "offset_cells": 3}})";
  CHECK(rejection(base).find("offset_cells") != std::string::npos);

  std::string ok = R"({"command": "sensor", "params": {"mode": "fake_offset",
    "offset_cells": 3, "trajectory": {"start": 0.0, "velocity": 1.0,
    "steps": 10}}})";
  auto out = run_scenario_json(ok);
  CHECK(out.exit_code == 0);
  auto result = json::parse(out.result_json);
  CHECK(result["algorithm"] == "consensus");
  CHECK(result["all_consistent"] == true);
  CHECK(result["checks"][0]["name"] == "beliefs_consistent");
  CHECK(result["checks"][0]["passed"] == true);
}

TEST_CASE("oversized exact runs surface a budget refusal") {
  std::string raw_big = R"({"command": "verify", "params": {"n": 6, "t": 2,
    "k": 2, "lambda": 2, "rounds": {"uniform": 3}, "mode": "raw"}})";
  CHECK_THROWS_AS(run_scenario_json(raw_big), BudgetError);
}

TEST_CASE("the selection experiment honestly reports its failed factor check") {
  // Seed 1 pins an instance stream whose draw 56 beats greedy by more than
  // the optimistic optimal-over-max-quorum factor, so the enforced check
  // fails by design and the run exits nonzero.
  std::string scenario = R"({"command": "select", "seed": 1,
    "params": {"instances": 60}})";
  auto out = run_scenario_json(scenario);
  CHECK(out.exit_code == 1);
  REQUIRE(out.check_failures.size() == 1);
  CHECK(out.check_failures[0].find("greedy_within_quorum_factor") !=
        std::string::npos);

  auto result = json::parse(out.result_json);
  bool found_violation = false;
  for (const auto& row : result["rows"]) {
    if (row["instance"] == 56) {
      CHECK(row["valid"] == true);
      CHECK(row["ratio"].get<double>() < 0.5);
      found_violation = true;
    }
  }
  CHECK(found_violation);

  for (const auto& check : result["checks"]) {
    if (check["name"] == "greedy_selection_valid") CHECK(check["passed"] == true);
    if (check["name"] == "greedy_within_quorum_factor") {
      CHECK(check["passed"] == false);
    }
  }

  std::string fewer = R"({"command": "select", "seed": 1,
    "params": {"instances": 40}})";
  CHECK(run_scenario_json(fewer).exit_code == 0);
}

TEST_CASE("written outputs match the in-memory bytes and the manifest") {
  TempDir dir;
  RunOptions options;
  options.out_dir = dir.path.string();
  auto out = run_scenario_json(kVerifyAnchor, "verify", options);

  REQUIRE(out.written.size() == 3);
  CHECK(slurp(out.written[0]) == out.result_json);
  CHECK(slurp(out.written[1]) == out.csv);
  CHECK(slurp(out.written[2]) == out.manifest_json);

  auto manifest = json::parse(out.manifest_json);
  CHECK(manifest["tool"] == "ibgp");
  CHECK(manifest["command"] == "verify");
  CHECK(manifest["scenario_sha256"] == sha256_hex(kVerifyAnchor));
  REQUIRE(manifest["outputs"].size() == 2);
  CHECK(manifest["outputs"][0]["file"] == "result.json");
  CHECK(manifest["outputs"][0]["sha256"] == sha256_hex(out.result_json));
  CHECK(manifest["outputs"][0]["bytes"] == out.result_json.size());
  CHECK(manifest["outputs"][1]["file"] == "verify.csv");
  CHECK(manifest["outputs"][1]["sha256"] == sha256_hex(out.csv));
  CHECK(manifest["wall_time_ms"].is_number());
}

TEST_CASE("scenario files are read verbatim from disk") {
  TempDir dir;
  auto path = (dir.path / "scenario.json").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << kVerifyAnchor;
  }
  auto from_file = run_scenario_file(path, "verify");
  auto from_text = run_scenario_json(kVerifyAnchor, "verify");
  CHECK(from_file.result_json == from_text.result_json);

  CHECK_THROWS_AS(run_scenario_file((dir.path / "missing.json").string()),
                  ConfigError);
}

TEST_CASE("jobs must be positive when overridden") {
  RunOptions options;
  options.jobs = 0;
  CHECK_THROWS_AS(run_scenario_json(kVerifyAnchor, "verify", options),
                  ConfigError);
  CHECK(rejection(R"({"command": "verify", "jobs": -2, "params": {
    "n": 5, "t": 1, "k": 3, "lambda": 1, "rounds": {"uniform": 3}}})")
            .find("jobs") != std::string::npos);
}
