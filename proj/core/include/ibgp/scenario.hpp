#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ibgp {

// Field overrides supplied by the caller (the CLI maps its flags here).
// Values present here win over the scenario file. `out_dir` empty means
// compute only: no files are written and no manifest is produced.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> budget;
  std::optional<int> jobs;
  std::string out_dir;
};

struct RunOutcome {
  // 0: ran clean. 1: ran to completion but an enforced check failed
  // (reasons in check_failures). Configuration and budget problems throw
  // instead (ConfigError, BudgetError).
  int exit_code = 0;
  std::string command;
  std::string result_json;
  std::string csv;
  std::string csv_name;  // "<command>.csv"
  std::string manifest_json;
  std::vector<std::string> written;  // absolute paths, in write order
  std::vector<std::string> check_failures;
};

// Runs the scenario described by a JSON document. `expect_command`, when
// nonempty, must match the scenario's "command" field. Everything is
// validated and computed before the first byte is written; outputs are
// result.json, <command>.csv and manifest.json. All output bytes are
// deterministic for a given scenario and seed except the manifest's
// wall_time_ms field.
RunOutcome run_scenario_json(const std::string& json_text,
                             const std::string& expect_command = {},
                             const RunOptions& options = {});
RunOutcome run_scenario_file(const std::string& path,
                             const std::string& expect_command = {},
                             const RunOptions& options = {});

}  // namespace ibgp
